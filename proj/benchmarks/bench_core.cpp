#include <benchmark/benchmark.h>

#include "lapgrowth/homogenization_lab.hpp"

using namespace lapgrowth;

namespace {

KernelSpec unit_speed() { return {KernelFamily::wrapped_gaussian, 0.3, 0.0, KernelNormalization::unit_normal_speed}; }

Scenario circle(std::size_t nodes) { return Scenario::circle(1.0, nodes, unit_speed()); }

}  // namespace

static void BM_VerticalStep(benchmark::State& state) {
    CounterRng rng(1, 0);
    double depth = 0.1;
    for (auto _ : state) {
        depth = vertical_step(depth, 1e-3, rng).depth;
        benchmark::DoNotOptimize(depth);
    }
}
BENCHMARK(BM_VerticalStep);

static void BM_FlowRhs(benchmark::State& state) {
    const auto sc = circle(static_cast<std::size_t>(state.range(0)));
    const Kernel k(sc.kernel, sc.mesh);
    const auto phi = sc.initial();
    for (auto _ : state) benchmark::DoNotOptimize(flow_rhs(phi, k));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FlowRhs)->RangeMultiplier(2)->Range(64, 512)->Complexity(benchmark::oNSquared);

static void BM_TraceSample(benchmark::State& state) {
    const auto sc = circle(256);
    const auto model = sc.model();
    const auto field = model.field(sc.initial());
    const double delta = static_cast<double>(state.range(0)) / 100.0;
    std::uint64_t stream = 0;
    for (auto _ : state) {
        CounterRng rng(7, stream++);
        benchmark::DoNotOptimize(sample_trace(field, sc.z0, delta, rng, model.sde));
    }
}
BENCHMARK(BM_TraceSample)->Arg(10)->Arg(20)->Arg(100);

static void BM_Bump(benchmark::State& state) {
    const auto sc = circle(256);
    const Kernel k(sc.kernel, sc.mesh);
    const auto phi = sc.initial();
    for (auto _ : state) benchmark::DoNotOptimize(bump(phi, {0, 1.0}, 0.02, k));
}
BENCHMARK(BM_Bump);

static void BM_GrowthStep(benchmark::State& state) {
    const auto sc = circle(256);
    const auto model = sc.model();
    GrowthState gs{sc.z0, sc.initial()};
    for (auto _ : state) {
        if (gs.exploded || gs.jump_count > 200) gs = GrowthState{sc.z0, sc.initial()};
        benchmark::DoNotOptimize(growth_step(gs, 0.02, std::sqrt(0.02), model, 1));
    }
}
BENCHMARK(BM_GrowthStep);

BENCHMARK_MAIN();
