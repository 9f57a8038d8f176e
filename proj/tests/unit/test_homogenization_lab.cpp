#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include <json.hpp>

#include "lapgrowth/homogenization_lab.hpp"

using namespace lapgrowth;

namespace {

constexpr double kPi = std::numbers::pi;

KernelSpec unit_speed(KernelFamily family = KernelFamily::wrapped_gaussian) {
    return {family, 0.3, 0.0, KernelNormalization::unit_normal_speed};
}

std::vector<std::uint64_t> seed_list(std::size_t n) {
    std::vector<std::uint64_t> s;
    for (std::size_t i = 1; i <= n; ++i) s.push_back(i);
    return s;
}

}  // namespace

TEST(DeltaSchedule, SqrtAndFixed) {
    EXPECT_DOUBLE_EQ(DeltaSchedule::sqrt_eps()(0.04), 0.2);
    EXPECT_DOUBLE_EQ(DeltaSchedule::sqrt_eps(2.0)(0.01), 0.2);
    EXPECT_EQ(DeltaSchedule::fixed(0.3)(0.01), 0.3);
    EXPECT_THROW(DeltaSchedule::sqrt_eps()(0.0), InvalidArgument);
}

TEST(MacroReference, CircleInflatesLinearly) {
    auto sc = Scenario::circle(1.0, 128, unit_speed(), 0.5, 6);
    Kernel k(sc.kernel, sc.mesh);
    const auto ref = macro_reference(sc.initial(), k, sc.snapshot_times, 1e-3);
    ASSERT_EQ(ref.size(), sc.snapshot_times.size());
    EXPECT_EQ(ref[0].values(), sc.mesh->points());
    for (std::size_t s = 0; s < ref.size(); ++s) {
        for (const auto& p : ref[s].values()) EXPECT_NEAR(p.norm(), 1.0 + sc.snapshot_times[s], 1e-4);
    }
}

TEST(MacroReference, ThrowsPastBlowup) {
    auto sc = Scenario::annulus(1.0, 2.0, 32, 64, unit_speed(), 20.0, 2);
    Kernel k(sc.kernel, sc.mesh);
    EXPECT_THROW(macro_reference(sc.initial(), k, sc.snapshot_times, 0.05), StateError);
}

TEST(Distances, C0AndC1) {
    auto mesh = std::make_shared<const BoundaryMesh>(BoundaryMesh::circle(1.0, 128));
    const auto a = InterfaceMap::identity(mesh);
    const auto b = a.scaled(1.5);
    EXPECT_NEAR(c0_distance(a, b), 0.5, 1e-12);
    // d/ds of the scaled map is 1.5 times the unit tangent
    EXPECT_NEAR(c1_distance(a, b), 0.5, 1e-6);
    EXPECT_EQ(c0_distance(a, a), 0.0);
}

TEST(Summarize, InfiniteValuesEnterQuantilesOnly) {
    const double inf = std::numeric_limits<double>::infinity();
    const auto s = summarize({1.0, 2.0, 3.0, inf});
    EXPECT_EQ(s.n, 3u);
    EXPECT_EQ(s.n_total, 4u);
    EXPECT_DOUBLE_EQ(s.mean, 2.0);
    EXPECT_NEAR(s.std_error, 1.0 / std::sqrt(3.0), 1e-12);
    EXPECT_DOUBLE_EQ(s.median, 2.5);
    EXPECT_TRUE(std::isinf(s.q75));
}

TEST(FluxCompare, ZeroKernelGivesZeroGap) {
    auto sc = Scenario::circle(1.0, 64, unit_speed(KernelFamily::zero), 0.2, 5);
    const auto model = sc.model();
    const auto rec = run_growth(sc.initial(), sc.z0, 0.02, 0.2, sc.t_max, sc.snapshot_times, model, 1);
    ASSERT_FALSE(rec.jumps.empty());
    const auto gap = flux_compare(rec, model, 8);
    EXPECT_EQ(gap.sup_gap, 0.0);
    EXPECT_EQ(gap.sup_std_error, 0.0);
    EXPECT_EQ(martingale_track(rec, model, 8).sup_over_path, 0.0);
}

TEST(FluxCompare, EffectiveFluxIsIntegratedFlowRhs) {
    auto sc = Scenario::circle(1.0, 64, unit_speed(), 0.3, 4);
    const auto model = sc.model();
    const auto rec = run_growth(sc.initial(), sc.z0, 0.04, 0.2, sc.t_max, sc.snapshot_times, model, 3);
    ASSERT_GT(rec.jumps.size(), 2u);
    const double t = 0.2;
    // left-rectangle integral over a fine grid of the piecewise-constant path,
    // split exactly at the jump times
    std::vector<double> cuts{0.0};
    for (const auto& j : rec.jumps) {
        if (j.time < t) cuts.push_back(j.time);
    }
    cuts.push_back(t);
    std::vector<Vec2> oracle(sc.mesh->node_count(), Vec2::Zero());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const auto v = flow_rhs(rec.state_at(cuts[k]), *model.kernel);
        for (std::size_t j = 0; j < v.size(); ++j) oracle[j] += (cuts[k + 1] - cuts[k]) * v[j];
    }
    const auto eff = effective_flux_integral(rec, *model.kernel, t);
    for (std::size_t j = 0; j < eff.size(); ++j) EXPECT_LT((eff[j] - oracle[j]).norm(), 1e-12);
}

TEST(FluxCompare, LargeDeltaSliceMatchesInvariantMeasure) {
    // No jump in the record, so F^eps(t) / t is the trace-draw mean from z0.
    auto sc = Scenario::circle(1.0, 64, unit_speed(), 1e-6, 2);
    const auto model = sc.model();
    const double delta = 4.0;
    const auto rec = run_growth(sc.initial(), sc.z0, 1.0, delta, sc.t_max, sc.snapshot_times, model, 1);
    ASSERT_TRUE(rec.jumps.empty());
    const std::size_t n = 4000;
    const auto flux = trace_flux(rec, model, n);
    ASSERT_EQ(flux.size(), 1u);

    // Exact trace law on the Euclidean unit disk: Poisson kernel, r = e^{-delta}.
    const double r = std::exp(-delta);
    const auto& mesh = *sc.mesh;
    const auto phi = sc.initial();
    const auto eff = flow_rhs(phi, *model.kernel);
    double bias = 0.0;
    for (std::size_t i = 0; i < mesh.node_count(); ++i) {
        Vec2 poisson = Vec2::Zero();
        for (std::size_t j = 0; j < mesh.node_count(); ++j) {
            const double th = mesh.component(0).knots[j];
            const double p = (1 - r * r) / (2 * kPi * (1 - 2 * r * std::cos(th) + r * r));
            poisson += mesh.weights()[j] * p * (*model.kernel)(mesh.node_point(i), mesh.node_point(j)) * phi.normal(j);
        }
        const double se = std::sqrt(flux[0].variance[i] / static_cast<double>(n));
        EXPECT_LT((flux[0].mean[i] - poisson).norm(), 5.0 * se) << "node " << i;
        bias = std::max(bias, (poisson - eff[i]).norm());
        // flux gap within the invariant-measure bias plus Monte Carlo error
        EXPECT_LT((flux[0].mean[i] - eff[i]).norm(), bias + 5.0 * se);
    }
    EXPECT_LT(bias, 0.5);
}

TEST(ConvergenceExperiment, ShortHorizonGapsVanish) {
    auto sc = Scenario::circle(1.0, 64, unit_speed(), 1e-3, 2);
    const auto rep = convergence_experiment(sc, {0.04, 0.02}, seed_list(8));
    ASSERT_EQ(rep.cells.size(), 2u);
    for (const auto& c : rep.cells) {
        EXPECT_LT(c.c0_gap.median, 5e-3);
        EXPECT_EQ(c.c0_gap.n, 8u);
    }
}

TEST(ConvergenceExperiment, ReportStructureAndThreadInvariance) {
    auto sc = Scenario::circle(1.0, 64, unit_speed(), 0.1, 3);
    ExperimentOptions opts;
    opts.compensator_samples = 8;
    const auto a = convergence_experiment(sc, {0.02, 0.04}, seed_list(4), opts);
    opts.threads = 3;
    const auto b = convergence_experiment(sc, {0.02, 0.04}, seed_list(4), opts);
    EXPECT_EQ(a.to_csv(), b.to_csv());
    EXPECT_EQ(a.cells.front().epsilon, 0.04);
    ASSERT_EQ(a.criteria.size(), 3u);

    const auto doc = nlohmann::json::parse(a.to_json());
    for (const auto& cell : doc["cells"]) {
        for (const char* key : {"c0_gap", "c1_gap", "flux_gap", "martingale_sup"}) {
            EXPECT_TRUE(cell[key].contains("std_error"));
            EXPECT_TRUE(cell[key].contains("n"));
        }
    }
    EXPECT_EQ(doc["cells"].size(), 2u);
}

TEST(ConvergenceExperiment, ExplodedRunsAreRecorded) {
    // On the annulus, bumps piled up by a localized particle fold the outer
    // boundary long before the macro collapse time.
    auto sc = Scenario::annulus(1.0, 2.0, 32, 64, unit_speed(), 2.0, 3);
    ExperimentOptions opts;
    opts.compensator_samples = 4;
    const auto rep = convergence_experiment(sc, {0.04}, seed_list(4), opts);
    const auto& cell = rep.cells.front();
    EXPECT_EQ(cell.seeds.size(), 4u);
    EXPECT_EQ(cell.c0_gap.n_total, 4u);
    EXPECT_EQ(cell.exploded, 4u - cell.c0_gap.n);
    for (const auto& s : cell.seeds) {
        if (s.exploded) {
            EXPECT_TRUE(std::isinf(s.c0_gap));
            EXPECT_GT(s.tau_sol_epsilon, 0.0);
            EXPECT_LE(s.tau_sol_epsilon, 2.0);
        }
    }
    EXPECT_GT(cell.exploded, 0u);
}

TEST(ChiIndependence, IdenticalProfilesGiveIdenticalRuns) {
    auto sc = Scenario::circle(1.0, 64, unit_speed(), 0.2, 2);
    ExperimentOptions opts;
    opts.compensator_samples = 4;
    const auto rep = chi_independence_check(sc, {Cutoff::quintic(), Cutoff::quintic()}, 0.04, seed_list(4), opts);
    ASSERT_EQ(rep.cells.size(), 2u);
    EXPECT_EQ(rep.median_gap, 0.0);
    for (std::size_t s = 0; s < 4; ++s) {
        EXPECT_EQ(rep.cells[0].seeds[s].c0_gap, rep.cells[1].seeds[s].c0_gap);
        EXPECT_EQ(rep.cells[0].seeds[s].martingale_sup, rep.cells[1].seeds[s].martingale_sup);
    }
    EXPECT_GT(rep.seed_iqr, 0.0);
}

TEST(ChiIndependence, Preconditions) {
    auto sc = Scenario::circle(1.0, 64, unit_speed(), 0.2, 2);
    EXPECT_THROW(chi_independence_check(sc, {Cutoff::quintic()}, 0.04, seed_list(4)), InvalidArgument);
    EXPECT_THROW(chi_independence_check(sc, {Cutoff::quintic(), Cutoff::septic()}, 0.04, seed_list(2)),
                 InvalidArgument);
    EXPECT_THROW(Cutoff::custom("shifted", [](double t) { return 0.1 + 0.9 * t * t * (3 - 2 * t); },
                                [](double t) { return 0.9 * 6 * t * (1 - t); }),
                 InvalidArgument);
}
