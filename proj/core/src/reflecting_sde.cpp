#include "lapgrowth/reflecting_sde.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "lapgrowth/parallel.hpp"
#include "lapgrowth/stats.hpp"

namespace lapgrowth {

namespace {

constexpr double kBumpMass = 1.2069003224378765;  // int_{-1}^{1} exp(1 - 1/(1 - t^2)) dt

double boundary_layer_bump(double depth, double beta0) {
    const double t = depth / beta0;
    if (t < 0.0 || t >= 1.0) return 0.0;
    return 2.0 * std::exp(1.0 - 1.0 / (1.0 - t * t)) / (beta0 * kBumpMass);
}

}  // namespace

VerticalStep vertical_step(double depth, double dt, CounterRng& rng, double drift, double variance) {
    if (!(dt > 0.0)) throw InvalidArgument("vertical_step needs dt > 0");
    VerticalStep out;
    const double w = drift * dt + std::sqrt(variance * dt) * rng.normal();
    out.free_end = depth + w;
    const double e = -std::log(rng.uniform());
    out.minimum = 0.5 * (depth + out.free_end - std::sqrt(w * w + 2.0 * variance * dt * e));
    out.local_time = std::max(0.0, -out.minimum);
    out.depth = std::max(0.0, out.free_end + out.local_time);
    return out;
}

double sample_inverse_gaussian(double mean, double shape, CounterRng& rng) {
    const double z = rng.normal();
    if (!std::isfinite(mean)) return shape / (z * z);
    const double y = z * z;
    const double r = mean * y / (2.0 * shape);
    // mean * (1 + r - sqrt(r^2 + 2r)), written without cancellation
    const double x = mean / (1.0 + r + std::sqrt(r * r + 2.0 * r));
    return rng.uniform() <= mean / (mean + x) ? x : mean * mean / x;
}

double bridge_hitting_time(double start, double end, double level, double dt, double variance, CounterRng& rng) {
    const double alpha = start - level;
    if (!(alpha > 0.0)) return 0.0;
    const double beta = std::abs(end - level);
    const double shape = alpha * alpha / variance;
    const double mean = beta > 0.0 ? alpha * dt / beta : std::numeric_limits<double>::infinity();
    const double s = sample_inverse_gaussian(mean, shape, rng);
    return std::min(dt, s * dt / (dt + s));
}

ParticleState ParticleState::on_boundary(const BoundaryPoint& z) {
    ParticleState s;
    s.mode = Mode::collar;
    s.foot = z;
    s.depth = 0.0;
    return s;
}

ParticleState ParticleState::at(const CollarChart& chart, const Vec2& x) {
    const auto c = chart.project(x);
    ParticleState s;
    s.foot = c.foot;
    s.depth = c.depth;
    s.x = x;
    s.anchor = x;
    s.anchor_depth = c.depth;
    s.mode = c.depth < chart.switch_depth() ? Mode::collar : Mode::interior;
    return s;
}

Vec2 ParticleState::position(const CollarChart& chart) const {
    return mode == Mode::interior ? x : chart.embed(foot, depth);
}

double step_size(const ParticleState& state, const SdeOptions& opts) {
    return state.mode == ParticleState::Mode::collar ? opts.dt_base / opts.collar_refinement : opts.dt_base;
}

StepOutcome diffusion_step(const MetricField& field, ParticleState& state, double dt, CounterRng& rng,
                           double local_time_cap) {
    if (!(dt > 0.0)) throw InvalidArgument("diffusion_step needs dt > 0");
    const CollarChart& chart = field.chart();

    if (state.mode == ParticleState::Mode::interior) {
        const double margin = state.depth - chart.collar_length();
        const double h = std::min(dt, margin * margin / (36.0 * kDepthVariance));
        const double sd = std::sqrt(kDepthVariance * h);
        const double gx = rng.normal();
        const double gy = rng.normal();
        const Vec2 dx(sd * gx, sd * gy);
        state.x += dx;
        state.depth = state.anchor_depth - (state.x - state.anchor).norm();
        state.clock += h;
        if (state.depth < chart.switch_depth()) {
            const auto c = chart.project(state.x);
            state.depth = c.depth;
            state.anchor = state.x;
            state.anchor_depth = c.depth;
            if (c.depth < chart.switch_depth()) {
                state.mode = ParticleState::Mode::collar;
                state.foot = c.foot;
            }
        }
        return {h, false};
    }

    const auto co = field.coefficients(state.foot, state.depth);
    const double var_u = kDepthVariance / co.a;
    const double du = co.drift_u * dt + std::sqrt(var_u * dt) * rng.normal();
    const VerticalStep vs = vertical_step(state.depth, dt, rng, co.drift_d, kDepthVariance);
    const auto& curve = chart.mesh().component(state.foot.component).curve;

    if (state.local_time + vs.local_time >= local_time_cap) {
        const double remaining = std::max(0.0, local_time_cap - state.local_time);
        const double t = bridge_hitting_time(state.depth, vs.free_end, -remaining, dt, kDepthVariance, rng);
        // tangential coordinate at t from its own bridge
        const double frac = t / dt;
        const double u = state.foot.u + frac * du + std::sqrt(var_u * t * (1.0 - frac)) * rng.normal();
        state.foot.u = curve.wrap(u);
        state.depth = 0.0;
        state.local_time = local_time_cap;
        state.clock += t;
        return {t, true};
    }

    state.foot.u = curve.wrap(state.foot.u + du);
    state.depth = vs.depth;
    state.local_time += vs.local_time;
    state.clock += dt;
    if (state.depth > chart.switch_depth()) {
        state.mode = ParticleState::Mode::interior;
        state.x = chart.embed(state.foot, state.depth);
        state.anchor = state.x;
        state.anchor_depth = state.depth;
    }
    return {dt, false};
}

TraceSample sample_trace(const MetricField& field, const BoundaryPoint& z, double delta, CounterRng& rng,
                         const SdeOptions& opts) {
    if (!(delta >= 0.0)) throw InvalidArgument("trace local-time level must be >= 0");
    TraceSample out;
    out.endpoint = z;
    if (delta == 0.0) return out;
    ParticleState s = ParticleState::on_boundary(z);
    for (;;) {
        if (out.steps_used >= opts.step_budget) {
            throw BudgetExceeded("trace sampling used " + std::to_string(out.steps_used) +
                                 " steps (clock " + std::to_string(s.clock) + ", local time " +
                                 std::to_string(s.local_time) + " of " + std::to_string(delta) + ")");
        }
        const auto step = diffusion_step(field, s, step_size(s, opts), rng, delta);
        ++out.steps_used;
        if (step.reached_cap) break;
    }
    out.endpoint = s.foot;
    out.elapsed_time = s.clock;
    return out;
}

ParticlePath simulate_path(const MetricField& field, ParticleState start, double horizon, CounterRng& rng,
                           const SdeOptions& opts) {
    ParticlePath path;
    const auto& chart = field.chart();
    auto record = [&](const ParticleState& s) {
        path.times.push_back(s.clock);
        path.positions.push_back(s.position(chart));
        path.depths.push_back(s.mode == ParticleState::Mode::collar ? s.depth : chart.project(s.x).depth);
        path.local_time.push_back(s.local_time);
    };
    start.clock = 0.0;
    record(start);
    std::uint64_t steps = 0;
    while (start.clock < horizon) {
        if (++steps > opts.step_budget) throw BudgetExceeded("path simulation exceeded the step budget");
        const double dt = std::min(step_size(start, opts), horizon - start.clock);
        if (!(dt > 0.0)) break;
        diffusion_step(field, start, dt, rng);
        record(start);
    }
    return path;
}

ParticlePath simulate_half_line(double depth0, double horizon, double dt, CounterRng& rng, double variance) {
    if (!(depth0 >= 0.0)) throw InvalidArgument("depth must be >= 0");
    ParticlePath path;
    path.variance_rate = variance;
    const auto n = static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    path.times.reserve(n + 1);
    double depth = depth0, lt = 0.0;
    path.times.push_back(0.0);
    path.positions.emplace_back(0.0, depth);
    path.depths.push_back(depth);
    path.local_time.push_back(0.0);
    for (std::size_t k = 1; k <= n; ++k) {
        const double t = std::min(horizon, static_cast<double>(k) * dt);
        const auto vs = vertical_step(depth, t - path.times.back(), rng, 0.0, variance);
        depth = vs.depth;
        lt += vs.local_time;
        path.times.push_back(t);
        path.positions.emplace_back(0.0, depth);
        path.depths.push_back(depth);
        path.local_time.push_back(lt);
    }
    return path;
}

double smoothed_local_time(const ParticlePath& path, double beta0) {
    if (!(beta0 > 0.0)) throw InvalidArgument("beta0 must be > 0");
    double acc = 0.0;
    for (std::size_t k = 1; k < path.times.size(); ++k) {
        acc += boundary_layer_bump(path.depths[k], beta0) * (path.times[k] - path.times[k - 1]);
    }
    return 0.5 * path.variance_rate * acc;
}

DirichletReport dirichlet_local_time_check(double radius, double xi, std::size_t n_paths, std::uint64_t seed,
                                           const DirichletOptions& opts) {
    if (!(radius > 0.0)) throw InvalidArgument("radius must be > 0");
    if (n_paths < 2) throw InvalidArgument("need at least 2 paths");
    auto mesh = std::make_shared<const BoundaryMesh>(BoundaryMesh::circle(radius, opts.nodes));
    auto chart = std::make_shared<const CollarChart>(mesh, opts.collar_fraction * radius);
    const MetricField field(InterfaceMap::identity(mesh), chart, Cutoff::quintic());

    std::vector<double> tau(n_paths);
    parallel_for(n_paths, opts.threads, [&](std::size_t p) {
        CounterRng rng(seed, p);
        tau[p] = sample_trace(field, BoundaryPoint{0, 0.0}, xi, rng, opts.sde).elapsed_time;
    });

    DirichletReport r;
    r.radius = radius;
    r.xi = xi;
    r.n_paths = n_paths;
    r.expected = 0.5 * radius * xi;
    const auto est = mean_estimate(tau);
    r.mean_tau = est.mean;
    r.std_error = est.std_error;
    r.rel_error = r.expected > 0.0 ? std::abs(est.mean - r.expected) / r.expected : std::abs(est.mean);
    r.within_3se = std::abs(est.mean - r.expected) <= 3.0 * est.std_error;
    return r;
}

LocalTimeLawReport local_time_law_check(double delta, double u, std::size_t n_paths, std::uint64_t seed,
                                        std::size_t steps, unsigned threads) {
    if (!(delta > 0.0) || !(u > 0.0)) throw InvalidArgument("delta and u must be > 0");
    if (n_paths == 0 || steps == 0) throw InvalidArgument("need at least one path and one step");
    std::vector<unsigned char> hit(n_paths, 0);
    const double dt = u / static_cast<double>(steps);
    parallel_for(n_paths, threads, [&](std::size_t p) {
        CounterRng rng(seed, p);
        double depth = 0.0, lt = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            const auto s = vertical_step(depth, dt, rng);
            depth = s.depth;
            lt += s.local_time;
        }
        hit[p] = lt >= delta;
    });
    LocalTimeLawReport r;
    r.delta = delta;
    r.u = u;
    r.n_paths = n_paths;
    r.expected = 2.0 * (1.0 - normal_cdf(delta / std::sqrt(u)));
    std::size_t hits = 0;
    for (auto h : hit) hits += h;
    r.estimate = static_cast<double>(hits) / static_cast<double>(n_paths);
    r.std_error = std::sqrt(r.expected * (1.0 - r.expected) / static_cast<double>(n_paths));
    r.within_3se = std::abs(r.estimate - r.expected) <= 3.0 * r.std_error;
    return r;
}

TraceInvarianceReport trace_invariance_check(const MetricField& field, const BoundaryPoint& z, double delta,
                                             std::size_t n_samples, std::uint64_t seed, const SdeOptions& opts,
                                             unsigned threads) {
    if (n_samples == 0) throw InvalidArgument("need at least one trace sample");
    const InterfaceMap& phi = field.phi();
    const BoundaryMesh& mesh = phi.mesh();

    // cumulative surface measure at every node, per component
    std::vector<std::vector<double>> cum(mesh.component_count());
    std::vector<double> start(mesh.component_count() + 1, 0.0);
    for (std::size_t c = 0; c < mesh.component_count(); ++c) {
        const auto& comp = mesh.component(c);
        const std::size_t n = comp.points.size();
        cum[c].assign(n + 1, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double a = phi.abs_jacobian(mesh.global_index(c, i));
            const double b = phi.abs_jacobian(mesh.global_index(c, (i + 1) % n));
            const double h = (i + 1 < n ? comp.knots[i + 1] : comp.length) - comp.knots[i];
            cum[c][i + 1] = cum[c][i] + 0.5 * (a + b) * h;
        }
        start[c + 1] = start[c] + cum[c][n];
    }
    const double total = start.back();
    auto cdf = [&](const BoundaryPoint& p) {
        const auto& comp = mesh.component(p.component);
        const auto& knots = comp.knots;
        const auto it = std::upper_bound(knots.begin(), knots.end(), p.u);
        const std::size_t i = static_cast<std::size_t>(it - knots.begin()) - 1;
        const double right = i + 1 < knots.size() ? knots[i + 1] : comp.length;
        const double f = (p.u - knots[i]) / (right - knots[i]);
        const auto& cc = cum[p.component];
        return (start[p.component] + cc[i] + f * (cc[i + 1] - cc[i])) / total;
    };

    std::vector<double> mapped(n_samples), elapsed(n_samples);
    parallel_for(n_samples, threads, [&](std::size_t k) {
        CounterRng rng(seed, k);
        const auto t = sample_trace(field, z, delta, rng, opts);
        mapped[k] = cdf(t.endpoint);
        elapsed[k] = t.elapsed_time;
    });
    TraceInvarianceReport r;
    r.delta = delta;
    r.n_samples = n_samples;
    r.ks = ks_uniform(std::move(mapped));
    r.mean_elapsed = std::accumulate(elapsed.begin(), elapsed.end(), 0.0) / static_cast<double>(n_samples);
    return r;
}

}  // namespace lapgrowth
