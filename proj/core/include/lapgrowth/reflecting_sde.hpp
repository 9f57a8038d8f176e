#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "lapgrowth/collar_metric.hpp"
#include "lapgrowth/rng.hpp"

namespace lapgrowth {

/// Depth variance rate of the diffusion with generator Laplace-Beltrami:
/// dx = sqrt(2) A db + m dt, so the depth moves like sqrt(2) times a standard
/// reflected Brownian motion.
inline constexpr double kDepthVariance = 2.0;

struct VerticalStep {
    double depth = 0.0;       // reflected endpoint
    double local_time = 0.0;  // Skorokhod push accumulated over the step
    double free_end = 0.0;    // endpoint of the unreflected path
    double minimum = 0.0;     // running minimum of the unreflected path
};

/// Exact joint law of (endpoint, local-time increment) of reflected Brownian
/// motion on [0, inf) with constant drift and variance rate over dt: Gaussian
/// endpoint, bridge minimum by inversion, Skorokhod push max(0, -minimum).
VerticalStep vertical_step(double depth, double dt, CounterRng& rng, double drift = 0.0, double variance = 1.0);

/// First hitting time of `level` by a Brownian bridge from `start` to `end`
/// over [0, dt], conditioned on hitting (start > level). Exact: after the time
/// change s = t dt / (dt - t) the hitting time is inverse Gaussian.
double bridge_hitting_time(double start, double end, double level, double dt, double variance, CounterRng& rng);

/// Inverse Gaussian IG(mean, shape); mean = inf gives the Levy law.
double sample_inverse_gaussian(double mean, double shape, CounterRng& rng);

struct SdeOptions {
    double dt_base = 1e-2;
    int collar_refinement = 16;  // collar steps use dt_base / collar_refinement
    std::uint64_t step_budget = 100'000'000;
};

/// Position of the particle. In the collar it is carried in chart coordinates
/// (foot, depth); in the interior as an ambient point. Interior depth is the
/// lower bound depth(anchor) - |x - anchor| from the last exact projection,
/// refreshed only when it gets small.
struct ParticleState {
    enum class Mode { interior, collar };

    Mode mode = Mode::collar;
    Vec2 x = Vec2::Zero();
    BoundaryPoint foot;
    double depth = 0.0;  // exact in collar mode, a lower bound in interior mode
    Vec2 anchor = Vec2::Zero();
    double anchor_depth = 0.0;
    double local_time = 0.0;
    double clock = 0.0;

    static ParticleState on_boundary(const BoundaryPoint& z);
    static ParticleState at(const CollarChart& chart, const Vec2& x);
    Vec2 position(const CollarChart& chart) const;
};

struct StepOutcome {
    double elapsed = 0.0;
    bool reached_cap = false;
};

/// Advances the state by at most dt. Interior: exact Euclidean Gaussian step,
/// shortened so that the metric cannot vary over the step. Collar:
/// Euler-Maruyama in the tangential coordinate and an exact reflected vertical
/// step with frozen drift. If the local time reaches `local_time_cap`, the
/// step stops at the exact crossing time, with the particle on the boundary.
StepOutcome diffusion_step(const MetricField& field, ParticleState& state, double dt, CounterRng& rng,
                           double local_time_cap = std::numeric_limits<double>::infinity());

/// dt_base in the interior, dt_base / collar_refinement in the collar.
double step_size(const ParticleState& state, const SdeOptions& opts);

struct TraceSample {
    BoundaryPoint endpoint;
    double elapsed_time = 0.0;
    std::uint64_t steps_used = 0;
};

/// Endpoint of the diffusion started at z on the boundary, stopped when its
/// boundary local time reaches delta. Throws BudgetExceeded.
TraceSample sample_trace(const MetricField& field, const BoundaryPoint& z, double delta, CounterRng& rng,
                         const SdeOptions& opts = {});

struct ParticlePath {
    std::vector<double> times;
    std::vector<Vec2> positions;
    std::vector<double> depths;
    std::vector<double> local_time;
    double variance_rate = kDepthVariance;  // of the depth coordinate
};

/// Records every step of the diffusion from `start` over [0, horizon].
ParticlePath simulate_path(const MetricField& field, ParticleState start, double horizon, CounterRng& rng,
                           const SdeOptions& opts = {});

/// Reflected Brownian motion on the half line with the given variance rate,
/// recorded on a uniform grid; positions are (0, depth).
ParticlePath simulate_half_line(double depth0, double horizon, double dt, CounterRng& rng, double variance = 1.0);

/// (variance / 2) * int Upsilon(depth(t)) dt with Upsilon a unit-mass smooth
/// bump supported on [0, beta0). Right-endpoint rule on the recorded grid, so
/// the start point does not contribute.
double smoothed_local_time(const ParticlePath& path, double beta0);

struct DirichletReport {
    double radius = 1.0;
    double xi = 0.0;
    double expected = 0.0;  // (R / 2) xi
    double mean_tau = 0.0;
    double std_error = 0.0;
    double rel_error = 0.0;
    std::size_t n_paths = 0;
    bool within_3se = false;
};

struct DirichletOptions {
    std::size_t nodes = 256;
    double collar_fraction = 0.5;  // collar length / R
    SdeOptions sde{};
    unsigned threads = 1;
};

/// E[tau^xi] on the Euclidean disk of radius R, started on the boundary, vs
/// the closed form from U = (r^2 - R^2) / 4.
DirichletReport dirichlet_local_time_check(double radius, double xi, std::size_t n_paths, std::uint64_t seed,
                                           const DirichletOptions& opts = {});

struct LocalTimeLawReport {
    double delta = 0.0;
    double u = 0.0;
    double expected = 0.0;  // P(tau^delta <= u) = 2 (1 - Phi(delta / sqrt(u)))
    double estimate = 0.0;
    double std_error = 0.0;  // binomial, at the expected value
    std::size_t n_paths = 0;
    bool within_3se = false;
};

/// Empirical P(tau^delta <= u) = P(L_u >= delta) for unit-variance reflected
/// Brownian motion from 0, composing `steps` exact vertical steps.
LocalTimeLawReport local_time_law_check(double delta, double u, std::size_t n_paths, std::uint64_t seed,
                                        std::size_t steps = 16, unsigned threads = 1);

struct TraceInvarianceReport {
    double delta = 0.0;
    std::size_t n_samples = 0;
    double ks = 0.0;  // vs the surface measure of the metric's interface map
    double mean_elapsed = 0.0;
};

/// Trace samples from z at local time delta, mapped through the cumulative
/// surface measure of field.phi() (components in index order, trapezoid in
/// u); KS distance of the result to the uniform law.
TraceInvarianceReport trace_invariance_check(const MetricField& field, const BoundaryPoint& z, double delta,
                                             std::size_t n_samples, std::uint64_t seed, const SdeOptions& opts = {},
                                             unsigned threads = 1);

}  // namespace lapgrowth
