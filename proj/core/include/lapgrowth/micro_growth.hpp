#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "lapgrowth/collar_metric.hpp"
#include "lapgrowth/kernels.hpp"
#include "lapgrowth/reflecting_sde.hpp"

namespace lapgrowth {

/// Everything a growth run needs besides (phi, z) and the seed.
struct GrowthModel {
    std::shared_ptr<const CollarChart> chart;
    Cutoff chi = Cutoff::quintic();
    std::shared_ptr<const Kernel> kernel;
    SdeOptions sde{};
    double jac_floor = 1e-3;
    double clearance_floor = -1.0;  // < 0: twice the mean reference node spacing

    GrowthModel(std::shared_ptr<const CollarChart> chart, Cutoff chi, std::shared_ptr<const Kernel> kernel,
                SdeOptions sde = {});

    const BoundaryMesh& mesh() const { return chart->mesh(); }
    MetricField field(const InterfaceMap& phi) const { return MetricField(phi, chart, chi); }
    double effective_clearance_floor() const;
};

/// RNG stream for one jump and purpose, independent of scheduling.
enum class StreamPurpose : std::uint64_t { clock = 0, trace = 1, compensator = 2, flux = 3, aux = 4 };
CounterRng jump_stream(std::uint64_t seed, std::uint64_t jump, StreamPurpose purpose);

/// Phi(x) + epsilon K(x, y) n^Phi(y) at every node, refitted.
InterfaceMap bump(const InterfaceMap& phi, const BoundaryPoint& y, double epsilon, const Kernel& kernel);

struct GrowthState {
    BoundaryPoint z;
    InterfaceMap phi;
    double t = 0.0;
    std::size_t jump_count = 0;
    bool exploded = false;
    BlowupReason blowup_reason = BlowupReason::none;
};

struct JumpEvent {
    double time = 0.0;
    BoundaryPoint from;
    BoundaryPoint to;
    std::uint64_t trace_steps = 0;
};

/// Exponential(1/epsilon) wait, trace sample from z under the metric of phi,
/// bump at the sampled point. The new state is flagged exploded when it fails
/// diffeo_check.
JumpEvent growth_step(GrowthState& state, double epsilon, double delta, const GrowthModel& model,
                      std::uint64_t seed);

struct GrowthRunRecord {
    double epsilon = 0.0;
    double delta = 0.0;
    double t_max = 0.0;
    std::uint64_t seed = 0;
    BoundaryPoint z0;
    std::vector<JumpEvent> jumps;         // only jumps with time <= t_max
    std::vector<InterfaceMap> states;     // states[k] holds between jump k and k+1; states[0] = phi0
    std::vector<double> snapshot_times;
    std::vector<std::size_t> snapshot_state;  // index into states
    std::optional<double> tau_sol_epsilon;
    BlowupReason blowup_reason = BlowupReason::none;

    /// Piecewise-constant path: the state after all jumps at times <= t.
    const InterfaceMap& state_at(double t) const;
    std::size_t state_index(double t) const;
    BoundaryPoint particle_at(double t) const;
    std::uint64_t trace_steps() const;
};

/// Iterates growth_step until t_max or explosion.
GrowthRunRecord run_growth(const InterfaceMap& phi0, const BoundaryPoint& z0, double epsilon, double delta,
                           double t_max, std::vector<double> snapshot_times, const GrowthModel& model,
                           std::uint64_t seed);

/// Re-applies every recorded jump to states[0]; true when each state matches
/// the record bit for bit.
bool replay_matches(const GrowthRunRecord& record, const GrowthModel& model);

/// Monte Carlo estimate of E_{y ~ T^{Phi,delta}_z}[K(x_i, y) n^Phi(y)] for
/// each holding interval of a record.
struct IntervalFlux {
    double start = 0.0;
    double end = 0.0;  // clipped to t_max
    std::vector<Vec2> mean;
    std::vector<double> variance;  // per node, sum of the two coordinate variances of one draw
    std::size_t samples = 0;
};
std::vector<IntervalFlux> trace_flux(const GrowthRunRecord& record, const GrowthModel& model, std::size_t n_samples,
                                     StreamPurpose purpose = StreamPurpose::compensator, unsigned threads = 1);

struct MartingaleTrack {
    std::vector<double> times;
    std::vector<double> sup_abs;    // sup over nodes of |M(t, x)|
    std::vector<double> std_error;  // Monte Carlo error of the compensator at the maximizing node
    double sup_over_path = 0.0;     // sup over t in [0, t_max] (attained at jump times or t_max)
    double sup_std_error = 0.0;
};

/// M(t, x) = sum_{tau_i <= t} eps K(x, y_i) n^{Phi(tau_i-)}(y_i) - int_0^t E_{T^{Phi,delta}_{z(s)}}[K(x, y) n(y)] ds
/// on the snapshot grid; the compensator uses n_compensator_samples trace
/// draws per holding interval.
MartingaleTrack martingale_track(const GrowthRunRecord& record, const GrowthModel& model,
                                 std::size_t n_compensator_samples, unsigned threads = 1);

/// Same as above with precomputed interval fluxes.
MartingaleTrack martingale_track(const GrowthRunRecord& record, const GrowthModel& model,
                                 const std::vector<IntervalFlux>& flux);

}  // namespace lapgrowth
