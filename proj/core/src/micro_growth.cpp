#include "lapgrowth/micro_growth.hpp"

#include <algorithm>
#include <cmath>

#include "lapgrowth/macro_flow.hpp"
#include "lapgrowth/parallel.hpp"

namespace lapgrowth {

namespace {

double draw_wait(std::uint64_t seed, std::size_t jump, double epsilon) {
    auto rng = jump_stream(seed, jump, StreamPurpose::clock);
    return rng.exponential(1.0 / epsilon);
}

}  // namespace

GrowthModel::GrowthModel(std::shared_ptr<const CollarChart> chart_, Cutoff chi_, std::shared_ptr<const Kernel> kernel_,
                         SdeOptions sde_)
    : chart(std::move(chart_)), chi(std::move(chi_)), kernel(std::move(kernel_)), sde(sde_) {
    if (!chart || !kernel) throw InvalidArgument("growth model needs a collar chart and a kernel");
    if (&chart->mesh() != &kernel->mesh()) throw InvalidArgument("kernel and collar chart use different meshes");
}

double GrowthModel::effective_clearance_floor() const {
    return clearance_floor < 0.0 ? default_clearance_floor(mesh()) : clearance_floor;
}

CounterRng jump_stream(std::uint64_t seed, std::uint64_t jump, StreamPurpose purpose) {
    return CounterRng(seed, (jump << 3) | static_cast<std::uint64_t>(purpose));
}

InterfaceMap bump(const InterfaceMap& phi, const BoundaryPoint& y, double epsilon, const Kernel& kernel) {
    if (epsilon == 0.0 || kernel.is_zero()) return phi;
    const Vec2 n = phi.normal_at(y);
    const Eigen::VectorXd k = kernel.column(y);
    std::vector<Vec2> disp(phi.node_count());
    for (std::size_t i = 0; i < disp.size(); ++i) disp[i] = epsilon * k(static_cast<Eigen::Index>(i)) * n;
    return phi.displaced(disp, 1.0);
}

JumpEvent growth_step(GrowthState& state, double epsilon, double delta, const GrowthModel& model,
                      std::uint64_t seed) {
    if (state.exploded) throw StateError("growth_step on an exploded state");
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
    JumpEvent ev;
    ev.from = state.z;
    state.t += draw_wait(seed, state.jump_count, epsilon);
    ev.time = state.t;

    const MetricField field = model.field(state.phi);
    auto rng = jump_stream(seed, state.jump_count, StreamPurpose::trace);
    const TraceSample trace = sample_trace(field, state.z, delta, rng, model.sde);
    ev.to = trace.endpoint;
    ev.trace_steps = trace.steps_used;

    state.phi = bump(state.phi, ev.to, epsilon, *model.kernel);
    state.z = ev.to;
    ++state.jump_count;
    const auto report = state.phi.diffeo_check(model.jac_floor, model.effective_clearance_floor());
    if (!report.valid) {
        state.exploded = true;
        state.blowup_reason = report.reason;
    }
    return ev;
}

std::size_t GrowthRunRecord::state_index(double t) const {
    const auto it = std::upper_bound(jumps.begin(), jumps.end(), t,
                                     [](double v, const JumpEvent& e) { return v < e.time; });
    return static_cast<std::size_t>(it - jumps.begin());
}

const InterfaceMap& GrowthRunRecord::state_at(double t) const { return states.at(state_index(t)); }

BoundaryPoint GrowthRunRecord::particle_at(double t) const {
    const std::size_t k = state_index(t);
    return k == 0 ? z0 : jumps[k - 1].to;
}

std::uint64_t GrowthRunRecord::trace_steps() const {
    std::uint64_t s = 0;
    for (const auto& j : jumps) s += j.trace_steps;
    return s;
}

GrowthRunRecord run_growth(const InterfaceMap& phi0, const BoundaryPoint& z0, double epsilon, double delta,
                           double t_max, std::vector<double> snapshot_times, const GrowthModel& model,
                           std::uint64_t seed) {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
    if (!(delta > 0.0)) throw InvalidArgument("delta must be > 0");
    if (!(t_max >= 0.0)) throw InvalidArgument("t_max must be >= 0");
    if (!phi0.diffeo_check(model.jac_floor, model.effective_clearance_floor()).valid) {
        throw InvalidArgument("initial interface fails diffeo_check");
    }
    std::sort(snapshot_times.begin(), snapshot_times.end());

    GrowthRunRecord rec;
    rec.epsilon = epsilon;
    rec.delta = delta;
    rec.t_max = t_max;
    rec.seed = seed;
    rec.z0 = z0;
    rec.states.push_back(phi0);

    GrowthState state{z0, phi0, 0.0, 0, false, BlowupReason::none};
    for (;;) {
        if (state.t + draw_wait(seed, state.jump_count, epsilon) > t_max) break;
        rec.jumps.push_back(growth_step(state, epsilon, delta, model, seed));
        rec.states.push_back(state.phi);
        if (state.exploded) {
            rec.tau_sol_epsilon = state.t;
            rec.blowup_reason = state.blowup_reason;
            break;
        }
    }
    rec.snapshot_times = std::move(snapshot_times);
    for (double t : rec.snapshot_times) rec.snapshot_state.push_back(rec.state_index(t));
    return rec;
}

bool replay_matches(const GrowthRunRecord& record, const GrowthModel& model) {
    if (record.states.size() != record.jumps.size() + 1) return false;
    InterfaceMap phi = record.states.front();
    for (std::size_t k = 0; k < record.jumps.size(); ++k) {
        phi = bump(phi, record.jumps[k].to, record.epsilon, *model.kernel);
        if (phi.values() != record.states[k + 1].values()) return false;
    }
    return true;
}

std::vector<IntervalFlux> trace_flux(const GrowthRunRecord& record, const GrowthModel& model, std::size_t n_samples,
                                     StreamPurpose purpose, unsigned threads) {
    if (n_samples < 2) throw InvalidArgument("need at least 2 trace samples per interval");
    // Holding intervals of valid states; nothing after an explosion.
    const std::size_t n_int = record.tau_sol_epsilon ? record.jumps.size() : record.jumps.size() + 1;
    std::vector<IntervalFlux> out(n_int);
    const std::size_t nodes = model.mesh().node_count();
    parallel_for(n_int, threads, [&](std::size_t i) {
        IntervalFlux& f = out[i];
        f.start = i == 0 ? 0.0 : record.jumps[i - 1].time;
        f.end = i < record.jumps.size() ? record.jumps[i].time : record.t_max;
        f.samples = n_samples;
        f.mean.assign(nodes, Vec2::Zero());
        f.variance.assign(nodes, 0.0);
        const InterfaceMap& phi = record.states[i];
        const BoundaryPoint z = i == 0 ? record.z0 : record.jumps[i - 1].to;
        const MetricField field = model.field(phi);
        const auto base = jump_stream(record.seed, i, purpose);
        std::vector<Vec2> m2(nodes, Vec2::Zero());
        for (std::size_t k = 0; k < n_samples; ++k) {
            auto rng = base.split(k);
            const BoundaryPoint y = sample_trace(field, z, record.delta, rng, model.sde).endpoint;
            const Vec2 n = phi.normal_at(y);
            const Eigen::VectorXd col = model.kernel->column(y);
            const double w = 1.0 / static_cast<double>(k + 1);
            for (std::size_t j = 0; j < nodes; ++j) {
                const Vec2 v = col(static_cast<Eigen::Index>(j)) * n;
                const Vec2 d = v - f.mean[j];
                f.mean[j] += w * d;
                m2[j] += d.cwiseProduct(v - f.mean[j]);
            }
        }
        for (std::size_t j = 0; j < nodes; ++j) f.variance[j] = m2[j].sum() / static_cast<double>(n_samples - 1);
    });
    return out;
}

MartingaleTrack martingale_track(const GrowthRunRecord& record, const GrowthModel& model, std::size_t n_samples,
                                 unsigned threads) {
    return martingale_track(record, model, trace_flux(record, model, n_samples, StreamPurpose::compensator, threads));
}

MartingaleTrack martingale_track(const GrowthRunRecord& record, const GrowthModel& model,
                                 const std::vector<IntervalFlux>& flux) {
    const std::size_t nodes = model.mesh().node_count();
    const auto& phi0 = record.states.front().values();

    // |M| over nodes at time t using state index k (jumps up to k applied).
    auto evaluate = [&](double t, std::size_t k) {
        const auto& phi = record.states[k].values();
        double best = 0.0, best_se = 0.0;
        for (std::size_t j = 0; j < nodes; ++j) {
            Vec2 comp = Vec2::Zero();
            double var = 0.0;
            for (const auto& f : flux) {
                const double overlap = std::max(0.0, std::min(t, f.end) - f.start);
                if (overlap <= 0.0) break;
                comp += overlap * f.mean[j];
                var += overlap * overlap * f.variance[j] / static_cast<double>(f.samples);
            }
            const double m = (phi[j] - phi0[j] - comp).norm();
            if (m > best) {
                best = m;
                best_se = std::sqrt(var);
            }
        }
        return std::pair{best, best_se};
    };

    MartingaleTrack out;
    for (double t : record.snapshot_times) {
        const auto [m, se] = evaluate(std::min(t, record.t_max), record.state_index(t));
        out.times.push_back(t);
        out.sup_abs.push_back(m);
        out.std_error.push_back(se);
    }
    // M is affine in t between jumps, so its sup is attained at jump times
    // (either side) or at the end of the record.
    auto consider = [&](double t, std::size_t k) {
        const auto [m, se] = evaluate(t, k);
        if (m > out.sup_over_path) {
            out.sup_over_path = m;
            out.sup_std_error = se;
        }
    };
    for (std::size_t k = 0; k < record.jumps.size(); ++k) {
        consider(record.jumps[k].time, k);
        consider(record.jumps[k].time, k + 1);
    }
    if (!record.tau_sol_epsilon) consider(record.t_max, record.states.size() - 1);
    return out;
}

}  // namespace lapgrowth
