#include "lapgrowth/macro_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace lapgrowth {

std::vector<Vec2> flow_rhs(const InterfaceMap& phi, const Kernel& kernel) {
    const std::size_t n = phi.node_count();
    if (kernel.mesh().node_count() != n) throw InvalidArgument("kernel and interface use different meshes");
    std::vector<Vec2> out(n, Vec2::Zero());
    if (kernel.is_zero()) return out;
    const std::vector<double> w = phi.surface_measure();
    Eigen::MatrixXd wn(static_cast<Eigen::Index>(n), 2);
    for (std::size_t j = 0; j < n; ++j) {
        const Vec2 nj = phi.normal(j);
        wn(static_cast<Eigen::Index>(j), 0) = w[j] * nj.x();
        wn(static_cast<Eigen::Index>(j), 1) = w[j] * nj.y();
    }
    const Eigen::MatrixXd v = kernel.node_matrix() * wn;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = Vec2(v(static_cast<Eigen::Index>(i), 0), v(static_cast<Eigen::Index>(i), 1));
    }
    return out;
}

InterfaceMap euler_step(const InterfaceMap& phi, const Kernel& kernel, double dt) {
    if (dt < 0.0) throw InvalidArgument("euler_step needs dt >= 0");
    if (dt == 0.0) return phi;
    return phi.displaced(flow_rhs(phi, kernel), dt);
}

double default_clearance_floor(const BoundaryMesh& mesh) { return 2.0 * mesh.mean_spacing(); }

double collapse_radius(std::size_t n, double clearance_floor) {
    if (n < 3) throw InvalidArgument("need at least 3 nodes");
    std::vector<Vec2> ngon(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
        ngon[i] = {std::cos(a), std::sin(a)};
    }
    return clearance_floor / polygon_clearance({ngon}).clearance;
}

namespace {

double sup_distance(const InterfaceMap& a, const InterfaceMap& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.node_count(); ++i) d = std::max(d, (a.values()[i] - b.values()[i]).norm());
    return d;
}

}  // namespace

FlowTrajectory picard_solve(const InterfaceMap& phi0, const Kernel& kernel, const PicardOptions& opts) {
    if (opts.horizon < 0.0) throw InvalidArgument("picard horizon must be >= 0");
    if (opts.grid_steps == 0) throw InvalidArgument("picard grid needs at least one step");
    const double floor = opts.clearance_floor < 0.0 ? default_clearance_floor(phi0.mesh()) : opts.clearance_floor;

    FlowTrajectory traj;
    if (opts.horizon == 0.0) {
        traj.times = {0.0};
        traj.states = {phi0};
        traj.iterations = 1;
        traj.increments = {0.0};
        return traj;
    }
    const std::size_t m = opts.grid_steps;
    const double h = opts.horizon / static_cast<double>(m);
    for (std::size_t k = 0; k <= m; ++k) traj.times.push_back(h * static_cast<double>(k));

    std::vector<InterfaceMap> current(m + 1, phi0);
    const std::size_t n = phi0.node_count();
    for (int iter = 1; iter <= opts.max_iter; ++iter) {
        std::vector<InterfaceMap> next;
        next.reserve(m + 1);
        next.push_back(phi0);
        std::vector<Vec2> acc = phi0.values();
        double increment = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const std::vector<Vec2> v = flow_rhs(current[k], kernel);
            for (std::size_t i = 0; i < n; ++i) acc[i] += h * v[i];
            InterfaceMap state(phi0.mesh_ptr(), acc);
            const ValidityReport rep = state.diffeo_check(opts.jac_floor, floor);
            if (!rep.valid) {
                throw ContractionEscaped("Picard iterate " + std::to_string(iter) + " invalid at t = " +
                                         std::to_string(traj.times[k + 1]) + " (" + to_string(rep.reason) + ")");
            }
            increment = std::max(increment, sup_distance(state, current[k + 1]));
            next.push_back(std::move(state));
        }
        current = std::move(next);
        traj.increments.push_back(increment);
        if (increment < opts.tol) {
            traj.iterations = iter;
            traj.states = std::move(current);
            return traj;
        }
    }
    throw NoConvergence("Picard iteration did not reach tol " + std::to_string(opts.tol) + " in " +
                        std::to_string(opts.max_iter) + " sweeps");
}

FlowTrajectory integrate_until_blowup(const InterfaceMap& phi0, const Kernel& kernel, const BlowupOptions& opts) {
    if (!(opts.dt > 0.0)) throw InvalidArgument("integrate_until_blowup needs dt > 0");
    const double floor = opts.clearance_floor < 0.0 ? default_clearance_floor(phi0.mesh()) : opts.clearance_floor;
    if (!phi0.diffeo_check(opts.jac_floor, floor).valid) throw InvalidArgument("initial interface is not valid");

    FlowTrajectory traj;
    traj.times.push_back(0.0);
    traj.states.push_back(phi0);
    InterfaceMap phi = phi0;
    double t = 0.0;
    double last_record = 0.0;
    const double eps = 1e-12 * std::max(1.0, opts.t_max);
    while (t < opts.t_max - eps) {
        const double h = std::min(opts.dt, opts.t_max - t);
        const std::vector<Vec2> v = flow_rhs(phi, kernel);
        InterfaceMap next = phi.displaced(v, h);
        ValidityReport rep = next.diffeo_check(opts.jac_floor, floor);
        if (!rep.valid) {
            double lo = 0.0, hi = h;
            while (hi - lo > opts.bisection_rel_width * h) {
                const double mid = 0.5 * (lo + hi);
                const ValidityReport r = phi.displaced(v, mid).diffeo_check(opts.jac_floor, floor);
                if (r.valid) {
                    lo = mid;
                } else {
                    hi = mid;
                    rep = r;
                }
            }
            traj.tau_sol = t + 0.5 * (lo + hi);
            traj.blowup_reason = rep.reason;
            traj.blowup_component = rep.reason == BlowupReason::jacobian_floor
                                        ? phi.mesh().split_index(rep.min_jacobian_node).first
                                        : rep.clearance_component;
            if (traj.times.back() != t) {
                traj.times.push_back(t);
                traj.states.push_back(phi);
            }
            return traj;
        }
        phi = std::move(next);
        t += h;
        if (opts.record_interval <= 0.0 || t - last_record >= opts.record_interval - eps || t >= opts.t_max - eps) {
            traj.times.push_back(t);
            traj.states.push_back(phi);
            last_record = t;
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// radial oracle

namespace {

// c * (1/L) int raw(s) cos(s / R) ds on a circle of radius R, by periodic trapezoid.
double projected_mean(const KernelSpec& spec, double radius) {
    const double len = 2.0 * std::numbers::pi * radius;
    const int m = 4096;
    double raw_mass = 0.0;
    double projected = 0.0;
    for (int k = 0; k < m; ++k) {
        const double s = len * k / m;
        const double p = kernel_profile(spec, len, s);
        raw_mass += p;
        projected += p * std::cos(s / radius);
    }
    raw_mass *= len / m;
    projected *= len / m;
    double scale = 1.0;
    switch (spec.normalization) {
        case KernelNormalization::raw: scale = 1.0; break;
        case KernelNormalization::unit_mean_under_uniform: scale = len / raw_mass; break;
        case KernelNormalization::unit_normal_speed: scale = len / projected; break;
    }
    return spec.family == KernelFamily::zero ? 0.0 : scale * projected / len;
}

struct RadialRhs {
    double m_in, m_out;
    std::array<double, 2> operator()(const std::array<double, 2>& r) const {
        const double total = r[0] + r[1];
        return {-m_in * r[0] / total, m_out * r[1] / total};
    }
};

std::array<double, 2> rk4(const RadialRhs& f, const std::array<double, 2>& y, double h) {
    auto add = [](const std::array<double, 2>& a, const std::array<double, 2>& b, double s) {
        return std::array<double, 2>{a[0] + s * b[0], a[1] + s * b[1]};
    };
    const auto k1 = f(y);
    const auto k2 = f(add(y, k1, 0.5 * h));
    const auto k3 = f(add(y, k2, 0.5 * h));
    const auto k4 = f(add(y, k3, h));
    return {y[0] + h / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])};
}

}  // namespace

std::pair<double, double> RadialSolution::at(double t) const {
    if (times.empty()) throw StateError("empty radial solution");
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(std::distance(times.begin(), it)) - 1;
    const RadialRhs f{inner_rate, outer_rate};
    std::array<double, 2> y{r_inner[k], r_outer[k]};
    double h = t - times[k];
    // Sub-step so that interpolation keeps the integration accuracy.
    const int sub = std::max(1, static_cast<int>(std::ceil(std::abs(h) / 1e-2)));
    for (int s = 0; s < sub; ++s) {
        if (y[0] > 0.0) {
            y = rk4(f, y, h / sub);
        } else {
            y[1] += outer_rate * h / sub;
        }
    }
    return {y[0], y[1]};
}

RadialSolution radial_ode_oracle(double r_inner0, double r_outer0, const KernelSpec& spec, const RadialOptions& opts) {
    validate(spec);
    if (spec.coupling != 0.0) throw InvalidArgument("radial oracle requires coupling = 0 (no cross-component mass)");
    if (!(r_outer0 > 0.0) || r_inner0 < 0.0 || r_inner0 >= r_outer0) {
        throw InvalidArgument("radial oracle needs 0 <= r_inner0 < r_outer0");
    }
    RadialSolution sol;
    sol.outer_rate = projected_mean(spec, r_outer0);
    sol.inner_rate = r_inner0 > 0.0 ? projected_mean(spec, r_inner0) : 0.0;
    sol.times.push_back(0.0);
    sol.r_inner.push_back(r_inner0);
    sol.r_outer.push_back(r_outer0);

    if (r_inner0 == 0.0) {
        // Single circle: the whole measure sits on the outer component.
        sol.times.push_back(opts.t_max);
        sol.r_inner.push_back(0.0);
        sol.r_outer.push_back(r_outer0 + sol.outer_rate * opts.t_max);
        return sol;
    }

    const RadialRhs f{sol.inner_rate, sol.outer_rate};
    std::array<double, 2> y{r_inner0, r_outer0};
    double t = 0.0;
    double h = 1e-3;
    const bool track_collapse = opts.collapse_radius > 0.0;
    if (track_collapse && r_inner0 <= opts.collapse_radius) {
        sol.collapse_time = 0.0;
        return sol;
    }
    while (t < opts.t_max) {
        h = std::min(h, opts.t_max - t);
        const auto full = rk4(f, y, h);
        const auto half = rk4(f, rk4(f, y, 0.5 * h), 0.5 * h);
        const double err = std::max(std::abs(full[0] - half[0]), std::abs(full[1] - half[1])) / 15.0;
        if (err > opts.tol && h > 1e-12) {
            h *= std::max(0.1, 0.9 * std::pow(opts.tol / err, 0.2));
            continue;
        }
        if (track_collapse && half[0] <= opts.collapse_radius) {
            double lo = 0.0, hi = h;
            for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, t); ++i) {
                const double mid = 0.5 * (lo + hi);
                const auto ym = rk4(f, rk4(f, y, 0.5 * mid), 0.5 * mid);
                (ym[0] > opts.collapse_radius ? lo : hi) = mid;
            }
            const double tc = t + 0.5 * (lo + hi);
            const auto yc = rk4(f, rk4(f, y, 0.25 * (lo + hi)), 0.25 * (lo + hi));
            sol.times.push_back(tc);
            sol.r_inner.push_back(yc[0]);
            sol.r_outer.push_back(yc[1]);
            sol.collapse_time = tc;
            return sol;
        }
        y = half;
        t += h;
        sol.times.push_back(t);
        sol.r_inner.push_back(y[0]);
        sol.r_outer.push_back(y[1]);
        const double grow = err > 0.0 ? 0.9 * std::pow(opts.tol / err, 0.2) : 2.0;
        h *= std::clamp(grow, 0.2, 2.0);
    }
    return sol;
}

}  // namespace lapgrowth
