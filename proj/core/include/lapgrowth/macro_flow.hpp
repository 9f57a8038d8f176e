#pragma once

#include <optional>
#include <vector>

#include "lapgrowth/boundary_geometry.hpp"
#include "lapgrowth/kernels.hpp"

namespace lapgrowth {

struct FlowTrajectory {
    std::vector<double> times;
    std::vector<InterfaceMap> states;
    std::optional<double> tau_sol;
    BlowupReason blowup_reason = BlowupReason::none;
    std::size_t blowup_component = 0;
    int iterations = 0;              // Picard sweeps (0 for explicit stepping)
    std::vector<double> increments;  // Picard sup-distance between successive iterates
};

/// V(x_i) = sum_j w_j K(x_i, y_j) n(y_j) with w the surface measure of phi.
std::vector<Vec2> flow_rhs(const InterfaceMap& phi, const Kernel& kernel);

/// phi + dt * flow_rhs(phi); no validity enforcement.
InterfaceMap euler_step(const InterfaceMap& phi, const Kernel& kernel, double dt);

struct PicardOptions {
    double horizon = 0.2;
    std::size_t grid_steps = 200;  // left-rectangle time grid
    double tol = 1e-8;
    int max_iter = 50;
    double jac_floor = 1e-3;
    double clearance_floor = -1.0;  // < 0: twice the mean reference node spacing
};

/// Fixed point of S phi(t) = phi(0) + int_0^t V(phi(s)) ds on a uniform grid.
/// Throws ContractionEscaped if an iterate leaves the valid set and
/// NoConvergence after max_iter sweeps.
FlowTrajectory picard_solve(const InterfaceMap& phi0, const Kernel& kernel, const PicardOptions& opts);

struct BlowupOptions {
    double dt = 1e-3;
    double t_max = 1.0;
    double jac_floor = 1e-3;
    double clearance_floor = -1.0;  // < 0: twice the mean reference node spacing
    double record_interval = 0.0;   // <= 0: record every step
    double bisection_rel_width = 1e-3;
};

/// Explicit Euler until t_max or the first state failing diffeo_check. The
/// failing step is bisected in its partial step length; tau_sol is the midpoint
/// of the final bracket.
FlowTrajectory integrate_until_blowup(const InterfaceMap& phi0, const Kernel& kernel, const BlowupOptions& opts);

double default_clearance_floor(const BoundaryMesh& mesh);

/// Radius at which a circle discretized by n uniform nodes has clearance equal
/// to `clearance_floor`: floor / clearance(unit regular n-gon).
double collapse_radius(std::size_t n, double clearance_floor);

struct RadialSolution {
    std::vector<double> times;
    std::vector<double> r_inner;
    std::vector<double> r_outer;
    std::optional<double> collapse_time;
    double inner_rate = 0.0;  // normal-projected kernel mean on the inner circle
    double outer_rate = 0.0;

    /// (r_inner, r_outer) at time t, by an RK4 step from the last stored point.
    std::pair<double, double> at(double t) const;
};

struct RadialOptions {
    double collapse_radius = 0.0;  // inner radius at which the annulus counts as collapsed
    double t_max = 100.0;
    double tol = 1e-8;
};

/// Rotationally symmetric reduction for concentric circles with Phi(0) = id:
/// dr_a/dt = +-(r_a / sum_b r_b) * m_a with m_a the normal-projected kernel mean
/// on circle a. r_inner0 = 0 means a single circle. Refuses coupled kernels.
RadialSolution radial_ode_oracle(double r_inner0, double r_outer0, const KernelSpec& spec,
                                 const RadialOptions& opts = {});

}  // namespace lapgrowth
