#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "lapgrowth/macro_flow.hpp"
#include "lapgrowth/micro_growth.hpp"

namespace lapgrowth {

/// delta as a function of epsilon: fixed, or coefficient * sqrt(epsilon).
struct DeltaSchedule {
    enum class Kind { fixed, sqrt };
    Kind kind = Kind::sqrt;
    double value = 1.0;

    double operator()(double epsilon) const;
    std::string name() const;
    static DeltaSchedule fixed(double delta) { return {Kind::fixed, delta}; }
    static DeltaSchedule sqrt_eps(double coefficient = 1.0) { return {Kind::sqrt, coefficient}; }
};

/// Initial data and numerics shared by the micro and macro runs.
struct Scenario {
    std::string id;
    std::shared_ptr<const BoundaryMesh> mesh;
    KernelSpec kernel{};
    double collar_length = 0.5;
    Cutoff chi = Cutoff::quintic();
    BoundaryPoint z0{};
    double t_max = 0.5;
    std::vector<double> snapshot_times;  // includes 0 and t_max
    SdeOptions sde{};
    double macro_dt = 1e-3;
    double jac_floor = 1e-3;
    double clearance_floor = -1.0;

    static Scenario circle(double radius, std::size_t nodes, KernelSpec kernel, double t_max = 0.5,
                           std::size_t snapshots = 11);
    static Scenario annulus(double r_inner, double r_outer, std::size_t n_inner, std::size_t n_outer,
                            KernelSpec kernel, double t_max, std::size_t snapshots = 11);

    InterfaceMap initial() const { return InterfaceMap::identity(mesh); }
    /// Growth model with this scenario's chart and kernel; `chi` overrides the cutoff.
    GrowthModel model() const;
    GrowthModel model(const Cutoff& chi) const;
};

/// Uniform grid of n >= 2 points on [0, t_max].
std::vector<double> uniform_times(double t_max, std::size_t n);

/// Euler solution of the macro flow at each of the (sorted) times, with steps
/// of at most dt landing exactly on every time. Throws StateError if the
/// solution leaves the valid set before the last time.
std::vector<InterfaceMap> macro_reference(const InterfaceMap& phi0, const Kernel& kernel,
                                          const std::vector<double>& times, double dt, double jac_floor = 1e-3,
                                          double clearance_floor = -1.0);

/// sup over nodes of |a - b| and of the difference of d/ds at nodes.
double c0_distance(const InterfaceMap& a, const InterfaceMap& b);
double c1_distance(const InterfaceMap& a, const InterfaceMap& b);

struct FluxGap {
    std::vector<double> times;
    std::vector<double> gap;        // sup-node |F^eps(t) - F^eff(t)|
    std::vector<double> std_error;  // Monte Carlo error at the maximizing node
    double sup_gap = 0.0;
    double sup_std_error = 0.0;
};

/// int_0^t flow_rhs(Phi^eps(s)) ds at node level, piecewise constant in s.
std::vector<Vec2> effective_flux_integral(const GrowthRunRecord& record, const Kernel& kernel, double t);

/// F^eps(t) = int_0^t E_{T^{Phi,delta}_{z(s)}}[K(x, y) n(y)] ds from precomputed
/// interval fluxes vs F^eff on the record's snapshot grid.
FluxGap flux_compare(const GrowthRunRecord& record, const Kernel& kernel, const std::vector<IntervalFlux>& flux);
FluxGap flux_compare(const GrowthRunRecord& record, const GrowthModel& model, std::size_t n_samples,
                     unsigned threads = 1);

/// mean +- standard error over n, plus the order statistics used by the
/// trend checks. Infinite values (exploded runs) enter the quantiles only.
struct Statistic {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;  // finite values
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    std::size_t n_total = 0;
};
Statistic summarize(const std::vector<double>& values);

struct SeedResult {
    std::uint64_t seed = 0;
    std::size_t jumps = 0;
    bool exploded = false;
    double tau_sol_epsilon = 0.0;  // meaningful when exploded
    double c0_gap = 0.0;           // +inf when exploded
    double c1_gap = 0.0;
    double flux_gap = 0.0;
    double flux_gap_se = 0.0;
    double martingale_sup = 0.0;
    double martingale_se = 0.0;
};

struct ExperimentCell {
    std::string label;
    double epsilon = 0.0;
    double delta = 0.0;
    std::vector<SeedResult> seeds;
    Statistic c0_gap, c1_gap, flux_gap, martingale_sup;
    std::size_t exploded = 0;
};

struct CriterionResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ExperimentReport {
    std::string scenario_id;
    std::string kind;
    std::vector<ExperimentCell> cells;
    std::vector<CriterionResult> criteria;
    double runtime_seconds = 0.0;
    // chi_independence_check only
    double median_gap = 0.0;
    double seed_iqr = 0.0;

    bool all_pass() const;
    std::string to_json() const;
    /// label,epsilon,delta,seed,jumps,exploded,c0_gap,c1_gap,flux_gap,flux_gap_se,martingale_sup,martingale_se
    std::string to_csv() const;
};

struct ExperimentOptions {
    DeltaSchedule delta = DeltaSchedule::sqrt_eps();
    std::size_t compensator_samples = 64;
    unsigned threads = 1;
};

/// Micro runs for every (epsilon, seed) against the macro reference. Each run
/// reports the C0 and C1 gaps (sup over snapshots and nodes), the flux gap and
/// the martingale sup; cells aggregate per epsilon, largest epsilon first.
/// Criteria: median C0 gap and median flux gap strictly decreasing with
/// epsilon, and sup |M| <= C eps^{1/3} for >= 90% of seeds at every epsilon after
/// the first, with C the 90% quantile of sup |M| / eps^{1/3} at the first.
ExperimentReport convergence_experiment(const Scenario& scenario, const std::vector<double>& epsilon_grid,
                                        const std::vector<std::uint64_t>& seeds, const ExperimentOptions& opts = {});

/// Final-time snapshots for every profile and seed (same seeds, so common
/// random numbers across profiles). gap = sup over nodes and profile pairs of
/// the distance between node-wise coordinate medians; spread = median over
/// nodes of the node-wise interquartile range norm sqrt(iqr_x^2 + iqr_y^2),
/// pooled across profiles. Passes when gap < spread.
ExperimentReport chi_independence_check(const Scenario& scenario, const std::vector<Cutoff>& chi_profiles,
                                        double epsilon, const std::vector<std::uint64_t>& seeds,
                                        const ExperimentOptions& opts = {});

}  // namespace lapgrowth
