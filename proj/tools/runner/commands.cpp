#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <Eigen/Core>

#include "lapgrowth/parallel.hpp"
#include "lapgrowth/version.hpp"

namespace lapgrowth::runner {

namespace {

using nlohmann::json;

class Context {
  public:
    Context(const RunConfig& cfg, const RunOptions& opts)
        : cfg_(cfg), quiet_(opts.quiet), dir_(opts.out_dir.empty() ? std::filesystem::path(cfg.output_directory) : opts.out_dir) {
        std::filesystem::create_directories(dir_);
    }

    const RunConfig& cfg() const { return cfg_; }
    unsigned threads() const { return resolve_threads(cfg_.threads); }

    void log(const std::string& msg) const {
        if (!quiet_) std::cerr << msg << '\n';
    }

    void write(const std::string& name, const std::string& content) {
        const auto path = dir_ / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        out << content;
        outputs_.push_back(name);
        log("wrote " + path.string());
    }

    const std::vector<std::string>& outputs() const { return outputs_; }
    const std::filesystem::path& dir() const { return dir_; }

  private:
    const RunConfig& cfg_;
    bool quiet_;
    std::filesystem::path dir_;
    std::vector<std::string> outputs_;
};

double mean_radius(const InterfaceMap& phi) {
    double acc = 0.0;
    for (const auto& p : phi.values()) acc += p.norm();
    return acc / static_cast<double>(phi.node_count());
}

json optional_time(const std::optional<double>& t) { return t ? json(*t) : json(nullptr); }

void append_state_rows(std::ostringstream& os, const std::string& prefix, double t, const InterfaceMap& phi) {
    const auto& mesh = phi.mesh();
    for (std::size_t i = 0; i < phi.node_count(); ++i) {
        os << prefix << csv_number(t) << ',' << i << ',' << mesh.split_index(i).first << ','
           << csv_number(phi.values()[i].x()) << ',' << csv_number(phi.values()[i].y()) << '\n';
    }
}

int run_flow(Context& ctx, json& summary) {
    const auto& cfg = ctx.cfg();
    const auto mesh = cfg.build_mesh();
    const Kernel kernel(cfg.kernel, mesh);
    const auto phi0 = InterfaceMap::identity(mesh);

    FlowTrajectory traj;
    if (cfg.flow.method == "picard") {
        PicardOptions po;
        po.horizon = cfg.flow.t_max;
        po.grid_steps = cfg.flow.grid_steps;
        po.tol = cfg.flow.tol;
        po.max_iter = cfg.flow.max_iter;
        po.jac_floor = cfg.flow.jac_floor;
        po.clearance_floor = cfg.flow.clearance_floor;
        traj = picard_solve(phi0, kernel, po);
    } else {
        BlowupOptions bo;
        bo.dt = cfg.flow.dt;
        bo.t_max = cfg.flow.t_max;
        bo.jac_floor = cfg.flow.jac_floor;
        bo.clearance_floor = cfg.flow.clearance_floor;
        bo.record_interval = cfg.flow.record_interval;
        traj = integrate_until_blowup(phi0, kernel, bo);
    }
    ctx.log("flow: " + std::to_string(traj.states.size()) + " recorded states");

    std::ostringstream csv;
    csv << "t,node,component,x,y\n";
    for (std::size_t k = 0; k < traj.states.size(); ++k) append_state_rows(csv, "", traj.times[k], traj.states[k]);
    ctx.write("flow_trajectory.csv", csv.str());

    std::vector<double> area;
    for (const auto& s : traj.states) area.push_back(s.enclosed_area());
    summary["method"] = cfg.flow.method;
    summary["recorded_states"] = traj.states.size();
    summary["t_end"] = traj.times.back();
    summary["tau_sol"] = optional_time(traj.tau_sol);
    summary["blowup_reason"] = to_string(traj.blowup_reason);
    summary["blowup_component"] = traj.tau_sol ? json(traj.blowup_component) : json(nullptr);
    summary["picard_iterations"] = traj.iterations;
    summary["final_area"] = area.back();
    if (traj.times.size() >= 2) summary["area_rate"] = linear_fit(traj.times, area).first;

    if (cfg.scenario.type == "circle" && traj.times.size() >= 2) {
        std::vector<double> r;
        double shape = 0.0;
        for (const auto& s : traj.states) {
            const double m = mean_radius(s);
            r.push_back(m);
            for (const auto& p : s.values()) shape = std::max(shape, std::abs(p.norm() - m));
        }
        const auto [slope, intercept] = linear_fit(traj.times, r);
        summary["radius_fit"] = {{"slope", slope}, {"intercept", intercept}, {"points", r.size()}};
        summary["max_shape_deviation"] = shape;
    }
    if (cfg.scenario.type == "annulus" && cfg.kernel.coupling == 0.0 && cfg.kernel.family != KernelFamily::zero) {
        const double floor = cfg.flow.clearance_floor < 0.0 ? default_clearance_floor(*mesh) : cfg.flow.clearance_floor;
        RadialOptions ro;
        ro.collapse_radius = collapse_radius(cfg.scenario.n_inner, floor);
        ro.t_max = 2.0 * std::max(cfg.flow.t_max, 1.0);
        const auto oracle = radial_ode_oracle(cfg.scenario.r_inner, cfg.scenario.r_outer, cfg.kernel, ro);
        json o{{"collapse_radius", ro.collapse_radius}, {"collapse_time", optional_time(oracle.collapse_time)}};
        if (oracle.collapse_time && traj.tau_sol) {
            o["relative_error"] = std::abs(*traj.tau_sol - *oracle.collapse_time) / *oracle.collapse_time;
        }
        summary["radial_oracle"] = o;
    }
    ctx.write("flow_summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

int run_grow(Context& ctx, json& summary) {
    const auto& cfg = ctx.cfg();
    const Scenario sc = cfg.build_scenario();
    const GrowthModel model = sc.model();
    const auto phi0 = sc.initial();
    const auto& grid = cfg.micro.epsilon_grid;
    const auto& seeds = cfg.micro.seeds;

    std::vector<GrowthRunRecord> runs(grid.size() * seeds.size());
    std::vector<double> wall(runs.size());
    parallel_for(runs.size(), ctx.threads(), [&](std::size_t job) {
        const double eps = grid[job / seeds.size()];
        const auto t0 = std::chrono::steady_clock::now();
        runs[job] = run_growth(phi0, sc.z0, eps, cfg.micro.delta(eps), sc.t_max, sc.snapshot_times, model,
                               seeds[job % seeds.size()]);
        wall[job] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    });

    std::ostringstream snaps, jumps;
    snaps << "epsilon,seed,t,node,component,x,y\n";
    jumps << "epsilon,seed,t,component,arclength\n";
    summary["runs"] = json::array();
    for (const auto& rec : runs) {
        const std::string prefix = csv_number(rec.epsilon) + "," + std::to_string(rec.seed) + ",";
        for (std::size_t k = 0; k < rec.snapshot_times.size(); ++k) {
            append_state_rows(snaps, prefix, rec.snapshot_times[k], rec.states[rec.snapshot_state[k]]);
        }
        for (const auto& j : rec.jumps) {
            jumps << prefix << csv_number(j.time) << ',' << j.to.component << ',' << csv_number(j.to.u) << '\n';
        }
        summary["runs"].push_back({{"epsilon", rec.epsilon},
                                   {"delta", rec.delta},
                                   {"seed", rec.seed},
                                   {"jumps", rec.jumps.size()},
                                   {"trace_steps", rec.trace_steps()},
                                   {"tau_sol_epsilon", optional_time(rec.tau_sol_epsilon)},
                                   {"blowup_reason", to_string(rec.blowup_reason)},
                                   {"final_area", rec.states.back().enclosed_area()}});
    }
    double total_wall = 0.0;
    for (double w : wall) total_wall += w;
    summary["run_seconds_total"] = total_wall;
    ctx.write("grow_snapshots.csv", snaps.str());
    ctx.write("grow_jumps.csv", jumps.str());
    ctx.write("grow_summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

int run_compare(Context& ctx, json& summary) {
    const auto& cfg = ctx.cfg();
    const Scenario sc = cfg.build_scenario();
    ExperimentOptions eo;
    eo.delta = cfg.micro.delta;
    eo.compensator_samples = cfg.micro.compensator_samples;
    eo.threads = ctx.threads();
    ctx.log("compare: convergence experiment");
    const auto conv = convergence_experiment(sc, cfg.micro.epsilon_grid, cfg.micro.seeds, eo);
    std::string csv = conv.to_csv();
    summary["convergence"] = json::parse(conv.to_json());
    if (cfg.collar.chi_profiles.size() >= 2) {
        ctx.log("compare: cutoff independence");
        std::vector<Cutoff> profiles;
        for (const auto& name : cfg.collar.chi_profiles) profiles.push_back(Cutoff::by_name(name));
        const auto chi = chi_independence_check(sc, profiles, cfg.micro.chi_epsilon, cfg.micro.seeds, eo);
        summary["chi_independence"] = json::parse(chi.to_json());
        const std::string chi_csv = chi.to_csv();
        csv += chi_csv.substr(chi_csv.find('\n') + 1);
    }
    ctx.write("compare_seeds.csv", csv);
    ctx.write("compare_report.json", summary.dump(2) + "\n");
    return kExitOk;
}

int run_validate_sde(Context& ctx, json& summary) {
    const auto& s = ctx.cfg().sde;
    bool ok = true;
    summary["local_time_law"] = json::array();
    for (std::size_t k = 0; k < s.levy_pairs.size(); ++k) {
        const auto r = local_time_law_check(s.levy_pairs[k][0], s.levy_pairs[k][1], s.levy_paths, s.seed + k,
                                            s.levy_steps, ctx.threads());
        ok = ok && r.within_3se;
        summary["local_time_law"].push_back({{"delta", r.delta},
                                             {"u", r.u},
                                             {"expected", r.expected},
                                             {"estimate", r.estimate},
                                             {"std_error", r.std_error},
                                             {"n", r.n_paths},
                                             {"pass", r.within_3se}});
    }
    ctx.log("validate-sde: local-time law done");

    auto mesh = std::make_shared<const BoundaryMesh>(BoundaryMesh::circle(s.radius, s.nodes));
    auto chart = std::make_shared<const CollarChart>(mesh, 0.5 * s.radius);
    const MetricField field(InterfaceMap::identity(mesh), chart, Cutoff::quintic());
    const auto tr = trace_invariance_check(field, {0, 0.0}, s.trace_delta, s.trace_samples, s.seed,
                                           ctx.cfg().micro.sde, ctx.threads());
    const bool trace_ok = tr.ks < s.ks_threshold;
    ok = ok && trace_ok;
    summary["trace_invariance"] = {{"delta", tr.delta},
                                   {"n", tr.n_samples},
                                   {"ks", tr.ks},
                                   {"threshold", s.ks_threshold},
                                   {"mean_elapsed", tr.mean_elapsed},
                                   {"pass", trace_ok}};
    ctx.log("validate-sde: trace invariance done");

    summary["dirichlet"] = json::array();
    DirichletOptions dopt;
    dopt.nodes = s.nodes;
    dopt.sde = ctx.cfg().micro.sde;
    dopt.threads = ctx.threads();
    for (std::size_t k = 0; k < s.dirichlet_xi.size(); ++k) {
        const auto r = dirichlet_local_time_check(s.radius, s.dirichlet_xi[k], s.dirichlet_paths, s.seed + 100 + k, dopt);
        ok = ok && r.within_3se;
        summary["dirichlet"].push_back({{"xi", r.xi},
                                        {"expected", r.expected},
                                        {"mean_tau", r.mean_tau},
                                        {"std_error", r.std_error},
                                        {"n", r.n_paths},
                                        {"pass", r.within_3se}});
    }
    summary["all_pass"] = ok;
    ctx.write("validate_sde.json", summary.dump(2) + "\n");
    return ok ? kExitOk : kExitCriterionFailed;
}

int run_trace_invariance(Context& ctx, json& summary) {
    const auto& cfg = ctx.cfg();
    const Scenario sc = cfg.build_scenario();
    const auto model = sc.model();
    const auto field = model.field(sc.initial());
    const auto r = trace_invariance_check(field, sc.z0, cfg.sde.trace_delta, cfg.sde.trace_samples, cfg.sde.seed,
                                          cfg.micro.sde, ctx.threads());
    const bool ok = r.ks < cfg.sde.ks_threshold;
    summary["delta"] = r.delta;
    summary["n"] = r.n_samples;
    summary["ks"] = r.ks;
    summary["threshold"] = cfg.sde.ks_threshold;
    summary["mean_elapsed"] = r.mean_elapsed;
    summary["collar_length"] = sc.collar_length;
    summary["pass"] = ok;
    ctx.write("trace_invariance.json", summary.dump(2) + "\n");
    return ok ? kExitOk : kExitCriterionFailed;
}

}  // namespace

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names{"flow", "grow", "compare", "validate-sde", "trace-invariance"};
    return names;
}

std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw InvalidArgument("linear fit needs two or more points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (sxx == 0.0) throw InvalidArgument("linear fit needs distinct abscissae");
    const double slope = sxy / sxx;
    return {slope, my - slope * mx};
}

int dispatch(const std::string& subcommand, const RunConfig& config, const RunOptions& opts) {
    Context ctx(config, opts);
    const auto t0 = std::chrono::steady_clock::now();
    json summary{{"subcommand", subcommand}};
    int status = kExitOk;
    if (subcommand == "flow") {
        status = run_flow(ctx, summary);
    } else if (subcommand == "grow") {
        status = run_grow(ctx, summary);
    } else if (subcommand == "compare") {
        status = run_compare(ctx, summary);
    } else if (subcommand == "validate-sde") {
        status = run_validate_sde(ctx, summary);
    } else if (subcommand == "trace-invariance") {
        status = run_trace_invariance(ctx, summary);
    } else {
        throw InvalidArgument("unknown subcommand '" + subcommand + "'");
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json derived{{"threads", ctx.threads()}};
    json per_eps = json::array();
    for (double e : config.micro.epsilon_grid) per_eps.push_back({{"epsilon", e}, {"delta", config.micro.delta(e)}});
    derived["delta_per_epsilon"] = per_eps;
    {
        const auto mesh = config.build_mesh();
        derived["collar_length"] =
            config.collar.collar_length > 0.0 ? config.collar.collar_length : 0.5 * mesh->reach();
        derived["reference_nodes"] = mesh->node_count();
        derived["clearance_floor"] =
            config.flow.clearance_floor < 0.0 ? default_clearance_floor(*mesh) : config.flow.clearance_floor;
    }
    json manifest{{"subcommand", subcommand},
                  {"argv", opts.argv},
                  {"config", config.to_json()},
                  {"derived", derived},
                  {"seeds", config.micro.seeds},
                  {"versions",
                   {{"lapgrowth", kVersion},
                    {"compiler", __VERSION__},
                    {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                  std::to_string(EIGEN_MINOR_VERSION)},
                    {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                          std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
                  {"wall_time_seconds", wall},
                  {"outputs", ctx.outputs()},
                  {"exit_status", status}};
    ctx.write("manifest.json", manifest.dump(2) + "\n");
    return status;
}

}  // namespace lapgrowth::runner
