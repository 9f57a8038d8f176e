#include "lapgrowth/homogenization_lab.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "lapgrowth/parallel.hpp"
#include "lapgrowth/stats.hpp"

namespace lapgrowth {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Type-7 quantile that tolerates +inf entries.
double quantile_inf(std::vector<double> v, double q) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = h - static_cast<double>(lo);
    if (frac == 0.0 || v[lo] == v[hi]) return v[lo];
    if (std::isinf(v[hi])) return kInf;
    return v[lo] + frac * (v[hi] - v[lo]);
}

struct Interval {
    double start, end;
    std::size_t state;
};

// Holding intervals of the valid states of a record, as in trace_flux.
std::vector<Interval> holding_intervals(const GrowthRunRecord& record) {
    const std::size_t n = record.tau_sol_epsilon ? record.jumps.size() : record.jumps.size() + 1;
    std::vector<Interval> out;
    for (std::size_t i = 0; i < n; ++i) {
        const double start = i == 0 ? 0.0 : record.jumps[i - 1].time;
        const double end = i < record.jumps.size() ? record.jumps[i].time : record.t_max;
        out.push_back({start, end, i});
    }
    return out;
}

double overlap(const Interval& iv, double t) { return std::max(0.0, std::min(t, iv.end) - iv.start); }

nlohmann::json stat_json(const Statistic& s) {
    return {{"mean", s.mean}, {"std_error", s.std_error}, {"n", s.n},          {"median", s.median},
            {"q25", s.q25},   {"q75", s.q75},             {"n_total", s.n_total}};
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

double DeltaSchedule::operator()(double epsilon) const {
    if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
    return kind == Kind::fixed ? value : value * std::sqrt(epsilon);
}

std::string DeltaSchedule::name() const { return kind == Kind::fixed ? "fixed" : "sqrt"; }

std::vector<double> uniform_times(double t_max, std::size_t n) {
    if (n < 2) throw InvalidArgument("need at least 2 snapshot times");
    std::vector<double> t(n);
    for (std::size_t k = 0; k < n; ++k) t[k] = t_max * static_cast<double>(k) / static_cast<double>(n - 1);
    t.back() = t_max;
    return t;
}

Scenario Scenario::circle(double radius, std::size_t nodes, KernelSpec kernel, double t_max, std::size_t snapshots) {
    Scenario s;
    s.id = "circle";
    s.mesh = std::make_shared<const BoundaryMesh>(BoundaryMesh::circle(radius, nodes));
    s.kernel = kernel;
    s.collar_length = 0.5 * radius;
    s.t_max = t_max;
    s.snapshot_times = uniform_times(t_max, snapshots);
    return s;
}

Scenario Scenario::annulus(double r_inner, double r_outer, std::size_t n_inner, std::size_t n_outer,
                           KernelSpec kernel, double t_max, std::size_t snapshots) {
    Scenario s;
    s.id = "annulus";
    s.mesh = std::make_shared<const BoundaryMesh>(BoundaryMesh::annulus(r_inner, r_outer, n_inner, n_outer));
    s.kernel = kernel;
    s.collar_length = 0.5 * s.mesh->reach();
    s.t_max = t_max;
    s.snapshot_times = uniform_times(t_max, snapshots);
    return s;
}

GrowthModel Scenario::model() const { return model(chi); }

GrowthModel Scenario::model(const Cutoff& profile) const {
    auto chart = std::make_shared<const CollarChart>(mesh, collar_length);
    GrowthModel m(chart, profile, std::make_shared<const Kernel>(kernel, mesh), sde);
    m.jac_floor = jac_floor;
    m.clearance_floor = clearance_floor;
    return m;
}

std::vector<InterfaceMap> macro_reference(const InterfaceMap& phi0, const Kernel& kernel,
                                          const std::vector<double>& times, double dt, double jac_floor,
                                          double clearance_floor) {
    if (!(dt > 0.0)) throw InvalidArgument("macro dt must be > 0");
    if (!std::is_sorted(times.begin(), times.end())) throw InvalidArgument("times must be sorted");
    const double floor = clearance_floor < 0.0 ? default_clearance_floor(phi0.mesh()) : clearance_floor;
    std::vector<InterfaceMap> out;
    InterfaceMap phi = phi0;
    double t = 0.0;
    for (double target : times) {
        if (target < 0.0) throw InvalidArgument("times must be >= 0");
        const double span = target - t;
        if (span > 0.0) {
            const auto n = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
            const double h = span / static_cast<double>(n);
            for (std::size_t k = 0; k < n; ++k) phi = euler_step(phi, kernel, h);
            t = target;
            if (!phi.diffeo_check(jac_floor, floor).valid) {
                throw StateError("macro reference leaves the valid set before t = " + std::to_string(target));
            }
        }
        out.push_back(phi);
    }
    return out;
}

double c0_distance(const InterfaceMap& a, const InterfaceMap& b) {
    if (a.node_count() != b.node_count()) throw InvalidArgument("maps on different meshes");
    double d = 0.0;
    for (std::size_t i = 0; i < a.node_count(); ++i) d = std::max(d, (a.values()[i] - b.values()[i]).norm());
    return d;
}

double c1_distance(const InterfaceMap& a, const InterfaceMap& b) {
    double d = c0_distance(a, b);
    for (std::size_t i = 0; i < a.node_count(); ++i) {
        d = std::max(d, (a.tangent_derivative(i) - b.tangent_derivative(i)).norm());
    }
    return d;
}

std::vector<Vec2> effective_flux_integral(const GrowthRunRecord& record, const Kernel& kernel, double t) {
    std::vector<Vec2> acc(kernel.mesh().node_count(), Vec2::Zero());
    for (const auto& iv : holding_intervals(record)) {
        const double w = overlap(iv, t);
        if (w <= 0.0) break;
        const auto v = flow_rhs(record.states[iv.state], kernel);
        for (std::size_t j = 0; j < acc.size(); ++j) acc[j] += w * v[j];
    }
    return acc;
}

FluxGap flux_compare(const GrowthRunRecord& record, const Kernel& kernel, const std::vector<IntervalFlux>& flux) {
    const auto intervals = holding_intervals(record);
    if (flux.size() != intervals.size()) throw InvalidArgument("interval fluxes do not match the record");
    std::vector<std::vector<Vec2>> eff(intervals.size());
    for (std::size_t i = 0; i < intervals.size(); ++i) eff[i] = flow_rhs(record.states[i], kernel);

    const std::size_t nodes = kernel.mesh().node_count();
    FluxGap out;
    for (double t : record.snapshot_times) {
        double best = 0.0, best_se = 0.0;
        for (std::size_t j = 0; j < nodes; ++j) {
            Vec2 diff = Vec2::Zero();
            double var = 0.0;
            for (std::size_t i = 0; i < intervals.size(); ++i) {
                const double w = overlap(intervals[i], t);
                if (w <= 0.0) break;
                diff += w * (flux[i].mean[j] - eff[i][j]);
                var += w * w * flux[i].variance[j] / static_cast<double>(flux[i].samples);
            }
            if (diff.norm() > best) {
                best = diff.norm();
                best_se = std::sqrt(var);
            }
        }
        out.times.push_back(t);
        out.gap.push_back(best);
        out.std_error.push_back(best_se);
        if (best > out.sup_gap) {
            out.sup_gap = best;
            out.sup_std_error = best_se;
        }
    }
    return out;
}

FluxGap flux_compare(const GrowthRunRecord& record, const GrowthModel& model, std::size_t n_samples,
                     unsigned threads) {
    return flux_compare(record, *model.kernel, trace_flux(record, model, n_samples, StreamPurpose::flux, threads));
}

Statistic summarize(const std::vector<double>& values) {
    Statistic s;
    s.n_total = values.size();
    if (values.empty()) return s;
    std::vector<double> finite;
    for (double v : values) {
        if (std::isfinite(v)) finite.push_back(v);
    }
    s.n = finite.size();
    if (s.n >= 2) {
        const auto est = mean_estimate(finite);
        s.mean = est.mean;
        s.std_error = est.std_error;
    } else if (s.n == 1) {
        s.mean = finite[0];
        s.std_error = kInf;
    }
    s.median = quantile_inf(values, 0.5);
    s.q25 = quantile_inf(values, 0.25);
    s.q75 = quantile_inf(values, 0.75);
    return s;
}

bool ExperimentReport::all_pass() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.pass; });
}

std::string ExperimentReport::to_json() const {
    nlohmann::json doc;
    doc["scenario"] = scenario_id;
    doc["kind"] = kind;
    doc["runtime_seconds"] = runtime_seconds;
    doc["cells"] = nlohmann::json::array();
    for (const auto& c : cells) {
        nlohmann::json cell{{"label", c.label},
                            {"epsilon", c.epsilon},
                            {"delta", c.delta},
                            {"seeds", c.seeds.size()},
                            {"exploded", c.exploded},
                            {"c0_gap", stat_json(c.c0_gap)},
                            {"c1_gap", stat_json(c.c1_gap)},
                            {"flux_gap", stat_json(c.flux_gap)},
                            {"martingale_sup", stat_json(c.martingale_sup)}};
        doc["cells"].push_back(std::move(cell));
    }
    if (kind == "chi_independence") {
        doc["median_gap"] = median_gap;
        doc["seed_iqr"] = seed_iqr;
    }
    doc["criteria"] = nlohmann::json::array();
    for (const auto& c : criteria) doc["criteria"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    doc["all_pass"] = all_pass();
    return doc.dump(2);
}

std::string ExperimentReport::to_csv() const {
    std::ostringstream os;
    os << "label,epsilon,delta,seed,jumps,exploded,c0_gap,c1_gap,flux_gap,flux_gap_se,martingale_sup,martingale_se\n";
    for (const auto& c : cells) {
        for (const auto& s : c.seeds) {
            os << c.label << ',' << fmt17(c.epsilon) << ',' << fmt17(c.delta) << ',' << s.seed << ',' << s.jumps
               << ',' << (s.exploded ? 1 : 0) << ',' << fmt17(s.c0_gap) << ',' << fmt17(s.c1_gap) << ','
               << fmt17(s.flux_gap) << ',' << fmt17(s.flux_gap_se) << ',' << fmt17(s.martingale_sup) << ','
               << fmt17(s.martingale_se) << '\n';
        }
    }
    return os.str();
}

namespace {

void aggregate(ExperimentCell& cell) {
    std::vector<double> c0, c1, fg, ms;
    cell.exploded = 0;
    for (const auto& s : cell.seeds) {
        c0.push_back(s.c0_gap);
        c1.push_back(s.c1_gap);
        fg.push_back(s.flux_gap);
        ms.push_back(s.martingale_sup);
        if (s.exploded) ++cell.exploded;
    }
    cell.c0_gap = summarize(c0);
    cell.c1_gap = summarize(c1);
    cell.flux_gap = summarize(fg);
    cell.martingale_sup = summarize(ms);
}

SeedResult evaluate_run(const GrowthRunRecord& rec, const GrowthModel& model,
                        const std::vector<InterfaceMap>& reference, std::size_t compensator_samples) {
    SeedResult r;
    r.seed = rec.seed;
    r.jumps = rec.jumps.size();
    r.exploded = rec.tau_sol_epsilon.has_value();
    if (r.exploded) {
        r.tau_sol_epsilon = *rec.tau_sol_epsilon;
        r.c0_gap = r.c1_gap = kInf;
    } else {
        for (std::size_t k = 0; k < rec.snapshot_times.size(); ++k) {
            const auto& phi = rec.states[rec.snapshot_state[k]];
            r.c0_gap = std::max(r.c0_gap, c0_distance(phi, reference[k]));
            r.c1_gap = std::max(r.c1_gap, c1_distance(phi, reference[k]));
        }
    }
    // One set of compensator draws serves both the flux gap and M.
    const auto flux = trace_flux(rec, model, compensator_samples, StreamPurpose::compensator, 1);
    const auto fg = flux_compare(rec, *model.kernel, flux);
    r.flux_gap = fg.sup_gap;
    r.flux_gap_se = fg.sup_std_error;
    const auto mt = martingale_track(rec, model, flux);
    r.martingale_sup = mt.sup_over_path;
    r.martingale_se = mt.sup_std_error;
    return r;
}

std::string trend_detail(const std::vector<ExperimentCell>& cells, Statistic ExperimentCell::*field) {
    std::ostringstream os;
    for (const auto& c : cells) os << "eps=" << c.epsilon << ": median " << (c.*field).median << "; ";
    return os.str();
}

bool strictly_decreasing(const std::vector<ExperimentCell>& cells, Statistic ExperimentCell::*field) {
    for (std::size_t k = 1; k < cells.size(); ++k) {
        if (!((cells[k].*field).median < (cells[k - 1].*field).median)) return false;
    }
    return true;
}

}  // namespace

ExperimentReport convergence_experiment(const Scenario& scenario, const std::vector<double>& epsilon_grid,
                                        const std::vector<std::uint64_t>& seeds, const ExperimentOptions& opts) {
    if (epsilon_grid.empty() || seeds.empty()) throw InvalidArgument("empty epsilon grid or seed list");
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<double> grid = epsilon_grid;
    std::sort(grid.begin(), grid.end(), std::greater<>());

    const GrowthModel model = scenario.model();
    const InterfaceMap phi0 = scenario.initial();
    const auto reference = macro_reference(phi0, *model.kernel, scenario.snapshot_times, scenario.macro_dt,
                                           scenario.jac_floor, scenario.clearance_floor);

    ExperimentReport rep;
    rep.scenario_id = scenario.id;
    rep.kind = "convergence";
    rep.cells.resize(grid.size());
    for (std::size_t e = 0; e < grid.size(); ++e) {
        rep.cells[e].label = "eps";
        rep.cells[e].epsilon = grid[e];
        rep.cells[e].delta = opts.delta(grid[e]);
        rep.cells[e].seeds.resize(seeds.size());
    }
    parallel_for(grid.size() * seeds.size(), opts.threads, [&](std::size_t job) {
        auto& cell = rep.cells[job / seeds.size()];
        const std::uint64_t seed = seeds[job % seeds.size()];
        const auto rec = run_growth(phi0, scenario.z0, cell.epsilon, cell.delta, scenario.t_max,
                                    scenario.snapshot_times, model, seed);
        cell.seeds[job % seeds.size()] = evaluate_run(rec, model, reference, opts.compensator_samples);
    });
    for (auto& c : rep.cells) aggregate(c);

    rep.criteria.push_back({"c0_gap_decreasing", strictly_decreasing(rep.cells, &ExperimentCell::c0_gap),
                            trend_detail(rep.cells, &ExperimentCell::c0_gap)});
    rep.criteria.push_back({"flux_gap_decreasing", strictly_decreasing(rep.cells, &ExperimentCell::flux_gap),
                            trend_detail(rep.cells, &ExperimentCell::flux_gap)});

    // sup |M| <= C eps^{1/3}, C calibrated at the largest epsilon
    std::vector<double> ratio;
    for (const auto& s : rep.cells.front().seeds) ratio.push_back(s.martingale_sup / std::cbrt(grid.front()));
    const double c = quantile_inf(ratio, 0.9);
    bool ok = true;
    std::ostringstream os;
    os << "C=" << c << "; ";
    for (std::size_t e = 1; e < rep.cells.size(); ++e) {
        const auto& cell = rep.cells[e];
        const double bound = c * std::cbrt(cell.epsilon);
        const auto within = std::count_if(cell.seeds.begin(), cell.seeds.end(),
                                          [&](const SeedResult& s) { return s.martingale_sup <= bound; });
        const double frac = static_cast<double>(within) / static_cast<double>(cell.seeds.size());
        ok = ok && frac >= 0.9;
        os << "eps=" << cell.epsilon << ": " << within << "/" << cell.seeds.size() << " within " << bound << "; ";
    }
    if (rep.cells.size() < 2) ok = false;
    rep.criteria.push_back({"martingale_scaling", ok, os.str()});
    rep.runtime_seconds = seconds_since(t0);
    return rep;
}

ExperimentReport chi_independence_check(const Scenario& scenario, const std::vector<Cutoff>& chi_profiles,
                                        double epsilon, const std::vector<std::uint64_t>& seeds,
                                        const ExperimentOptions& opts) {
    if (chi_profiles.size() < 2) throw InvalidArgument("need at least two cutoff profiles");
    if (seeds.size() < 4) throw InvalidArgument("need at least four seeds for an interquartile range");
    const auto t0 = std::chrono::steady_clock::now();
    const double delta = opts.delta(epsilon);
    const InterfaceMap phi0 = scenario.initial();
    const std::vector<double> final_time{scenario.t_max};
    const Kernel kernel(scenario.kernel, scenario.mesh);
    const auto reference =
        macro_reference(phi0, kernel, final_time, scenario.macro_dt, scenario.jac_floor, scenario.clearance_floor);

    std::vector<GrowthModel> models;
    for (const auto& chi : chi_profiles) models.push_back(scenario.model(chi));

    ExperimentReport rep;
    rep.scenario_id = scenario.id;
    rep.kind = "chi_independence";
    rep.cells.resize(chi_profiles.size());
    const std::size_t nodes = scenario.mesh->node_count();
    // finals[p][s] = final node values
    std::vector<std::vector<std::vector<Vec2>>> finals(chi_profiles.size(),
                                                       std::vector<std::vector<Vec2>>(seeds.size()));
    for (std::size_t p = 0; p < chi_profiles.size(); ++p) {
        rep.cells[p].label = chi_profiles[p].name();
        rep.cells[p].epsilon = epsilon;
        rep.cells[p].delta = delta;
        rep.cells[p].seeds.resize(seeds.size());
    }
    parallel_for(chi_profiles.size() * seeds.size(), opts.threads, [&](std::size_t job) {
        const std::size_t p = job / seeds.size(), s = job % seeds.size();
        const auto rec = run_growth(phi0, scenario.z0, epsilon, delta, scenario.t_max, final_time, models[p], seeds[s]);
        rep.cells[p].seeds[s] = evaluate_run(rec, models[p], reference, opts.compensator_samples);
        finals[p][s] = rec.states[rec.snapshot_state.front()].values();
    });
    for (auto& c : rep.cells) aggregate(c);

    auto node_coords = [&](std::size_t p, std::size_t i, int axis) {
        std::vector<double> v;
        for (const auto& f : finals[p]) v.push_back(f[i](axis));
        return v;
    };
    double gap = 0.0;
    std::vector<double> iqr(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        std::vector<Vec2> med;
        std::vector<double> all_x, all_y;
        for (std::size_t p = 0; p < chi_profiles.size(); ++p) {
            const auto x = node_coords(p, i, 0), y = node_coords(p, i, 1);
            med.emplace_back(quantile(x, 0.5), quantile(y, 0.5));
            all_x.insert(all_x.end(), x.begin(), x.end());
            all_y.insert(all_y.end(), y.begin(), y.end());
        }
        for (std::size_t a = 0; a < med.size(); ++a) {
            for (std::size_t b = a + 1; b < med.size(); ++b) gap = std::max(gap, (med[a] - med[b]).norm());
        }
        const double ix = quantile(all_x, 0.75) - quantile(all_x, 0.25);
        const double iy = quantile(all_y, 0.75) - quantile(all_y, 0.25);
        iqr[i] = std::hypot(ix, iy);
    }
    rep.median_gap = gap;
    rep.seed_iqr = quantile(iqr, 0.5);
    std::ostringstream os;
    os << "sup-node median gap " << gap << " vs cross-seed IQR " << rep.seed_iqr;
    rep.criteria.push_back({"chi_independence", gap < rep.seed_iqr, os.str()});
    rep.runtime_seconds = seconds_since(t0);
    return rep;
}

}  // namespace lapgrowth
