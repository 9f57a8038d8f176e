#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace lapgrowth::runner {

namespace {

using nlohmann::json;

// One JSON object of the config; remembers which keys were consumed so that
// leftovers can be reported as unknown.
class Block {
  public:
    Block(const json& j, std::string path) : obj_(j), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }
    bool has(const std::string& k) const { return obj_.contains(k); }

    const json* find(const std::string& k) {
        seen_.insert(k);
        const auto it = obj_.find(k);
        return it == obj_.end() ? nullptr : &*it;
    }

    bool number(const std::string& k, double& out) {
        const json* v = find(k);
        if (!v) return false;
        if (!v->is_number()) throw ConfigError(key(k), "expected a number");
        out = v->get<double>();
        if (!std::isfinite(out)) throw ConfigError(key(k), "must be finite");
        return true;
    }

    template <class Int>
    bool integer(const std::string& k, Int& out) {
        const json* v = find(k);
        if (!v) return false;
        out = to_integer<Int>(*v, key(k));
        return true;
    }

    bool string(const std::string& k, std::string& out) {
        const json* v = find(k);
        if (!v) return false;
        if (!v->is_string()) throw ConfigError(key(k), "expected a string");
        out = v->get<std::string>();
        return true;
    }

    bool numbers(const std::string& k, std::vector<double>& out) {
        const json* v = find(k);
        if (!v) return false;
        if (!v->is_array()) throw ConfigError(key(k), "expected an array of numbers");
        out.clear();
        for (const auto& e : *v) {
            if (!e.is_number()) throw ConfigError(key(k), "expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return true;
    }

    bool strings(const std::string& k, std::vector<std::string>& out) {
        const json* v = find(k);
        if (!v) return false;
        if (!v->is_array()) throw ConfigError(key(k), "expected an array of strings");
        out.clear();
        for (const auto& e : *v) {
            if (!e.is_string()) throw ConfigError(key(k), "expected an array of strings");
            out.push_back(e.get<std::string>());
        }
        return true;
    }

    Block child(const std::string& k) {
        const json* v = find(k);
        static const json empty = json::object();
        return Block(v ? *v : empty, key(k));
    }

    void finish() const {
        for (const auto& [k, v] : obj_.items()) {
            if (!seen_.count(k)) throw ConfigError(key(k), "unknown key");
        }
    }

    template <class Int>
    static Int to_integer(const json& v, const std::string& where) {
        if (v.is_number_unsigned() || v.is_number_integer()) {
            if (v.is_number_integer() && v.get<long long>() < 0) throw ConfigError(where, "must be >= 0");
            return static_cast<Int>(v.get<unsigned long long>());
        }
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<Int>(d);
        }
        throw ConfigError(where, "expected a non-negative integer");
    }

  private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw ConfigError(key, what);
}

void parse_scenario(Block b, ScenarioConfig& s) {
    b.string("type", s.type);
    require(s.type == "circle" || s.type == "annulus" || s.type == "mesh", b.key("type"),
            "must be circle, annulus or mesh");
    if (b.number("radius", s.radius)) require(s.radius > 0.0, b.key("radius"), "must be > 0");
    if (b.integer("nodes", s.nodes)) require(s.nodes >= BoundaryMesh::kMinNodes, b.key("nodes"), "must be >= 16");
    b.number("r_inner", s.r_inner);
    b.number("r_outer", s.r_outer);
    b.integer("n_inner", s.n_inner);
    b.integer("n_outer", s.n_outer);
    b.string("mesh_file", s.mesh_file);
    b.integer("components", s.components);
    if (s.type == "annulus") {
        require(s.r_inner > 0.0, b.key("r_inner"), "must be > 0");
        require(s.r_outer > s.r_inner, b.key("r_outer"), "must exceed scenario.r_inner");
        require(s.n_inner >= BoundaryMesh::kMinNodes, b.key("n_inner"), "must be >= 16");
        require(s.n_outer >= BoundaryMesh::kMinNodes, b.key("n_outer"), "must be >= 16");
        require(s.components == 0 || s.components == 2, b.key("components"), "an annulus has 2 components");
    }
    if (s.type == "circle") {
        require(s.components == 0 || s.components == 1, b.key("components"), "a circle has 1 component");
    }
    if (s.type == "mesh") require(!s.mesh_file.empty(), b.key("mesh_file"), "required for type mesh");
    b.finish();
}

void parse_kernel(Block b, KernelSpec& k) {
    std::string s;
    try {
        if (b.string("family", s)) k.family = parse_kernel_family(s);
    } catch (const InvalidArgument& e) {
        throw ConfigError(b.key("family"), e.what());
    }
    try {
        if (b.string("normalization", s)) k.normalization = parse_kernel_normalization(s);
    } catch (const InvalidArgument& e) {
        throw ConfigError(b.key("normalization"), e.what());
    }
    if (b.number("bandwidth", k.bandwidth)) require(k.bandwidth > 0.0, b.key("bandwidth"), "must be > 0");
    if (b.number("coupling", k.coupling)) require(k.coupling >= 0.0, b.key("coupling"), "must be >= 0");
    try {
        validate(k);
    } catch (const InvalidArgument& e) {
        throw ConfigError(b.key("bandwidth"), e.what());
    }
    b.finish();
}

void check_profile(const std::string& name, const std::string& key) {
    try {
        (void)Cutoff::by_name(name);
    } catch (const Error& e) {
        throw ConfigError(key, e.what());
    }
}

void parse_collar(Block b, CollarConfig& c) {
    if (b.number("collar_length", c.collar_length)) {
        require(c.collar_length >= 0.0, b.key("collar_length"), "must be >= 0 (0 = half the reach)");
    }
    if (b.string("chi", c.chi)) check_profile(c.chi, b.key("chi"));
    if (b.strings("chi_profiles", c.chi_profiles)) {
        require(!c.chi_profiles.empty(), b.key("chi_profiles"), "must not be empty");
        for (const auto& p : c.chi_profiles) check_profile(p, b.key("chi_profiles"));
    }
    b.finish();
}

void parse_flow(Block b, FlowConfig& f) {
    b.string("method", f.method);
    require(f.method == "euler" || f.method == "picard", b.key("method"), "must be euler or picard");
    if (b.number("dt", f.dt)) require(f.dt > 0.0, b.key("dt"), "must be > 0");
    if (b.number("t_max", f.t_max)) require(f.t_max > 0.0, b.key("t_max"), "must be > 0");
    if (b.number("record_interval", f.record_interval)) {
        require(f.record_interval >= 0.0, b.key("record_interval"), "must be >= 0");
    }
    if (b.number("tol", f.tol)) require(f.tol > 0.0, b.key("tol"), "must be > 0");
    if (b.integer("max_iter", f.max_iter)) require(f.max_iter >= 1, b.key("max_iter"), "must be >= 1");
    if (b.integer("grid_steps", f.grid_steps)) require(f.grid_steps >= 1, b.key("grid_steps"), "must be >= 1");
    if (b.number("jac_floor", f.jac_floor)) require(f.jac_floor > 0.0, b.key("jac_floor"), "must be > 0");
    b.number("clearance_floor", f.clearance_floor);
    b.finish();
}

void parse_micro(Block b, MicroConfig& m) {
    require(!(b.has("epsilon") && b.has("epsilon_grid")), b.key("epsilon"),
            "epsilon and epsilon_grid are mutually exclusive");
    double eps = 0.0;
    if (b.number("epsilon", eps)) {
        require(eps > 0.0, b.key("epsilon"), "must be > 0");
        m.epsilon_grid = {eps};
    }
    if (b.numbers("epsilon_grid", m.epsilon_grid)) {
        require(!m.epsilon_grid.empty(), b.key("epsilon_grid"), "must not be empty");
        for (double e : m.epsilon_grid) require(e > 0.0, b.key("epsilon_grid"), "every epsilon must be > 0");
    }

    std::string schedule;
    const bool has_schedule = b.string("delta_schedule", schedule);
    double delta = 0.0;
    const bool has_delta = b.number("delta", delta);
    double coefficient = 1.0;
    const bool has_coefficient = b.number("delta_coefficient", coefficient);
    if (has_schedule) require(schedule == "sqrt" || schedule == "fixed", b.key("delta_schedule"), "must be sqrt or fixed");
    if (has_delta) {
        require(delta > 0.0, b.key("delta"), "must be > 0");
        require(!has_schedule || schedule == "fixed", b.key("delta"), "a fixed delta conflicts with delta_schedule sqrt");
        m.delta = DeltaSchedule::fixed(delta);
    } else if (has_schedule && schedule == "fixed") {
        throw ConfigError(b.key("delta"), "required when delta_schedule is fixed");
    } else {
        require(coefficient > 0.0, b.key("delta_coefficient"), "must be > 0");
        m.delta = DeltaSchedule::sqrt_eps(coefficient);
    }
    require(!(has_coefficient && has_delta), b.key("delta_coefficient"), "only used with delta_schedule sqrt");

    require(int(b.has("seed")) + int(b.has("seeds")) + int(b.has("n_seeds")) <= 1, b.key("seeds"),
            "give one of seed, seeds, n_seeds");
    std::uint64_t seed = 0;
    std::size_t n_seeds = 16;
    if (b.integer("seed", seed)) m.seeds = {seed};
    if (const json* v = b.find("seeds")) {
        if (!v->is_array() || v->empty()) throw ConfigError(b.key("seeds"), "expected a non-empty array of integers");
        m.seeds.clear();
        for (const auto& e : *v) m.seeds.push_back(Block::to_integer<std::uint64_t>(e, b.key("seeds")));
    }
    if (b.integer("n_seeds", n_seeds)) require(n_seeds >= 1, b.key("n_seeds"), "must be >= 1");
    if (m.seeds.empty()) {
        for (std::uint64_t s = 1; s <= n_seeds; ++s) m.seeds.push_back(s);
    }

    if (b.number("t_max", m.t_max)) require(m.t_max > 0.0, b.key("t_max"), "must be > 0");
    if (b.numbers("snapshot_times", m.snapshot_times)) {
        require(!m.snapshot_times.empty(), b.key("snapshot_times"), "must not be empty");
        require(std::is_sorted(m.snapshot_times.begin(), m.snapshot_times.end()), b.key("snapshot_times"),
                "must be sorted");
        require(m.snapshot_times.front() >= 0.0 && m.snapshot_times.back() <= m.t_max, b.key("snapshot_times"),
                "must lie in [0, micro.t_max]");
    } else {
        m.snapshot_times = uniform_times(m.t_max, 11);
    }
    if (b.integer("compensator_samples", m.compensator_samples)) {
        require(m.compensator_samples >= 2, b.key("compensator_samples"), "must be >= 2");
    }
    if (b.number("chi_epsilon", m.chi_epsilon)) require(m.chi_epsilon > 0.0, b.key("chi_epsilon"), "must be > 0");
    if (b.number("macro_dt", m.macro_dt)) require(m.macro_dt > 0.0, b.key("macro_dt"), "must be > 0");
    if (b.number("dt_base", m.sde.dt_base)) require(m.sde.dt_base > 0.0, b.key("dt_base"), "must be > 0");
    if (b.integer("collar_refinement", m.sde.collar_refinement)) {
        require(m.sde.collar_refinement >= 1, b.key("collar_refinement"), "must be >= 1");
    }
    if (b.integer("step_budget", m.sde.step_budget)) require(m.sde.step_budget >= 1, b.key("step_budget"), "must be >= 1");
    b.finish();
}

void parse_sde(Block b, SdeCheckConfig& s) {
    if (b.number("radius", s.radius)) require(s.radius > 0.0, b.key("radius"), "must be > 0");
    if (b.integer("nodes", s.nodes)) require(s.nodes >= BoundaryMesh::kMinNodes, b.key("nodes"), "must be >= 16");
    b.integer("seed", s.seed);
    if (const json* v = b.find("levy_pairs")) {
        if (!v->is_array() || v->empty()) throw ConfigError(b.key("levy_pairs"), "expected [[delta, u], ...]");
        s.levy_pairs.clear();
        for (const auto& e : *v) {
            if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
                throw ConfigError(b.key("levy_pairs"), "expected [[delta, u], ...]");
            }
            const double d = e[0].get<double>(), u = e[1].get<double>();
            require(d > 0.0 && u > 0.0, b.key("levy_pairs"), "delta and u must be > 0");
            s.levy_pairs.push_back({d, u});
        }
    }
    if (b.integer("levy_paths", s.levy_paths)) require(s.levy_paths >= 1, b.key("levy_paths"), "must be >= 1");
    if (b.integer("levy_steps", s.levy_steps)) require(s.levy_steps >= 1, b.key("levy_steps"), "must be >= 1");
    if (b.number("trace_delta", s.trace_delta)) require(s.trace_delta > 0.0, b.key("trace_delta"), "must be > 0");
    if (b.integer("trace_samples", s.trace_samples)) {
        require(s.trace_samples >= 2, b.key("trace_samples"), "must be >= 2");
    }
    if (b.number("ks_threshold", s.ks_threshold)) {
        require(s.ks_threshold > 0.0 && s.ks_threshold < 1.0, b.key("ks_threshold"), "must lie in (0, 1)");
    }
    if (b.numbers("dirichlet_xi", s.dirichlet_xi)) {
        for (double x : s.dirichlet_xi) require(x >= 0.0, b.key("dirichlet_xi"), "must be >= 0");
    }
    if (b.integer("dirichlet_paths", s.dirichlet_paths)) {
        require(s.dirichlet_paths >= 2, b.key("dirichlet_paths"), "must be >= 2");
    }
    b.finish();
}

}  // namespace

std::shared_ptr<const BoundaryMesh> RunConfig::build_mesh() const {
    const auto& s = scenario;
    if (s.type == "circle") return std::make_shared<const BoundaryMesh>(BoundaryMesh::circle(s.radius, s.nodes));
    if (s.type == "annulus") {
        return std::make_shared<const BoundaryMesh>(BoundaryMesh::annulus(s.r_inner, s.r_outer, s.n_inner, s.n_outer));
    }
    std::filesystem::path p(s.mesh_file);
    if (p.is_relative()) p = base_dir / p;
    return std::make_shared<const BoundaryMesh>(BoundaryMesh::load(p));
}

Scenario RunConfig::build_scenario() const {
    Scenario sc;
    sc.id = scenario.type;
    sc.mesh = build_mesh();
    sc.kernel = kernel;
    sc.collar_length = collar.collar_length > 0.0 ? collar.collar_length : 0.5 * sc.mesh->reach();
    sc.chi = Cutoff::by_name(collar.chi);
    sc.t_max = micro.t_max;
    sc.snapshot_times = micro.snapshot_times;
    sc.sde = micro.sde;
    sc.macro_dt = micro.macro_dt;
    sc.jac_floor = flow.jac_floor;
    sc.clearance_floor = flow.clearance_floor;
    return sc;
}

void RunConfig::override_seed(std::uint64_t first) {
    for (std::size_t k = 0; k < micro.seeds.size(); ++k) micro.seeds[k] = first + k;
    sde.seed = first;
}

nlohmann::json RunConfig::to_json() const {
    json j;
    json sc{{"type", scenario.type}};
    if (scenario.type == "circle") {
        sc["radius"] = scenario.radius;
        sc["nodes"] = scenario.nodes;
    } else if (scenario.type == "annulus") {
        sc["r_inner"] = scenario.r_inner;
        sc["r_outer"] = scenario.r_outer;
        sc["n_inner"] = scenario.n_inner;
        sc["n_outer"] = scenario.n_outer;
    } else {
        std::filesystem::path p(scenario.mesh_file);
        if (p.is_relative()) p = base_dir / p;
        sc["mesh_file"] = std::filesystem::absolute(p).lexically_normal().string();
        sc["components"] = scenario.components;
    }
    j["scenario"] = sc;
    j["kernel"] = {{"family", to_string(kernel.family)},
                   {"bandwidth", kernel.bandwidth},
                   {"coupling", kernel.coupling},
                   {"normalization", to_string(kernel.normalization)}};
    j["collar"] = {{"collar_length", collar.collar_length}, {"chi", collar.chi}, {"chi_profiles", collar.chi_profiles}};
    j["flow"] = {{"method", flow.method},       {"dt", flow.dt},
                 {"t_max", flow.t_max},         {"record_interval", flow.record_interval},
                 {"tol", flow.tol},             {"max_iter", flow.max_iter},
                 {"grid_steps", flow.grid_steps}, {"jac_floor", flow.jac_floor},
                 {"clearance_floor", flow.clearance_floor}};
    json micro_j{{"epsilon_grid", micro.epsilon_grid},
                 {"delta_schedule", micro.delta.name()},
                 {"seeds", micro.seeds},
                 {"t_max", micro.t_max},
                 {"snapshot_times", micro.snapshot_times},
                 {"compensator_samples", micro.compensator_samples},
                 {"chi_epsilon", micro.chi_epsilon},
                 {"macro_dt", micro.macro_dt},
                 {"dt_base", micro.sde.dt_base},
                 {"collar_refinement", micro.sde.collar_refinement},
                 {"step_budget", micro.sde.step_budget}};
    if (micro.delta.kind == DeltaSchedule::Kind::fixed) {
        micro_j["delta"] = micro.delta.value;
    } else {
        micro_j["delta_coefficient"] = micro.delta.value;
    }
    j["micro"] = micro_j;
    json pairs = json::array();
    for (const auto& p : sde.levy_pairs) pairs.push_back({p[0], p[1]});
    j["sde"] = {{"radius", sde.radius},
                {"nodes", sde.nodes},
                {"seed", sde.seed},
                {"levy_pairs", pairs},
                {"levy_paths", sde.levy_paths},
                {"levy_steps", sde.levy_steps},
                {"trace_delta", sde.trace_delta},
                {"trace_samples", sde.trace_samples},
                {"ks_threshold", sde.ks_threshold},
                {"dirichlet_xi", sde.dirichlet_xi},
                {"dirichlet_paths", sde.dirichlet_paths}};
    j["output"] = {{"directory", output_directory}};
    j["threads"] = threads;
    return j;
}

RunConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }
    RunConfig cfg;
    cfg.base_dir = base_dir;
    Block root(doc, "");
    parse_scenario(root.child("scenario"), cfg.scenario);
    parse_kernel(root.child("kernel"), cfg.kernel);
    parse_collar(root.child("collar"), cfg.collar);
    parse_flow(root.child("flow"), cfg.flow);
    parse_micro(root.child("micro"), cfg.micro);
    parse_sde(root.child("sde"), cfg.sde);
    {
        Block out = root.child("output");
        out.string("directory", cfg.output_directory);
        out.finish();
    }
    root.integer("threads", cfg.threads);
    root.finish();

    // cross-block checks need the reference boundary
    std::shared_ptr<const BoundaryMesh> mesh;
    try {
        mesh = cfg.build_mesh();
    } catch (const Error& e) {
        throw ConfigError(cfg.scenario.type == "mesh" ? "scenario.mesh_file" : "scenario", e.what());
    }
    if (cfg.scenario.components != 0 && mesh->component_count() != cfg.scenario.components) {
        throw ConfigError("scenario.components", "mesh has " + std::to_string(mesh->component_count()) +
                                                     " component(s), expected " +
                                                     std::to_string(cfg.scenario.components));
    }
    if (cfg.collar.collar_length > 0.0 && cfg.collar.collar_length >= mesh->reach()) {
        std::ostringstream os;
        os << "must be below the reach of the reference boundary (" << mesh->reach() << ")";
        throw ConfigError("collar.collar_length", os.str());
    }
    return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.parent_path());
}

}  // namespace lapgrowth::runner
