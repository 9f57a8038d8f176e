#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lapgrowth/homogenization_lab.hpp"

namespace lapgrowth::runner {

struct ScenarioConfig {
    std::string type = "circle";  // circle | annulus | mesh
    double radius = 1.0;
    std::size_t nodes = 256;
    double r_inner = 1.0;
    double r_outer = 2.0;
    std::size_t n_inner = 64;
    std::size_t n_outer = 128;
    std::string mesh_file;      // type == mesh, relative to the config file
    std::size_t components = 0;  // type == mesh: expected component count, 0 = any
};

struct CollarConfig {
    double collar_length = 0.0;  // <= 0: half the reach of the reference boundary
    std::string chi = "quintic";
    std::vector<std::string> chi_profiles{"quintic", "septic"};
};

struct FlowConfig {
    std::string method = "euler";  // euler | picard
    double dt = 1e-3;
    double t_max = 1.0;
    double record_interval = 0.01;
    double tol = 1e-8;
    int max_iter = 50;
    std::size_t grid_steps = 200;  // picard
    double jac_floor = 1e-3;
    double clearance_floor = -1.0;
};

struct MicroConfig {
    std::vector<double> epsilon_grid{0.04, 0.02, 0.01};
    DeltaSchedule delta = DeltaSchedule::sqrt_eps();
    std::vector<std::uint64_t> seeds;  // default 1..16
    double t_max = 0.5;
    std::vector<double> snapshot_times;  // default 11 uniform points on [0, t_max]
    std::size_t compensator_samples = 64;
    double chi_epsilon = 0.02;
    double macro_dt = 1e-3;
    SdeOptions sde{};
};

struct SdeCheckConfig {
    double radius = 1.0;
    std::size_t nodes = 256;
    std::uint64_t seed = 1;
    std::vector<std::array<double, 2>> levy_pairs{{0.5, 1.0}, {1.0, 1.0}, {0.5, 0.25}};
    std::size_t levy_paths = 100000;
    std::size_t levy_steps = 16;
    double trace_delta = 4.0;
    std::size_t trace_samples = 100000;
    double ks_threshold = 0.02;
    std::vector<double> dirichlet_xi{0.5, 1.0, 2.0};
    std::size_t dirichlet_paths = 10000;
};

struct RunConfig {
    ScenarioConfig scenario;
    KernelSpec kernel{};
    CollarConfig collar;
    FlowConfig flow;
    MicroConfig micro;
    SdeCheckConfig sde;
    std::string output_directory = "out";
    unsigned threads = 1;
    std::filesystem::path base_dir;  // directory of the config file

    /// Fully materialized config, including defaults and per-epsilon delta.
    nlohmann::json to_json() const;
    /// Replaces the micro seeds by first, first+1, ... (same count) and the
    /// SDE check seed by first.
    void override_seed(std::uint64_t first);

    std::shared_ptr<const BoundaryMesh> build_mesh() const;
    Scenario build_scenario() const;
};

/// Throws ConfigError naming the offending key path (e.g. "micro.epsilon").
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});

}  // namespace lapgrowth::runner
