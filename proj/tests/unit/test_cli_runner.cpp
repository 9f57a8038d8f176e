#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <numbers>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"

using namespace lapgrowth;
using namespace lapgrowth::runner;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("lapgrowth_cli_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string config_error_key(const std::string& text) {
    try {
        (void)parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.key();
    }
    return "<none>";
}

RunOptions quiet_to(const fs::path& dir) {
    RunOptions o;
    o.out_dir = dir;
    o.quiet = true;
    return o;
}

}  // namespace

TEST(Config, EmptyObjectGivesDefaults) {
    const auto cfg = parse_config_text("{}");
    EXPECT_EQ(cfg.scenario.type, "circle");
    EXPECT_EQ(cfg.scenario.nodes, 256u);
    EXPECT_EQ(cfg.micro.seeds.size(), 16u);
    EXPECT_EQ(cfg.micro.seeds.front(), 1u);
    EXPECT_EQ(cfg.micro.snapshot_times.size(), 11u);
    EXPECT_DOUBLE_EQ(cfg.micro.delta(0.04), 0.2);
    EXPECT_EQ(cfg.threads, 1u);
}

TEST(Config, ErrorsNameTheKeyPath) {
    EXPECT_EQ(config_error_key(R"({"micro": {"epsilon": 0}})"), "micro.epsilon");
    EXPECT_EQ(config_error_key(R"({"micro": {"epsilon": -0.1}})"), "micro.epsilon");
    EXPECT_EQ(config_error_key(R"({"micro": {"epsilon_grid": [0.02, 0]}})"), "micro.epsilon_grid");
    EXPECT_EQ(config_error_key(R"({"flow": {"dtt": 0.01}})"), "flow.dtt");
    EXPECT_EQ(config_error_key(R"({"bogus": 1})"), "bogus");
    EXPECT_EQ(config_error_key(R"({"kernel": {"family": "cauchy"}})"), "kernel.family");
    EXPECT_EQ(config_error_key(R"({"micro": {"delta": 0.1, "delta_schedule": "sqrt"}})"), "micro.delta");
    EXPECT_EQ(config_error_key(R"({"micro": {"t_max": 0.5, "snapshot_times": [0, 0.7]}})"), "micro.snapshot_times");
    EXPECT_EQ(config_error_key(R"({"micro": {"seed": 1, "n_seeds": 4}})"), "micro.seeds");
    EXPECT_EQ(config_error_key(R"({"collar": {"collar_length": 5}})"), "collar.collar_length");
    EXPECT_EQ(config_error_key("{not json"), "<root>");
}

TEST(Config, ComponentCountMustMatchScenario) {
    EXPECT_EQ(config_error_key(R"({"scenario": {"type": "annulus", "components": 1}})"), "scenario.components");
    EXPECT_EQ(config_error_key(R"({"scenario": {"type": "circle", "components": 2}})"), "scenario.components");

    const auto dir = scratch("mesh");
    fs::create_directories(dir);
    {
        nlohmann::json nodes = nlohmann::json::array();
        for (int k = 0; k < 32; ++k) {
            const double th = 2.0 * std::numbers::pi * k / 32.0;
            nodes.push_back({std::cos(th), 0.5 * std::sin(th)});
        }
        std::ofstream(dir / "ellipse.json") << nlohmann::json{{"components", {{{"nodes", nodes}, {"orientation", 1}}}}};
    }
    EXPECT_NO_THROW((void)parse_config_text(R"({"scenario": {"type": "mesh", "mesh_file": "ellipse.json"}})", dir));
    const std::string text = R"({"scenario": {"type": "mesh", "mesh_file": "ellipse.json", "components": 2}})";
    try {
        (void)parse_config_text(text, dir);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key(), "scenario.components");
    }
}

TEST(Config, EchoIsMaterializedAndReparses) {
    const auto cfg = parse_config_text(R"({"micro": {"epsilon_grid": [0.04, 0.01], "delta_coefficient": 2}})");
    const auto echo = cfg.to_json();
    EXPECT_EQ(echo["micro"]["delta_schedule"], "sqrt");
    EXPECT_EQ(echo["micro"]["delta_coefficient"], 2.0);
    EXPECT_EQ(echo["micro"]["seeds"].size(), 16u);
    const auto again = parse_config_text(echo.dump());
    EXPECT_EQ(again.to_json(), echo);
    EXPECT_DOUBLE_EQ(again.micro.delta(0.01), 0.2);

    const auto fixed = parse_config_text(R"({"micro": {"delta": 0.3}})").to_json();
    EXPECT_EQ(fixed["micro"]["delta_schedule"], "fixed");
    EXPECT_EQ(fixed["micro"]["delta"], 0.3);
}

TEST(Config, SeedOverride) {
    auto cfg = parse_config_text(R"({"micro": {"n_seeds": 3}})");
    cfg.override_seed(10);
    EXPECT_EQ(cfg.micro.seeds, (std::vector<std::uint64_t>{10, 11, 12}));
    EXPECT_EQ(cfg.sde.seed, 10u);
}

TEST(Runner, LinearFitRecoversLine) {
    const auto [a, b] = linear_fit({0, 1, 2, 3}, {1, 3, 5, 7});
    EXPECT_DOUBLE_EQ(a, 2.0);
    EXPECT_DOUBLE_EQ(b, 1.0);
    EXPECT_THROW(linear_fit({1}, {1}), InvalidArgument);
}

TEST(Runner, FlowOnCircleInflatesAtUnitSpeed) {
    const auto cfg = parse_config_text(
        R"({"scenario": {"nodes": 128}, "flow": {"t_max": 0.5, "record_interval": 0.05}})");
    const auto dir = scratch("flow");
    ASSERT_EQ(dispatch("flow", cfg, quiet_to(dir)), kExitOk);
    const auto summary = nlohmann::json::parse(slurp(dir / "flow_summary.json"));
    EXPECT_NEAR(summary["radius_fit"]["slope"].get<double>(), 1.0, 1e-3);
    EXPECT_NEAR(summary["radius_fit"]["intercept"].get<double>(), 1.0, 1e-3);
    EXPECT_TRUE(summary["tau_sol"].is_null());

    const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(manifest["subcommand"], "flow");
    EXPECT_EQ(manifest["exit_status"], 0);
    EXPECT_EQ(manifest["config"], cfg.to_json());
    EXPECT_TRUE(manifest["versions"].contains("lapgrowth"));

    std::istringstream csv(slurp(dir / "flow_trajectory.csv"));
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "t,node,component,x,y");
    std::size_t rows = 0;
    for (std::string line; std::getline(csv, line);) ++rows;
    EXPECT_EQ(rows, 11u * 128u);
}

TEST(Runner, UnknownSubcommandThrows) {
    const auto cfg = parse_config_text("{}");
    EXPECT_THROW(dispatch("explode", cfg, quiet_to(scratch("unknown"))), InvalidArgument);
}

TEST(Runner, GrowOutputsAreByteIdenticalAcrossThreadCounts) {
    auto cfg = parse_config_text(
        R"({"scenario": {"nodes": 64}, "micro": {"epsilon_grid": [0.04, 0.02], "n_seeds": 3, "t_max": 0.2}})");
    const auto a = scratch("grow_a");
    const auto b = scratch("grow_b");
    ASSERT_EQ(dispatch("grow", cfg, quiet_to(a)), kExitOk);
    cfg.threads = 3;
    ASSERT_EQ(dispatch("grow", cfg, quiet_to(b)), kExitOk);
    for (const char* f : {"grow_snapshots.csv", "grow_jumps.csv"}) {
        const auto ca = slurp(a / f);
        EXPECT_FALSE(ca.empty());
        EXPECT_EQ(ca, slurp(b / f)) << f;
    }
}

TEST(Runner, TraceInvarianceFailsHonestlyAtSmallDelta) {
    // a short trace from one point cannot look like the surface measure
    const auto cfg = parse_config_text(
        R"({"scenario": {"nodes": 64}, "sde": {"trace_delta": 0.05, "trace_samples": 200}})");
    const auto dir = scratch("trace");
    EXPECT_EQ(dispatch("trace-invariance", cfg, quiet_to(dir)), kExitCriterionFailed);
    const auto summary = nlohmann::json::parse(slurp(dir / "trace_invariance.json"));
    EXPECT_FALSE(summary["pass"].get<bool>());
    EXPECT_EQ(nlohmann::json::parse(slurp(dir / "manifest.json"))["exit_status"], kExitCriterionFailed);
}
