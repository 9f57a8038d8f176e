#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace rn = lapgrowth::runner;

int main(int argc, char** argv) {
    CLI::App app{"lapgrowth: macroscopic flow and micro growth runner"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    bool quiet = false;
    app.add_option("-c,--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app.add_option("-o,--out", out_dir, "output directory (overrides output.directory)");
    auto* seed_opt = app.add_option("--seed", seed, "first seed; replaces the configured seeds by consecutive ones");
    auto* threads_opt = app.add_option("-j,--threads", threads, "worker threads, 0 = hardware concurrency");
    app.add_flag("-q,--quiet", quiet, "no progress output");

    for (const auto& name : rn::subcommands()) app.add_subcommand(name)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code == 0) return rn::kExitOk;
        std::cerr << app.help();
        return rn::kExitError;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return rn::kExitError;
    }
    if (config_path.empty()) {
        std::cerr << "--config is required\n";
        return rn::kExitError;
    }

    try {
        auto cfg = rn::parse_config(config_path);
        if (seed_opt->count() > 0) cfg.override_seed(seed);
        if (threads_opt->count() > 0) cfg.threads = threads;
        rn::RunOptions opts;
        opts.out_dir = out_dir;
        opts.quiet = quiet;
        opts.argv.assign(argv, argv + argc);
        return rn::dispatch(app.get_subcommands().front()->get_name(), cfg, opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return rn::kExitError;
    }
}
