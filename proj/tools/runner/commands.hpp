#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "config.hpp"

namespace lapgrowth::runner {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCriterionFailed = 2;

struct RunOptions {
    std::filesystem::path out_dir;  // empty: config output.directory
    bool quiet = false;
    std::vector<std::string> argv;  // echoed into the manifest
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand and writes its outputs plus manifest.json into the
/// output directory. Returns 0 on success, 2 when a validate subcommand's
/// check fails. Errors propagate as exceptions.
int dispatch(const std::string& subcommand, const RunConfig& config, const RunOptions& opts);

/// CSV number formatting: 17 significant digits.
std::string csv_number(double v);

/// Least-squares slope and intercept of y against x.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lapgrowth::runner
