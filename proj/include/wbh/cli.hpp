#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wbh::cli {

enum ExitCode : int { kSuccess = 0, kInvalidInput = 2, kNumericalFailure = 3 };

struct RunConfig {
    std::string command;
    double alpha = 0.05;
    std::string mode = "z";  // z | t
    std::optional<double> m;
    std::optional<double> v;
    std::string sigma_path;
    std::string stats_path;
    std::string design_path;
    std::string response_path;
    std::string scenario_path;
    std::size_t replications = 0;  // 0 keeps the scenario file's counts
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    std::string format = "json";  // json | tsv
};

// Each command writes its machine-readable result to `out` and diagnostics to
// `err`, and returns an ExitCode. Errors never escape as exceptions.
int cmd_calibrate(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_test(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_select(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& config, std::ostream& out, std::ostream& err);

int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

/// Parses argv (argv[0] is the program name) and runs the chosen command.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace wbh::cli
