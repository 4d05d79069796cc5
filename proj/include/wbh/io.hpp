#pragma once

// File formats: numeric CSV, scenario JSON and simulation report JSON / TSV.

#include <Eigen/Dense>

#include <cstdint>
#include <istream>
#include <string>
#include <vector>

#include "wbh/sim.hpp"

namespace wbh::io {

inline constexpr int kSchemaVersion = 1;

/// Comma-separated, row-major. A first row containing any non-numeric field
/// is taken as a header and skipped. Blank lines are ignored.
Eigen::MatrixXd read_csv_matrix(std::istream& in);
Eigen::MatrixXd read_csv_matrix_file(const std::string& path);

/// A single row or a single column.
Eigen::VectorXd read_csv_vector_file(const std::string& path);

/// "%.17g".
std::string format_double(double x);

/// Parses a scenario file. Accepts a "scenarios" array, a "grid" object, or
/// both (grid scenarios are appended after the explicit ones).
std::vector<Scenario> parse_scenarios(const std::string& json_text);

/// Overrides replication counts and derives scenario k's seed as
/// mix64(base_seed + k).
void apply_run_settings(std::vector<Scenario>& scenarios, std::size_t replications, std::uint64_t base_seed);

std::string reports_to_json(const std::vector<SimulationReport>& reports, std::uint64_t base_seed);

/// Header plus one row per scenario:
/// d, covariance, method, alpha, fdr_direct, se_direct, fdr_loo, se_loo, power, reps, seed.
std::string reports_to_tsv(const std::vector<SimulationReport>& reports);

}  // namespace wbh::io
