#pragma once

// File formats and report text for the command-line front end.
//
// model.json:
//   {
//     "variables": ["U1", "U2", "U3"],
//     "factors": [
//       {"name": "C1", "family": "clayton", "theta_init": 1.0, "scope": ["U1", "U2"]},
//       {"name": "C2", "family": "clayton", "theta_init": 1.0, "scope": ["U2", "U3"]}
//     ],
//     "exponents": "uniform",          // or a p x K matrix (nested rows or flat row-major)
//     "prior": {"shape": 2, "rate": 2}
//   }
//
// Factor "name" defaults to C<j+1>, "theta_init" to 1, "exponents" to
// "uniform" and "prior" to Gamma(2, 2).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cdfield/data.hpp"
#include "cdfield/mcmc.hpp"
#include "cdfield/model.hpp"

namespace cdfield {

inline constexpr double kDataFloor = 1e-10;
inline constexpr double kDataCeiling = 1.0 - 1e-10;

struct ModelConfig {
  struct Factor {
    std::string name;
    Family family = Family::Clayton;
    double theta_init = 1.0;
    std::vector<std::string> scope;
  };

  std::vector<std::string> variables;
  std::vector<Factor> factors;
  std::optional<ExponentMatrix> exponents;  // nullopt: uniform
  Prior prior;
};

ModelConfig parse_model_config(std::string_view json_text);
ModelConfig load_model_config(const std::filesystem::path& path);

// Canonical JSON: scopes in variable order, explicit defaults.
std::string dump_model_config(const ModelConfig& config);
void save_model_config(const ModelConfig& config, const std::filesystem::path& path);

// Throws ErrorKind::Validation for unresolved names or model invariant
// violations.
CdnModel to_model(const ModelConfig& config);

// Config for a model built in code, with generated names U1.., C1...
ModelConfig config_from_model(const CdnModel& m, const Prior& prior = {});

// 16 hex digits of FNV-1a over the canonical JSON.
std::string model_hash(const ModelConfig& config);

struct Table {
  std::vector<std::string> header;
  DataMatrix values;
};

// Comma-separated, first non-comment line is the header; lines starting with
// '#' are skipped.
Table read_csv(const std::filesystem::path& path);
Table parse_csv(std::string_view text);
void write_csv(const std::filesystem::path& path, const Table& table);
std::string format_csv(const Table& table);

// Shortest text that parses back to the same double.
std::string format_double(double x);

// Per column rank / (N + 1), ties sharing their average rank.
Table pseudo_observations(const Table& table);

// Columns reordered to the model's variables; values must lie in [0, 1] and
// are clamped to [kDataFloor, kDataCeiling].
DataMatrix data_for_model(const ModelConfig& config, const Table& table);

// "iter,theta_<name>...,log_post", then a "# FAILED: ..." line for a failed run.
std::string format_trace_csv(const ModelConfig& config, const Trace& trace);

std::string format_summary(const ModelConfig& config, const Trace& trace,
                           std::optional<double> wallclock_seconds);

// "row,log_density" lines then "total,<sum of the rows in order>".
std::string density_report(std::span<const double> row_log_densities);

std::string graph_report(const ModelConfig& config, const CdnModel& m);

}  // namespace cdfield
