#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "zpm/analysis.hpp"
#include "zpm/config.hpp"

namespace zpm {

/// Process exit codes shared by every command.
namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kValidation = 2;
inline constexpr int kGoldenMismatch = 3;
inline constexpr int kPipeline = 4;
}  // namespace exit_code

/// Loads the config named by the manifest (defaults when absent), applies
/// the seed override, runs the command and maps errors onto exit codes.
/// Diagnostics go to `log`.
int run_command(const RunManifest& manifest, std::ostream& log);

int cmd_table1(const AppConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_exact(const AppConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_simulate(const AppConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_analyze(const AppConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_sweep(const AppConfig& config, const std::filesystem::path& out, std::ostream& log);
int cmd_table2(const AppConfig& config, const std::filesystem::path& out, std::ostream& log);

/// "theta<t>_l<loops>" with t = theta / (pi/4).
std::string setting_label(double theta_over_quarter_pi, int loops);

/// Per-run seed derived from the master seed and the run's identity, so
/// adding or removing settings never changes the other runs.
std::uint64_t run_seed(std::uint64_t master, double theta_over_quarter_pi, int loops);

struct Table2Row {
  std::string label;
  double target_expectation;
  double theta;
  PipelineResult pipeline;
  MeasurementReport report;
};

struct Table2Outcome {
  std::vector<Table2Row> rows;
  double fast_axis_mean;
  double tau_max;
};

/// Simulates and analyses the five-setting scenario in memory; the fast and
/// slow reference runs are added when the setting list lacks them.
Table2Outcome run_table2_scenario(const Table2Options& options, const ExperimentConfig& detector, unsigned threads);

}  // namespace zpm
