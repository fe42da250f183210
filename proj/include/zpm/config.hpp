#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "zpm/analysis.hpp"
#include "zpm/montecarlo.hpp"

namespace zpm {

enum class TauMaxSource { Calibration, SlowAxis };

struct SweepConfig {
  std::vector<double> thetas_over_quarter_pi{0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4, 1.6, 1.8, 2.0};
  std::vector<int> loops{2, 5, 10, 20, 50};
  double loop_tau_product = 1.0;   // tau~ = product / loops when tau_tildes is empty
  std::vector<double> tau_tildes;  // explicit tau~ grid (crossed with loops)
};

struct Table1Options {
  std::vector<double> tau_tilde_grid;
  std::optional<std::filesystem::path> golden;  // CSV in table1.csv format
};

/// Eight-loop, five-setting acquisition mirroring the published comparison
/// table.  Settings are given by target <O> = cos 2 theta; the +/-1 entries
/// double as slow/fast references.
struct Table2Options {
  int loops = 8;
  double tau_g_ns = 1.6;
  std::vector<double> expectations{-1.0, -0.45, 0.07, 0.57, 1.0};
  std::int64_t n_pulses = 1250000;
  double loss_db_per_loop = 0.0;
  double mean_photons_per_pulse = 0.1;
  double background_rate_per_gate = 0.0;
};

struct AppConfig {
  ExperimentConfig experiment = make_experiment_config(8);
  unsigned threads = 1;
  std::vector<double> thetas_over_quarter_pi{0.0, 2.0};
  std::vector<int> loops{1, 2, 3, 4, 5, 6, 7, 8, 9};
  AnalysisOptions analysis;
  TauMaxSource tau_max_source = TauMaxSource::Calibration;
  std::optional<std::filesystem::path> data_dir;
  SweepConfig sweep;
  Table1Options table1;
  Table2Options table2;
};

/// `key = value` lines grouped under `[section]` headers; `;` and `#` start
/// comments.  Lists are comma separated.  Unknown sections or keys are errors.
AppConfig parse_config(std::string_view text);
AppConfig load_config(const std::filesystem::path& path);

enum class Command { Table1, Exact, Simulate, Analyze, Sweep, Table2 };

std::optional<Command> parse_command(std::string_view name);
const char* to_string(Command c);

struct RunManifest {
  std::optional<std::filesystem::path> config_path;
  Command command = Command::Table1;
  std::filesystem::path output_dir = ".";
  std::optional<std::uint64_t> seed_override;
  std::vector<double> extra_tau_tilde;  // appended to table1.tau_tilde_grid
};

}  // namespace zpm
