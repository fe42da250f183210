#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "zpm/polarization.hpp"
#include "zpm/random.hpp"
#include "zpm/zeno.hpp"

namespace zpm {

/// Device and acquisition model for one (setting, loop count) run.  Times are
/// in ns.  `zeno.tau_tilde` is derived from dgd_per_loop_ns / tau_g_ns; build
/// configs with make_experiment_config() or call sync_tau_tilde() after
/// editing either field.
struct ExperimentConfig {
  ZenoConfig zeno{0.5 / 1.6, 8, 0.0};
  double tau_g_ns = 1.6;
  double dgd_per_loop_ns = 0.5;
  double rep_rate_khz = 50.0;
  std::int64_t n_pulses = 100000;
  double loss_db_per_loop = 10.0;
  double mean_photons_per_pulse = 0.1;
  double background_rate_per_gate = 0.0;
  double gate_start_ns = 0.0;
  double gate_ns = 15.0;
  double spcm_jitter_ns = 0.1;
  double tdc_bin_ns = 0.02;
  std::uint64_t seed = 1;

  // Optional structured background: mean extra counts per gate distributed
  // over equal slices of the gate with the given relative weights.
  double structured_background_rate = 0.0;
  std::vector<double> structured_background_profile;

  void sync_tau_tilde() { zeno.tau_tilde = dgd_per_loop_ns / tau_g_ns; }

  /// Throws Error(Validation) naming the offending field.
  void validate() const;

  double gate_end_ns() const { return gate_start_ns + gate_ns; }
  /// Where the loop-count-independent pointer origin (t~ = 0) lands.
  double gate_center_ns() const { return gate_start_ns + gate_ns / 2; }
  double optical_transmission() const;
};

ExperimentConfig make_experiment_config(int loops, double tau_g_ns = 1.6, double dgd_per_loop_ns = 0.5,
                                        double protection_sigma = 0.0);

enum class RunKind { Signal, Background };

const char* to_string(RunKind kind);
RunKind run_kind_from_string(const std::string& s);

struct TimeTagDataset {
  std::vector<double> events;  // ns, multiples of tdc_bin_ns, in pulse order
  double gate_start = 0.0;
  double gate_ns = 0.0;
  ExperimentConfig config;
  RunKind kind = RunKind::Signal;
  std::optional<double> theta;  // polarization angle of the signal setting
  std::string label;

  std::size_t size() const { return events.size(); }
};

/// Jitter (Gaussian, sigma = spcm_jitter_ns), then TDC quantization to the
/// nearest multiple of tdc_bin_ns with ties to even, then the gate.
template <typename Rng>
std::optional<double> apply_detector(double true_time, const ExperimentConfig& config, Rng& rng);

std::optional<double> quantize_to_tdc(double time, const ExperimentConfig& config);

/// Expected number of detected signal photons (no background).
double expected_signal_events(const ExperimentConfig& config, const PolarizationState& psi0);

/// Pulse-by-pulse signal acquisition with background.  Each pulse draws from
/// its own counter-based substream, so the result depends only on the config
/// (seed included) and never on `threads`.
TimeTagDataset simulate_signal_run(const ExperimentConfig& config, const PolarizationState& psi0,
                                   unsigned threads = 1);

/// Background-only acquisition (pulse moved out of the window).
TimeTagDataset simulate_background_run(const ExperimentConfig& config, unsigned threads = 1);

// Serialization: `<stem>.csv` holds `arrival_ns` + one event per line;
// `<stem>.json` holds the config, run kind, gate and event count.
void write_dataset(const std::filesystem::path& csv_path, const TimeTagDataset& data);
TimeTagDataset read_dataset(const std::filesystem::path& csv_path);
std::string dataset_csv(const TimeTagDataset& data);

// ---------------------------------------------------------------------------

template <typename Rng>
std::optional<double> apply_detector(double true_time, const ExperimentConfig& config, Rng& rng) {
  double t = true_time;
  if (config.spcm_jitter_ns > 0) {
    std::normal_distribution<double> jitter(0.0, config.spcm_jitter_ns);
    t += jitter(rng);
  }
  return quantize_to_tdc(t, config);
}

}  // namespace zpm
