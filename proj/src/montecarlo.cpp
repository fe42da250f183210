#include "zpm/montecarlo.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "zpm/io.hpp"

namespace zpm {

namespace {

void check(bool ok, const char* key, const std::string& what) {
  if (!ok) throw Error(ErrorKind::Validation, std::string(key) + ": " + what);
}

// Events for pulses [begin, end) in pulse order.
template <typename PulseFn>
std::vector<double> run_pulses(std::int64_t n_pulses, unsigned threads, PulseFn pulse) {
  threads = std::max(1u, threads);
  if (threads == 1 || n_pulses < 4096) {
    std::vector<double> out;
    for (std::int64_t i = 0; i < n_pulses; ++i) pulse(i, out);
    return out;
  }
  std::vector<std::vector<double>> parts(threads);
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      const std::int64_t begin = n_pulses * t / threads;
      const std::int64_t end = n_pulses * (t + 1) / threads;
      pool.emplace_back([&, t, begin, end] {
        for (std::int64_t i = begin; i < end; ++i) pulse(i, parts[t]);
      });
    }
  }
  std::vector<double> out;
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  out.reserve(total);
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

void add_background(const ExperimentConfig& c, RandomStream& rng, std::vector<double>& out) {
  if (c.background_rate_per_gate > 0) {
    std::poisson_distribution<long> counts(c.background_rate_per_gate);
    const long n = counts(rng);
    for (long k = 0; k < n; ++k) {
      if (auto t = quantize_to_tdc(c.gate_start_ns + c.gate_ns * rng.uniform(), c)) out.push_back(*t);
    }
  }
  if (c.structured_background_rate > 0 && !c.structured_background_profile.empty()) {
    std::poisson_distribution<long> counts(c.structured_background_rate);
    std::discrete_distribution<std::size_t> slice(c.structured_background_profile.begin(),
                                                  c.structured_background_profile.end());
    const double width = c.gate_ns / static_cast<double>(c.structured_background_profile.size());
    const long n = counts(rng);
    for (long k = 0; k < n; ++k) {
      const std::size_t s = slice(rng);
      const double t = c.gate_start_ns + width * (static_cast<double>(s) + rng.uniform());
      if (auto q = quantize_to_tdc(t, c)) out.push_back(*q);
    }
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  check(tau_g_ns > 0 && std::isfinite(tau_g_ns), "tau_g_ns", "must be > 0");
  check(dgd_per_loop_ns > 0 && std::isfinite(dgd_per_loop_ns), "dgd_per_loop_ns", "must be > 0");
  check(std::abs(zeno.tau_tilde - dgd_per_loop_ns / tau_g_ns) <= 1e-12 * std::max(1.0, zeno.tau_tilde), "tau_tilde",
        "must equal dgd_per_loop_ns / tau_g_ns");
  check(zeno.loops >= 1, "loops", "must be >= 1");
  check(zeno.protection_sigma >= 0, "protection_sigma_rad", "must be >= 0");
  check(rep_rate_khz > 0, "rep_rate_khz", "must be > 0");
  check(n_pulses > 0, "n_pulses", "must be a positive integer");
  check(loss_db_per_loop >= 0, "loss_db_per_loop", "must be >= 0");
  check(mean_photons_per_pulse > 0, "mean_photons_per_pulse", "must be > 0");
  check(background_rate_per_gate >= 0, "background_rate_per_gate", "must be >= 0");
  check(gate_ns > 0, "gate_ns", "must be > 0");
  check(std::isfinite(gate_start_ns), "gate_start_ns", "must be finite");
  check(spcm_jitter_ns >= 0, "spcm_jitter_ns", "must be >= 0");
  check(tdc_bin_ns > 0 && tdc_bin_ns <= gate_ns, "tdc_bin_ns", "must be in (0, gate_ns]");
  check(structured_background_rate >= 0, "structured_background_rate", "must be >= 0");
  for (double w : structured_background_profile) check(w >= 0, "structured_background_profile", "weights must be >= 0");
  if (structured_background_rate > 0) {
    double sum = 0;
    for (double w : structured_background_profile) sum += w;
    check(sum > 0, "structured_background_profile", "needs a positive weight when the rate is > 0");
  }
}

double ExperimentConfig::optical_transmission() const {
  return std::pow(10.0, -loss_db_per_loop * zeno.loops / 10.0);
}

ExperimentConfig make_experiment_config(int loops, double tau_g_ns, double dgd_per_loop_ns, double protection_sigma) {
  ExperimentConfig c;
  c.tau_g_ns = tau_g_ns;
  c.dgd_per_loop_ns = dgd_per_loop_ns;
  c.zeno.loops = loops;
  c.zeno.protection_sigma = protection_sigma;
  c.sync_tau_tilde();
  return c;
}

const char* to_string(RunKind kind) { return kind == RunKind::Signal ? "signal" : "background"; }

RunKind run_kind_from_string(const std::string& s) {
  if (s == "signal") return RunKind::Signal;
  if (s == "background") return RunKind::Background;
  throw Error(ErrorKind::Io, "unknown run kind '" + s + "'");
}

std::optional<double> quantize_to_tdc(double time, const ExperimentConfig& config) {
  // nearbyint honours the current rounding mode, which is round-half-even
  // unless someone changed it.
  const double ticks = std::nearbyint(time / config.tdc_bin_ns);
  const double q = ticks * config.tdc_bin_ns;
  const double eps = 1e-9 * config.tdc_bin_ns;
  if (q < config.gate_start_ns - eps || q > config.gate_end_ns() + eps) return std::nullopt;
  return q;
}

double expected_signal_events(const ExperimentConfig& config, const PolarizationState& psi0) {
  ZenoConfig ideal = config.zeno;
  ideal.protection_sigma = 0;
  const auto r = run_protective_measurement(psi0, ideal, 1.0);
  return static_cast<double>(config.n_pulses) * std::min(1.0, config.mean_photons_per_pulse) *
         config.optical_transmission() * r.survival;
}

TimeTagDataset simulate_signal_run(const ExperimentConfig& config, const PolarizationState& psi0, unsigned threads) {
  config.validate();
  const RandomStream root(config.seed);
  const double presence = std::min(1.0, config.mean_photons_per_pulse);
  const double transmission = config.optical_transmission();
  const bool noisy = config.zeno.protection_sigma > 0;

  std::optional<ZenoResult> ideal;
  std::optional<ArrivalSampler> ideal_sampler;
  if (!noisy) {
    ideal = run_protective_measurement(psi0, config.zeno, 1.0);
    if (ideal->survival > 0) ideal_sampler.emplace(ideal->pointer);
  }

  auto pulse = [&](std::int64_t i, std::vector<double>& out) {
    auto rng = root.substream({stream_tag::kSignalPulse, static_cast<std::uint64_t>(i)});
    if (rng.uniform() < presence && rng.uniform() < transmission) {
      if (noisy) {
        auto stages = rng.substream(stream_tag::kProtectionStage);
        const auto r = run_protective_measurement(psi0, config.zeno, 1.0, &stages);
        if (r.survival > 0 && rng.uniform() < r.survival) {
          const double t = config.gate_center_ns() + config.tau_g_ns * ArrivalSampler(r.pointer)(rng);
          if (auto e = apply_detector(t, config, rng)) out.push_back(*e);
        }
      } else if (ideal_sampler && rng.uniform() < ideal->survival) {
        const double t = config.gate_center_ns() + config.tau_g_ns * (*ideal_sampler)(rng);
        if (auto e = apply_detector(t, config, rng)) out.push_back(*e);
      }
    }
    auto bg = root.substream({stream_tag::kSignalBackground, static_cast<std::uint64_t>(i)});
    add_background(config, bg, out);
  };

  TimeTagDataset d;
  d.events = run_pulses(config.n_pulses, threads, pulse);
  d.gate_start = config.gate_start_ns;
  d.gate_ns = config.gate_ns;
  d.config = config;
  d.kind = RunKind::Signal;
  const auto b = psi0.bloch();
  d.theta = 0.5 * std::acos(std::clamp(b.z(), -1.0, 1.0));
  return d;
}

TimeTagDataset simulate_background_run(const ExperimentConfig& config, unsigned threads) {
  config.validate();
  const RandomStream root(config.seed);
  auto pulse = [&](std::int64_t i, std::vector<double>& out) {
    auto bg = root.substream({stream_tag::kBackgroundRun, static_cast<std::uint64_t>(i)});
    add_background(config, bg, out);
  };
  TimeTagDataset d;
  d.events = run_pulses(config.n_pulses, threads, pulse);
  d.gate_start = config.gate_start_ns;
  d.gate_ns = config.gate_ns;
  d.config = config;
  d.kind = RunKind::Background;
  return d;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["tau_g_ns"] = c.tau_g_ns;
  j["dgd_per_loop_ns"] = c.dgd_per_loop_ns;
  j["tau_tilde"] = c.zeno.tau_tilde;
  j["loops"] = c.zeno.loops;
  j["protection_sigma_rad"] = c.zeno.protection_sigma;
  j["rep_rate_khz"] = c.rep_rate_khz;
  j["n_pulses"] = c.n_pulses;
  j["loss_db_per_loop"] = c.loss_db_per_loop;
  j["mean_photons_per_pulse"] = c.mean_photons_per_pulse;
  j["background_rate_per_gate"] = c.background_rate_per_gate;
  j["gate_start_ns"] = c.gate_start_ns;
  j["gate_ns"] = c.gate_ns;
  j["spcm_jitter_ns"] = c.spcm_jitter_ns;
  j["tdc_bin_ns"] = c.tdc_bin_ns;
  j["seed"] = c.seed;
  j["structured_background_rate"] = c.structured_background_rate;
  j["structured_background_profile"] = c.structured_background_profile;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.tau_g_ns = j.at("tau_g_ns").get<double>();
  c.dgd_per_loop_ns = j.at("dgd_per_loop_ns").get<double>();
  c.zeno.loops = j.at("loops").get<int>();
  c.zeno.protection_sigma = j.at("protection_sigma_rad").get<double>();
  c.rep_rate_khz = j.at("rep_rate_khz").get<double>();
  c.n_pulses = j.at("n_pulses").get<std::int64_t>();
  c.loss_db_per_loop = j.at("loss_db_per_loop").get<double>();
  c.mean_photons_per_pulse = j.at("mean_photons_per_pulse").get<double>();
  c.background_rate_per_gate = j.at("background_rate_per_gate").get<double>();
  c.gate_start_ns = j.at("gate_start_ns").get<double>();
  c.gate_ns = j.at("gate_ns").get<double>();
  c.spcm_jitter_ns = j.at("spcm_jitter_ns").get<double>();
  c.tdc_bin_ns = j.at("tdc_bin_ns").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.structured_background_rate = j.value("structured_background_rate", 0.0);
  c.structured_background_profile = j.value("structured_background_profile", std::vector<double>{});
  c.sync_tau_tilde();
  return c;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

}  // namespace

std::string dataset_csv(const TimeTagDataset& data) {
  std::string s = "arrival_ns\n";
  s.reserve(s.size() + data.events.size() * 8);
  for (double t : data.events) {
    s += io::format_double(t);
    s += '\n';
  }
  return s;
}

void write_dataset(const std::filesystem::path& csv_path, const TimeTagDataset& data) {
  nlohmann::ordered_json meta;
  meta["kind"] = to_string(data.kind);
  meta["label"] = data.label;
  if (data.theta) meta["theta_rad"] = *data.theta;
  meta["gate_start_ns"] = data.gate_start;
  meta["gate_ns"] = data.gate_ns;
  meta["n_events"] = data.events.size();
  meta["config"] = config_to_json(data.config);
  io::write_text(csv_path, dataset_csv(data));
  io::write_text(sidecar_path(csv_path), meta.dump(2) + "\n");
}

TimeTagDataset read_dataset(const std::filesystem::path& csv_path) {
  TimeTagDataset d;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_text(sidecar_path(csv_path)));
    d.kind = run_kind_from_string(meta.at("kind").get<std::string>());
    d.label = meta.value("label", std::string{});
    if (meta.contains("theta_rad")) d.theta = meta["theta_rad"].get<double>();
    d.gate_start = meta.at("gate_start_ns").get<double>();
    d.gate_ns = meta.at("gate_ns").get<double>();
    d.config = config_from_json(meta.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Io, "bad metadata for " + csv_path.string() + ": " + e.what());
  }

  std::istringstream in(io::read_text(csv_path));
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line.rfind("arrival_ns", 0) == 0, ErrorKind::Io,
          csv_path.string() + ": missing arrival_ns header");
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    d.events.push_back(io::parse_double(line));
  }
  return d;
}

}  // namespace zpm
