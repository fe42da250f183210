#include "zpm/commands.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "zpm/io.hpp"
#include "zpm/zeno.hpp"

namespace zpm {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr double kQuarterPi = std::numbers::pi / 4;
constexpr double kFastAxis = 2.0;  // theta / (pi/4) of V
constexpr double kSlowAxis = 0.0;

std::string fmt(double v) { return io::format_double(v); }

fs::path data_dir(const AppConfig& config, const fs::path& out) {
  return config.data_dir ? *config.data_dir : out / "data";
}

ExperimentConfig run_config(const ExperimentConfig& base, double theta_q, int loops) {
  ExperimentConfig c = base;
  c.zeno.loops = loops;
  c.sync_tau_tilde();
  c.seed = run_seed(base.seed, theta_q, loops);
  return c;
}

std::string hist_csv(const Histogram& h) {
  const Eigen::VectorXd c = h.centers();
  return io::xy_csv("bin_center_ns,value", {c.data(), c.data() + c.size()},
                    {h.counts.data(), h.counts.data() + h.counts.size()});
}

std::string dist_csv(const ArrivalDistribution& d) {
  return io::xy_csv("bin_center_ns,value", {d.bin_centers.data(), d.bin_centers.data() + d.bin_centers.size()},
                    {d.probabilities.data(), d.probabilities.data() + d.probabilities.size()});
}

ordered_json report_json(const MeasurementReport& r) {
  ordered_json j;
  j["tau_ns"] = r.tau;
  j["tau_std_ns"] = r.tau_std;
  j["expectation"] = r.expectation;
  j["expectation_raw"] = r.expectation_raw;
  j["sigma_pm"] = r.sigma_pm;
  j["sigma_sm"] = r.sigma_sm;
  j["ratio"] = r.ratio;
  j["u_pm"] = r.u_pm;
  j["u_sm"] = r.u_sm;
  j["n_detected"] = r.n_detected;
  return j;
}

// Re-raise with the setting name attached.
template <typename F>
auto for_setting(const std::string& label, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw Error(e.kind(), label + ": " + e.detail());
  }
}

struct AnalyzedRun {
  double theta_q;
  int loops;
  std::string label;
  PipelineResult pipeline;
};

}  // namespace

std::string setting_label(double theta_over_quarter_pi, int loops) {
  return "theta" + fmt(theta_over_quarter_pi) + "_l" + std::to_string(loops);
}

std::uint64_t run_seed(std::uint64_t master, double theta_over_quarter_pi, int loops) {
  return RandomStream(master)
      .substream({std::bit_cast<std::uint64_t>(theta_over_quarter_pi), static_cast<std::uint64_t>(loops)})
      .key();
}

// ---------------------------------------------------------------------------

int cmd_table1(const AppConfig& config, const fs::path& out, std::ostream& log) {
  const auto rows = reproduce_table1(config.table1.tau_tilde_grid);
  std::vector<Table1Row> golden;
  if (config.table1.golden) {
    std::ifstream in(*config.table1.golden);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open golden file " + config.table1.golden->string());
    golden = read_table1_csv(in);
  } else {
    golden = table1_golden();
  }

  std::ostringstream csv;
  write_table1_csv(csv, rows);
  io::write_text(out / "table1.csv", csv.str());

  const auto bad = compare_table1(rows, golden);
  std::ostringstream diff;
  diff << "tolerance " << fmt(kTable1Tolerance) << "\n";
  diff << "theta_over_quarter_pi,tau_tilde,loops,survival,survival_ref,rescaled_shift,rescaled_shift_ref,status\n";
  for (const auto& g : golden) {
    const Table1Row* hit = nullptr;
    for (const auto& r : rows)
      if (std::abs(r.theta_over_quarter_pi - g.theta_over_quarter_pi) < 1e-9 &&
          std::abs(r.tau_tilde - g.tau_tilde) < 1e-9 && r.loops == g.loops)
        hit = &r;
    diff << fmt(g.theta_over_quarter_pi) << ',' << fmt(g.tau_tilde) << ',' << g.loops << ',';
    if (!hit) {
      diff << ",," << fmt(g.survival) << ",," << fmt(g.rescaled_shift) << ",missing\n";
      continue;
    }
    const bool ok = std::abs(hit->survival - g.survival) <= kTable1Tolerance &&
                    std::abs(hit->rescaled_shift - g.rescaled_shift) <= kTable1Tolerance;
    diff << fmt(hit->survival) << ',' << fmt(g.survival) << ',' << fmt(hit->rescaled_shift) << ','
         << fmt(g.rescaled_shift) << ',' << (ok ? "ok" : "MISMATCH") << '\n';
  }
  io::write_text(out / "table1_diff.txt", diff.str());

  log << "table1: " << rows.size() << " rows, " << bad.size() << " of " << golden.size()
      << " reference rows outside tolerance\n";
  return bad.empty() ? exit_code::kOk : exit_code::kGoldenMismatch;
}

int cmd_exact(const AppConfig& config, const fs::path& out, std::ostream& log) {
  const auto& e = config.experiment;
  std::ostringstream csv;
  csv << "theta_over_quarter_pi,tau_tilde,loops,survival,mean_shift_ns,rescaled_shift,expectation,"
         "approx_rescaled_shift,approx_survival\n";
  for (double tq : config.thetas_over_quarter_pi) {
    const auto psi = make_state(tq * kQuarterPi);
    const double expect = std::cos(2 * tq * kQuarterPi);
    for (int l : config.loops) {
      ZenoConfig z{e.zeno.tau_tilde, l, 0.0};
      const auto r = run_protective_measurement(psi, z, e.tau_g_ns);
      const auto a = approx_pointer_shift(psi, z);
      csv << fmt(tq) << ',' << fmt(z.tau_tilde) << ',' << l << ',' << fmt(r.survival) << ','
          << fmt(r.mean_shift * e.tau_g_ns) << ',' << fmt(r.rescaled_shift) << ',' << fmt(expect) << ','
          << fmt(2 * a.shift / (l * z.tau_tilde)) << ',' << fmt(a.first_order_survival) << '\n';

      // Normalized arrival density in ns about the pulse origin.
      const auto grid = TimeGrid::covering(r.pointer, 0.01);
      const Eigen::VectorXd d = density_on_grid(r.pointer, grid) / (r.survival * e.tau_g_ns);
      std::vector<double> t(grid.count), y(d.data(), d.data() + d.size());
      for (std::size_t i = 0; i < grid.count; ++i) t[i] = grid.at(i) * e.tau_g_ns;
      io::write_text(out / ("density_" + setting_label(tq, l) + ".csv"), io::xy_csv("t_ns,density", t, y));
    }
  }
  io::write_text(out / "exact.csv", csv.str());
  log << "exact: " << config.thetas_over_quarter_pi.size() * config.loops.size() << " settings\n";
  return exit_code::kOk;
}

int cmd_simulate(const AppConfig& config, const fs::path& out, std::ostream& log) {
  const fs::path dir = data_dir(config, out);
  std::size_t n = 0;
  for (double tq : config.thetas_over_quarter_pi) {
    const auto psi = make_state(tq * kQuarterPi);
    for (int l : config.loops) {
      const auto label = setting_label(tq, l);
      const auto cfg = run_config(config.experiment, tq, l);
      auto sig = simulate_signal_run(cfg, psi, config.threads);
      auto bg = simulate_background_run(cfg, config.threads);
      sig.label = bg.label = label;
      write_dataset(dir / ("signal_" + label + ".csv"), sig);
      write_dataset(dir / ("background_" + label + ".csv"), bg);
      log << label << ": " << sig.size() << " signal, " << bg.size() << " background events\n";
      ++n;
    }
  }
  log << "simulate: " << n << " signal/background pairs in " << dir.string() << "\n";
  return exit_code::kOk;
}

int cmd_analyze(const AppConfig& config, const fs::path& out, std::ostream& log) {
  const fs::path dir = data_dir(config, out);
  std::vector<AnalyzedRun> runs;
  std::map<std::pair<double, int>, double> means;
  for (double tq : config.thetas_over_quarter_pi) {
    for (int l : config.loops) {
      const auto label = setting_label(tq, l);
      const auto sig_path = dir / ("signal_" + label + ".csv");
      const auto bg_path = dir / ("background_" + label + ".csv");
      require(fs::exists(sig_path), ErrorKind::Io, label + ": missing " + sig_path.string());
      require(fs::exists(bg_path), ErrorKind::Pairing, label + ": no background run paired with the signal run");
      auto pr = for_setting(label, [&] {
        const auto sig = read_dataset(sig_path);
        const auto bg = read_dataset(bg_path);
        return analyze_run(sig, bg, config.analysis);
      });
      means[{tq, l}] = pr.stats.mean;
      io::write_text(out / ("hist_" + label + ".csv"), hist_csv(pr.subtracted));
      io::write_text(out / ("dist_" + label + ".csv"), dist_csv(pr.distribution));
      runs.push_back({tq, l, label, std::move(pr)});
    }
  }

  // Slow minus fast delay at every loop count where both axes were measured.
  std::vector<CalibrationPoint> points;
  for (int l : config.loops) {
    const auto s = means.find({kSlowAxis, l}), f = means.find({kFastAxis, l});
    if (s != means.end() && f != means.end()) points.push_back({l, s->second - f->second});
  }

  std::optional<CalibrationFit> fit;
  if (points.size() >= 2) {
    fit = fit_calibration(points);
    ordered_json j;
    j["slope_ns_per_loop"] = fit->slope;
    j["slope_uncertainty_ns_per_loop"] = fit->slope_uncertainty;
    j["points"] = ordered_json::array();
    for (const auto& p : points) j["points"].push_back({{"loops", p.loops}, {"delay_ns", p.delay_ns}});
    io::write_text(out / "calibration.json", j.dump(2) + "\n");
    log << "calibration: slope " << fmt(fit->slope) << " +/- " << fmt(fit->slope_uncertainty) << " ns/loop\n";
  } else {
    require(config.tau_max_source == TauMaxSource::SlowAxis, ErrorKind::InsufficientData,
            "calibration needs slow and fast runs at two or more loop counts");
  }

  ordered_json reports = ordered_json::array();
  for (const auto& r : runs) {
    const auto f = means.find({kFastAxis, r.loops});
    require(f != means.end(), ErrorKind::InsufficientData, r.label + ": no fast-axis reference run");
    double tau_max;
    if (config.tau_max_source == TauMaxSource::Calibration) {
      tau_max = fit->tau_max(r.loops);
    } else {
      const auto s = means.find({kSlowAxis, r.loops});
      require(s != means.end(), ErrorKind::InsufficientData, r.label + ": no slow-axis reference run");
      tau_max = s->second - f->second;
    }
    const auto rep = for_setting(
        r.label, [&] { return compute_report(r.pipeline.distribution, f->second, tau_max, r.pipeline.n_detected); });
    ordered_json j;
    j["label"] = r.label;
    j["theta_over_quarter_pi"] = r.theta_q;
    j["loops"] = r.loops;
    j["tau_max_ns"] = tau_max;
    j["background_scale"] = r.pipeline.background_scale;
    j["background_window_ns"] = {r.pipeline.window.first, r.pipeline.window.second};
    j.update(report_json(rep));
    reports.push_back(std::move(j));
  }
  io::write_text(out / "reports.json", reports.dump(2) + "\n");
  log << "analyze: " << runs.size() << " settings\n";
  return exit_code::kOk;
}

int cmd_sweep(const AppConfig& config, const fs::path& out, std::ostream& log) {
  const auto& sw = config.sweep;
  const double tau_g = config.experiment.tau_g_ns;
  std::ostringstream csv;
  csv << "theta_over_quarter_pi,tau_tilde,loops,survival,mean_shift,rescaled_shift\n";
  std::size_t n = 0;
  for (double tq : sw.thetas_over_quarter_pi) {
    const auto psi = make_state(tq * kQuarterPi);
    for (int l : sw.loops) {
      std::vector<double> taus = sw.tau_tildes;
      if (taus.empty()) taus.push_back(sw.loop_tau_product / l);
      for (double tt : taus) {
        const auto r = run_protective_measurement(psi, ZenoConfig{tt, l, 0.0}, tau_g);
        csv << fmt(tq) << ',' << fmt(tt) << ',' << l << ',' << fmt(r.survival) << ',' << fmt(r.mean_shift) << ','
            << fmt(r.rescaled_shift) << '\n';
        ++n;
      }
    }
  }
  io::write_text(out / "sweep.csv", csv.str());
  log << "sweep: " << n << " points\n";
  return exit_code::kOk;
}

Table2Outcome run_table2_scenario(const Table2Options& options, const ExperimentConfig& detector, unsigned threads) {
  ExperimentConfig base = detector;
  base.tau_g_ns = options.tau_g_ns;
  base.n_pulses = options.n_pulses;
  base.loss_db_per_loop = options.loss_db_per_loop;
  base.mean_photons_per_pulse = options.mean_photons_per_pulse;
  base.background_rate_per_gate = options.background_rate_per_gate;
  base.zeno.protection_sigma = 0.0;
  base.sync_tau_tilde();
  base.validate();

  auto run = [&](double expectation) {
    const double theta = 0.5 * std::acos(std::clamp(expectation, -1.0, 1.0));
    const double tq = theta / kQuarterPi;
    const auto label = "O" + fmt(expectation) + "_l" + std::to_string(options.loops);
    const auto cfg = run_config(base, tq, options.loops);
    return for_setting(label, [&] {
      const auto sig = simulate_signal_run(cfg, make_state(theta), threads);
      const auto bg = simulate_background_run(cfg, threads);
      return Table2Row{label, expectation, theta, analyze_run(sig, bg), {}};
    });
  };

  Table2Outcome outcome{};
  for (double e : options.expectations) outcome.rows.push_back(run(e));

  auto reference = [&](double e) {
    for (const auto& r : outcome.rows)
      if (r.target_expectation == e) return r.pipeline.stats.mean;
    return run(e).pipeline.stats.mean;
  };
  outcome.fast_axis_mean = reference(-1.0);
  outcome.tau_max = reference(1.0) - outcome.fast_axis_mean;
  for (auto& r : outcome.rows)
    r.report = for_setting(r.label, [&] {
      return compute_report(r.pipeline.distribution, outcome.fast_axis_mean, outcome.tau_max, r.pipeline.n_detected);
    });
  return outcome;
}

int cmd_table2(const AppConfig& config, const fs::path& out, std::ostream& log) {
  const auto outcome = run_table2_scenario(config.table2, config.experiment, config.threads);
  std::ostringstream csv;
  csv << "label,target_expectation,tau_ns,tau_std_ns,expectation,expectation_raw,sigma_pm,sigma_sm,ratio,u_pm,u_sm,"
         "n_detected\n";
  log << "tau_max " << fmt(outcome.tau_max) << " ns\n";
  log << "  target    tau(ns)   std(ns)     <O>     s_PM    s_SM       R        N\n";
  for (const auto& r : outcome.rows) {
    const auto& m = r.report;
    csv << r.label << ',' << fmt(r.target_expectation) << ',' << fmt(m.tau) << ',' << fmt(m.tau_std) << ','
        << fmt(m.expectation) << ',' << fmt(m.expectation_raw) << ',' << fmt(m.sigma_pm) << ',' << fmt(m.sigma_sm)
        << ',' << fmt(m.ratio) << ',' << fmt(m.u_pm) << ',' << fmt(m.u_sm) << ',' << m.n_detected << '\n';
    char line[160];
    std::snprintf(line, sizeof line, "%8.2f %10.3f %9.3f %7.3f %8.3f %7.3f %7.2f %8lld\n", r.target_expectation,
                  m.tau, m.tau_std, m.expectation, m.sigma_pm, m.sigma_sm, m.ratio, m.n_detected);
    log << line;
    io::write_text(out / ("dist_" + r.label + ".csv"), dist_csv(r.pipeline.distribution));
  }
  io::write_text(out / "table2.csv", csv.str());
  return exit_code::kOk;
}

// ---------------------------------------------------------------------------

int run_command(const RunManifest& manifest, std::ostream& log) {
  AppConfig config;
  try {
    if (manifest.config_path) {
      config = load_config(*manifest.config_path);
    } else {
      require(manifest.command == Command::Table1 || manifest.command == Command::Table2 ||
                  manifest.command == Command::Sweep,
              ErrorKind::Validation, std::string("--config is required for ") + to_string(manifest.command));
    }
    if (manifest.seed_override) config.experiment.seed = *manifest.seed_override;
    for (double t : manifest.extra_tau_tilde) {
      require(t > 0, ErrorKind::Validation, "tau_tilde_grid: must be > 0");
      config.table1.tau_tilde_grid.push_back(t);
    }
    std::error_code ec;
    fs::create_directories(manifest.output_dir, ec);
    require(!ec && fs::is_directory(manifest.output_dir), ErrorKind::Validation,
            "output directory not writable: " + manifest.output_dir.string());
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code::kValidation;
  }

  try {
    switch (manifest.command) {
      case Command::Table1: return cmd_table1(config, manifest.output_dir, log);
      case Command::Exact: return cmd_exact(config, manifest.output_dir, log);
      case Command::Simulate: return cmd_simulate(config, manifest.output_dir, log);
      case Command::Analyze: return cmd_analyze(config, manifest.output_dir, log);
      case Command::Sweep: return cmd_sweep(config, manifest.output_dir, log);
      case Command::Table2: return cmd_table2(config, manifest.output_dir, log);
    }
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::Validation ? exit_code::kValidation : exit_code::kPipeline;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_code::kPipeline;
  }
  return exit_code::kPipeline;
}

}  // namespace zpm
