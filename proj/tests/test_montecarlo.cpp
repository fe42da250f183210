#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>

#include "zpm/io.hpp"
#include "zpm/montecarlo.hpp"

using namespace zpm;
using std::numbers::pi;

namespace {

ExperimentConfig clean(int loops, std::int64_t pulses) {
  auto c = make_experiment_config(loops);
  c.n_pulses = pulses;
  c.loss_db_per_loop = 0;
  c.spcm_jitter_ns = 0;
  c.background_rate_per_gate = 0;
  return c;
}

struct Stats {
  double mean, std;
};

Stats stats(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("zpm_test_mc_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config defaults and validation") {
  const auto c = make_experiment_config(8);
  CHECK(c.zeno.tau_tilde == doctest::Approx(0.5 / 1.6));
  CHECK(c.rep_rate_khz == 50);
  CHECK(c.loss_db_per_loop == 10);
  CHECK(c.mean_photons_per_pulse == 0.1);
  CHECK(c.gate_ns == 15);
  CHECK(c.spcm_jitter_ns == 0.1);
  CHECK(c.tdc_bin_ns == 0.02);
  CHECK_NOTHROW(c.validate());

  auto bad = c;
  bad.n_pulses = 0;
  try {
    bad.validate();
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find("n_pulses") != std::string::npos);
  }
  bad = c;
  bad.dgd_per_loop_ns = 0.4;  // tau~ no longer consistent
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.sync_tau_tilde();
  CHECK_NOTHROW(bad.validate());
}

TEST_CASE("apply_detector") {
  auto c = clean(1, 1);
  c.tdc_bin_ns = 0.5;
  RandomStream rng(1);
  // Ties go to the even tick.
  CHECK(*apply_detector(1.25, c, rng) == 1.0);
  CHECK(*apply_detector(1.75, c, rng) == 2.0);
  CHECK(*apply_detector(2.25, c, rng) == 2.0);
  CHECK(*apply_detector(1.2, c, rng) == 1.0);
  CHECK_FALSE(apply_detector(-1.0, c, rng).has_value());
  CHECK_FALSE(apply_detector(15.5, c, rng).has_value());
  CHECK(apply_detector(15.0, c, rng).has_value());
}

TEST_CASE("jitter and quantization noise") {
  auto c = clean(1, 1);
  c.spcm_jitter_ns = 0.1;
  const int n = 1000000;

  auto fine = c;
  fine.tdc_bin_ns = 1e-9;
  RandomStream r1(2);
  std::vector<double> raw(n);
  for (auto& t : raw) t = *apply_detector(7.3, fine, r1);
  CHECK(std::abs(stats(raw).std - 0.1) < 0.001);

  RandomStream r2(3);
  std::vector<double> q(n);
  for (auto& t : q) {
    t = *apply_detector(7.3, c, r2);
    const double ticks = t / c.tdc_bin_ns;
    REQUIRE(std::abs(ticks - std::round(ticks)) < 1e-9);
  }
  CHECK(std::abs(stats(q).std - std::sqrt(0.01 + 0.02 * 0.02 / 12)) < 0.001);
}

TEST_CASE("signal run: opaque optics give nothing") {
  auto c = clean(3, 20000);
  c.loss_db_per_loop = 300;
  CHECK(simulate_signal_run(c, make_state(0.3)).events.empty());
}

TEST_CASE("signal run: eigenstate delays") {
  auto c = clean(8, 200000);
  const auto slow = simulate_signal_run(c, make_state(0.0));
  const auto fast = simulate_signal_run(c, PolarizationState({0}, {1}));
  const auto s = stats(slow.events), f = stats(fast.events);
  const double se_s = s.std / std::sqrt(slow.size()), se_f = f.std / std::sqrt(fast.size());
  CHECK(std::abs(s.mean - c.gate_center_ns() - 2.0) < 4 * se_s);
  CHECK(std::abs(f.mean - c.gate_center_ns() + 2.0) < 4 * se_f);
  CHECK(std::abs(s.mean - f.mean - 4.0) < 4 * std::hypot(se_s, se_f));
  CHECK(s.std == doctest::Approx(0.8).epsilon(0.01));
}

TEST_CASE("signal run: one loop is weak") {
  auto c = clean(1, 100000);
  c.spcm_jitter_ns = 0.1;
  const auto d = simulate_signal_run(c, make_state(pi / 4));
  const auto s = stats(d.events);
  CHECK(std::abs(s.mean - c.gate_center_ns()) < 0.05 * s.std);
  CHECK(d.theta.has_value());
  CHECK(*d.theta == doctest::Approx(pi / 4));
}

TEST_CASE("signal run: events are gated and on the TDC grid") {
  auto c = make_experiment_config(9);
  c.n_pulses = 50000;
  c.loss_db_per_loop = 0;
  c.background_rate_per_gate = 0.2;
  c.gate_ns = 6;  // clips the tails
  c.gate_start_ns = 1.0;
  const auto d = simulate_signal_run(c, make_state(0.5));
  REQUIRE(!d.events.empty());
  for (double t : d.events) {
    CHECK(t >= c.gate_start_ns - 1e-12);
    CHECK(t <= c.gate_end_ns() + 1e-12);
    const double k = t / c.tdc_bin_ns;
    CHECK(std::abs(k - std::round(k)) * c.tdc_bin_ns < 1e-12);
  }
}

TEST_CASE("background run") {
  auto c = make_experiment_config(4);
  c.n_pulses = 100000;
  CHECK(simulate_background_run(c).events.empty());

  c.background_rate_per_gate = 1.3;
  const auto d = simulate_background_run(c);
  CHECK(d.kind == RunKind::Background);
  const double mu = 1.3 * 100000;
  CHECK(std::abs(static_cast<double>(d.size()) - mu) < 4 * std::sqrt(mu));

  // Kolmogorov-Smirnov against uniform over the gate, 1% critical value.
  auto ev = d.events;
  std::sort(ev.begin(), ev.end());
  const double n = static_cast<double>(ev.size());
  double ks = 0;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    const double f = (ev[i] - c.gate_start_ns) / c.gate_ns;
    ks = std::max({ks, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  CHECK(ks < 1.628 / std::sqrt(n));
}

TEST_CASE("structured background follows its profile") {
  auto c = make_experiment_config(4);
  c.n_pulses = 20000;
  c.structured_background_rate = 0.5;
  c.structured_background_profile = {0.0, 1.0, 0.0};
  const auto d = simulate_background_run(c);
  REQUIRE(d.size() > 9000);
  for (double t : d.events) {
    CHECK(t >= 5.0 - 0.01);
    CHECK(t <= 10.0 + 0.01);
  }
}

TEST_CASE("determinism is independent of thread count") {
  auto c = make_experiment_config(5);
  c.n_pulses = 60000;
  c.loss_db_per_loop = 1;
  c.background_rate_per_gate = 0.05;
  const auto psi = make_state(0.6);
  const auto a = simulate_signal_run(c, psi, 1);
  const auto b = simulate_signal_run(c, psi, 3);
  const auto d = simulate_signal_run(c, psi, 8);
  CHECK(a.events == b.events);
  CHECK(a.events == d.events);
  CHECK(simulate_background_run(c, 1).events == simulate_background_run(c, 4).events);

  auto other = c;
  other.seed = 2;
  CHECK(simulate_signal_run(other, psi).events != a.events);
}

TEST_CASE("noisy protection") {
  auto c = clean(4, 20000);
  c.zeno.protection_sigma = 0.08;
  const auto psi = make_state(0.9);
  const auto a = simulate_signal_run(c, psi, 1);
  const auto b = simulate_signal_run(c, psi, 2);
  CHECK(a.events == b.events);
  CHECK(a.size() > 0);
  CHECK(static_cast<double>(a.size()) <= expected_signal_events(c, psi) + 4 * std::sqrt(expected_signal_events(c, psi)));
}

TEST_CASE("property: event-count scaling") {
  const auto psi = make_state(0.8 * pi / 4);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto c = make_experiment_config(3);
    c.n_pulses = 40000;
    c.loss_db_per_loop = 1.5;
    c.mean_photons_per_pulse = 0.3;
    c.seed = seed;
    c.spcm_jitter_ns = 0;
    const double expect = expected_signal_events(c, psi);
    const double p = expect / static_cast<double>(c.n_pulses);
    const double sd = std::sqrt(expect * (1 - p));
    const auto d = simulate_signal_run(c, psi);
    CHECK(std::abs(static_cast<double>(d.size()) - expect) < 4 * sd);
  }
}

TEST_CASE("property: arrival density converges to the exact pointer") {
  auto c = clean(6, 1500000);
  c.mean_photons_per_pulse = 1.0;
  c.tau_g_ns = 1.6;
  c.sync_tau_tilde();
  const auto psi = make_state(0.7);
  const auto d = simulate_signal_run(c, psi);
  REQUIRE(d.size() > 1000000);

  const auto r = run_protective_measurement(psi, c.zeno, c.tau_g_ns);
  const double center = c.gate_center_ns();
  const double tdc = c.tdc_bin_ns;
  // Expected mass of TDC tick k: integral of the normalized density over
  // [(k - 1/2) tdc, (k + 1/2) tdc), Simpson with 8 panels.
  auto mass = [&](long long k) {
    const double a = ((k - 0.5) * tdc - center) / c.tau_g_ns, b = ((k + 0.5) * tdc - center) / c.tau_g_ns;
    const int m = 8;
    const double h = (b - a) / m;
    double s = 0;
    for (int i = 0; i <= m; ++i) {
      const double w = (i == 0 || i == m) ? 1 : (i % 2 ? 4 : 2);
      s += w * std::norm(r.pointer.amplitude(a + i * h));
    }
    return s * h / 3 / r.survival;
  };

  const long long k0 = std::llround(c.gate_start_ns / tdc), k1 = std::llround(c.gate_end_ns() / tdc);
  std::vector<double> obs(static_cast<std::size_t>(k1 - k0 + 1), 0.0);
  for (double t : d.events) obs[static_cast<std::size_t>(std::llround(t / tdc) - k0)] += 1;
  const double n = static_cast<double>(d.size());
  double chi2 = 0;
  int dof = -1;
  for (long long k = k0; k <= k1; ++k) {
    const double e = n * mass(k);
    if (e < 5) continue;
    const double o = obs[static_cast<std::size_t>(k - k0)];
    chi2 += (o - e) * (o - e) / e;
    ++dof;
  }
  INFO("chi2 = " << chi2 << ", dof = " << dof);
  CHECK(chi2 < dof + 5 * std::sqrt(2.0 * dof));
}

TEST_CASE("serialization round trip and byte-identical reruns") {
  const auto dir = scratch("io");
  auto c = make_experiment_config(2);
  c.n_pulses = 30000;
  c.background_rate_per_gate = 0.1;
  auto d = simulate_signal_run(c, make_state(0.4));
  d.label = "x";
  write_dataset(dir / "a.csv", d);
  write_dataset(dir / "b.csv", simulate_signal_run(c, make_state(0.4)));
  CHECK(io::read_text(dir / "a.csv") == io::read_text(dir / "b.csv"));
  CHECK(io::read_text(dir / "a.csv").rfind("arrival_ns\n", 0) == 0);

  const auto back = read_dataset(dir / "a.csv");
  CHECK(back.events == d.events);
  CHECK(back.kind == RunKind::Signal);
  CHECK(back.label == "x");
  CHECK(back.config.seed == c.seed);
  CHECK(back.config.zeno.tau_tilde == c.zeno.tau_tilde);
  CHECK(back.config.background_rate_per_gate == 0.1);
  CHECK(*back.theta == doctest::Approx(0.4).epsilon(1e-12));
  std::filesystem::remove_all(dir);
}
