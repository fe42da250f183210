#pragma once

#include <cmath>
#include <complex>
#include <iosfwd>
#include <optional>
#include <vector>

#include "zpm/error.hpp"
#include "zpm/pointer.hpp"
#include "zpm/polarization.hpp"
#include "zpm/random.hpp"

namespace zpm {

/// Protocol parameters: per-stage strength tau~ = tau/tau_G, number of stages,
/// and the per-stage angular noise of the protecting projection (0 = ideal).
template <typename Real>
struct BasicZenoConfig {
  Real tau_tilde = Real(0.1);
  int loops = 1;
  Real protection_sigma = Real(0);

  void validate() const {
    require(tau_tilde > Real(0) && std::isfinite(tau_tilde), ErrorKind::InvalidParameter, "tau_tilde must be > 0");
    require(loops >= 1, ErrorKind::InvalidParameter, "loops must be >= 1");
    require(protection_sigma >= Real(0), ErrorKind::InvalidParameter, "protection_sigma must be >= 0");
  }
};

template <typename Real>
struct BasicZenoResult {
  Real survival;
  Real mean_shift;      // t/tau_G
  Real rescaled_shift;  // 2 mean_shift / (loops tau~); +1 for pure H
  BasicPointerMixture<Real> pointer;
};

using ZenoConfig = BasicZenoConfig<double>;
using ZenoResult = BasicZenoResult<double>;

/// One weak DGD interaction followed by projection onto `projection`.  The
/// slow (H) amplitude is delayed by +tau~/2 and the fast (V) one advanced by
/// -tau~/2; the projected pointer is the coherent sum weighted by the cross
/// amplitudes <proj|H><H|psi0> and <proj|V><V|psi0>.
template <typename Real>
BasicPointerMixture<Real> zeno_stage(const BasicPolarizationState<Real>& psi0, const BasicPointerMixture<Real>& pointer,
                                     Real tau_tilde, const BasicPolarizationState<Real>& projection) {
  require(tau_tilde > Real(0), ErrorKind::InvalidParameter, "tau_tilde must be > 0");
  const std::complex<Real> a_h = std::conj(projection.amp_h()) * psi0.amp_h();
  const std::complex<Real> a_v = std::conj(projection.amp_v()) * psi0.amp_v();

  std::vector<PointerComponent<Real>> out;
  out.reserve(2 * pointer.size());
  for (const auto& c : pointer.components()) {
    if (a_h != Real(0)) out.push_back({c.weight * a_h, c.center + tau_tilde / 2});
    if (a_v != Real(0)) out.push_back({c.weight * a_v, c.center - tau_tilde / 2});
  }
  if (out.empty()) out.push_back({std::complex<Real>(0), pointer.min_center()});
  return BasicPointerMixture<Real>(std::move(out), pointer.sigma_amp(), pointer.tau_g());
}

/// Closed form of `loops` ideal stages applied to the initial pulse:
///   sum_k C(l,k) p^k q^(l-k) g(t - (2k - l) tau~/2),  p = |c_H|^2, q = |c_V|^2.
/// Binomial weights are evaluated in log space so that l in the thousands is
/// safe.  Components lighter than `drop_below` are dropped (0 keeps all).
template <typename Real>
BasicPointerMixture<Real> ideal_pointer(const BasicPolarizationState<Real>& psi0, Real tau_tilde, int loops,
                                        Real tau_g, Real drop_below = Real(0)) {
  const Real p = std::norm(psi0.amp_h());
  const Real q = std::norm(psi0.amp_v());
  const auto start = initial_pointer<Real>(tau_g);
  std::vector<PointerComponent<Real>> comps;
  comps.reserve(static_cast<std::size_t>(loops) + 1);
  const Real lgl = std::lgamma(Real(loops) + 1);
  for (int k = 0; k <= loops; ++k) {
    Real w;
    if (p == Real(0))
      w = (k == 0) ? Real(1) : Real(0);
    else if (q == Real(0))
      w = (k == loops) ? Real(1) : Real(0);
    else
      w = std::exp(lgl - std::lgamma(Real(k) + 1) - std::lgamma(Real(loops - k) + 1) + Real(k) * std::log(p) +
                   Real(loops - k) * std::log(q));
    if (w == Real(0) || w < drop_below) continue;
    comps.push_back({std::complex<Real>(w), Real(2 * k - loops) * tau_tilde / 2});
  }
  return BasicPointerMixture<Real>(std::move(comps), start.sigma_amp(), tau_g);
}

/// Runs `config.loops` stages starting from the initial pulse.  Ideal
/// protection uses the binomial closed form; noisy protection projects each
/// stage onto an independently perturbed copy of psi0 drawn from `rng`.
template <typename Real, typename Rng = RandomStream>
BasicZenoResult<Real> run_protective_measurement(const BasicPolarizationState<Real>& psi0,
                                                 const BasicZenoConfig<Real>& config, Real tau_g,
                                                 Rng* rng = nullptr) {
  config.validate();
  require(tau_g > Real(0), ErrorKind::InvalidParameter, "tau_g must be positive");

  std::optional<BasicPointerMixture<Real>> pointer;
  if (config.protection_sigma == Real(0)) {
    pointer = ideal_pointer(psi0, config.tau_tilde, config.loops, tau_g);
  } else {
    require(rng != nullptr, ErrorKind::MissingRandomness, "noisy protection needs a random stream");
    pointer = initial_pointer<Real>(tau_g);
    for (int stage = 0; stage < config.loops; ++stage) {
      const auto projection = perturb_state(psi0, config.protection_sigma, *rng);
      pointer = zeno_stage(psi0, *pointer, config.tau_tilde, projection);
    }
  }
  const auto mom = mixture_moments(*pointer);
  const Real rescaled = Real(2) * mom.mean / (Real(config.loops) * config.tau_tilde);
  return {mom.norm_sq, mom.mean, rescaled, std::move(*pointer)};
}

template <typename Real>
struct ApproxShift {
  Real shift;                 // t/tau_G
  Real first_order_survival;  // upper-bound style estimate
};

/// Weak-coupling expansion: the pointer moves by loops tau~ <O>/2 and each
/// stage damps the amplitude by [1 - (1/2)(tau~/2)^2 dO^2 <A^2>].  For the
/// Gaussian pulse <A^2> = 1/(4 sigma_amp^2) = 1, and squaring the amplitude
/// factor over `loops` stages gives the exponent 2 loops.
template <typename Real>
ApproxShift<Real> approx_pointer_shift(const BasicPolarizationState<Real>& psi0, const BasicZenoConfig<Real>& config) {
  config.validate();
  const auto obs = BasicPolarizationObservable<Real>::linear_polarization();
  const auto m = expectation_and_uncertainty(psi0, obs);
  const Real sigma_amp = Real(0.5);
  const Real a2 = Real(1) / (Real(4) * sigma_amp * sigma_amp);
  const Real half = config.tau_tilde / 2;
  const Real factor = Real(1) - Real(0.5) * half * half * m.uncertainty * m.uncertainty * a2;
  return {Real(config.loops) * config.tau_tilde * m.mean / 2, std::pow(factor, Real(2 * config.loops))};
}

// ---------------------------------------------------------------------------
// Reference table of ideal survival / rescaled shift.

struct Table1Row {
  double theta_over_quarter_pi;
  double tau_tilde;
  int loops;
  double survival;
  double rescaled_shift;
  double expectation;
};

struct Table1Mismatch {
  Table1Row expected;
  Table1Row actual;
  double survival_error;
  double shift_error;
};

inline constexpr double kTable1Tolerance = 0.0015;

/// Published values for the nine canonical rows.
const std::vector<Table1Row>& table1_golden();

/// Runs the nine canonical (theta, tau~, loops) rows ideally, followed by
/// one row per extra tau~ (loops = round(1/tau~)) for every theta.
std::vector<Table1Row> reproduce_table1(const std::vector<double>& extra_tau_tilde = {});

/// Header: theta_over_quarter_pi,tau_tilde,loops,survival,rescaled_shift,expectation
void write_table1_csv(std::ostream& os, const std::vector<Table1Row>& rows);
std::vector<Table1Row> read_table1_csv(std::istream& is);

/// Compares the canonical rows of `rows` against `golden`; returns the rows
/// whose survival or shift is off by more than `tol`.
std::vector<Table1Mismatch> compare_table1(const std::vector<Table1Row>& rows, const std::vector<Table1Row>& golden,
                                           double tol = kTable1Tolerance);

}  // namespace zpm
