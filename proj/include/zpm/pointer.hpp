#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "zpm/error.hpp"

namespace zpm {

/// One shifted copy of the pointer amplitude.  Amplitudes are complex because
/// imperfect protection produces complex, stage-dependent projection factors;
/// ideal protection keeps them real and non-negative.
template <typename Real>
struct PointerComponent {
  std::complex<Real> weight;
  Real center;  // dimensionless time t/tau_G
};

/// Temporal pointer amplitude  phi(t) = sum_k w_k g(t - c_k), where g is a
/// unit-norm Gaussian amplitude of width sigma_amp.  The mixture is coherent
/// and deliberately unnormalized: its squared norm is the survival probability
/// of everything that happened to it.
template <typename Real>
class BasicPointerMixture {
 public:
  using Component = PointerComponent<Real>;

  BasicPointerMixture(std::vector<Component> components, Real sigma_amp, Real tau_g)
      : components_(std::move(components)), sigma_amp_(sigma_amp), tau_g_(tau_g) {
    require(sigma_amp_ > Real(0), ErrorKind::InvalidParameter, "pointer width must be positive");
    require(tau_g_ > Real(0), ErrorKind::InvalidParameter, "pulse duration must be positive");
    require(!components_.empty(), ErrorKind::InvalidParameter, "pointer mixture needs a component");
    norm_ = std::pow(Real(2) * std::numbers::pi_v<Real> * sigma_amp_ * sigma_amp_, Real(-0.25));
    canonicalize();
  }

  const std::vector<Component>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }
  Real sigma_amp() const { return sigma_amp_; }
  Real tau_g() const { return tau_g_; }
  Real min_center() const { return components_.front().center; }
  Real max_center() const { return components_.back().center; }

  bool has_real_nonnegative_weights() const {
    return std::all_of(components_.begin(), components_.end(),
                       [](const Component& c) { return c.weight.imag() == Real(0) && c.weight.real() >= Real(0); });
  }

  /// <g(. - a) | g(. - b)>
  Real overlap(Real a, Real b) const {
    const Real d = a - b;
    return std::exp(-d * d / (Real(8) * sigma_amp_ * sigma_amp_));
  }

  /// Unit-norm Gaussian amplitude centred at 0.
  Real gaussian(Real t) const {
    return norm_ * std::exp(-t * t / (Real(4) * sigma_amp_ * sigma_amp_));
  }

  std::complex<Real> amplitude(Real t) const {
    std::complex<Real> a(0);
    for (const auto& c : components_) a += c.weight * gaussian(t - c.center);
    return a;
  }

  friend bool operator==(const BasicPointerMixture& a, const BasicPointerMixture& b) {
    if (a.sigma_amp_ != b.sigma_amp_ || a.tau_g_ != b.tau_g_ || a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a.components_[i].weight != b.components_[i].weight || a.components_[i].center != b.components_[i].center)
        return false;
    return true;
  }

 private:
  // Sort by centre and merge components whose centres agree to rounding
  // (relative 1e-12); centres built from the same +/- shifts in different
  // orders can differ in the last bit.
  void canonicalize() {
    std::stable_sort(components_.begin(), components_.end(),
                     [](const Component& x, const Component& y) { return x.center < y.center; });
    std::vector<Component> merged;
    merged.reserve(components_.size());
    for (const auto& c : components_) {
      if (!merged.empty()) {
        const Real scale = std::max({Real(1), std::abs(c.center), std::abs(merged.back().center)});
        if (std::abs(c.center - merged.back().center) <= Real(1e-12) * scale) {
          merged.back().weight += c.weight;
          continue;
        }
      }
      merged.push_back(c);
    }
    components_ = std::move(merged);
  }

  std::vector<Component> components_;
  Real sigma_amp_;
  Real tau_g_;
  Real norm_;
};

using PointerMixture = BasicPointerMixture<double>;

/// Uniform sampling grid in dimensionless time.
template <typename Real>
struct BasicTimeGrid {
  Real start;
  Real step;
  std::size_t count;

  Real at(std::size_t i) const { return start + step * static_cast<Real>(i); }
  Real stop() const { return at(count - 1); }

  /// Grid spanning every centre +/- `halfwidths` amplitude widths.
  static BasicTimeGrid covering(const BasicPointerMixture<Real>& m, Real step, Real halfwidths = Real(6)) {
    require(step > Real(0), ErrorKind::InvalidParameter, "grid step must be positive");
    const Real lo = m.min_center() - halfwidths * m.sigma_amp();
    const Real hi = m.max_center() + halfwidths * m.sigma_amp();
    const auto n = static_cast<std::size_t>(std::ceil((hi - lo) / step)) + 1;
    return {lo, step, n};
  }
};

using TimeGrid = BasicTimeGrid<double>;

template <typename Real>
struct MixtureMoments {
  Real norm_sq;
  Real mean;
  Real std;
};

/// Gaussian pulse exp(-(t/tau_G)^2) in t/tau_G units, so sigma_amp = 1/2.
template <typename Real = double>
BasicPointerMixture<Real> initial_pointer(Real tau_g) {
  require(tau_g > Real(0), ErrorKind::InvalidParameter, "tau_g must be positive");
  return BasicPointerMixture<Real>({{std::complex<Real>(1), Real(0)}}, Real(0.5), tau_g);
}

template <typename Real>
BasicPointerMixture<Real> shift_mixture(const BasicPointerMixture<Real>& m, Real delta) {
  auto comps = m.components();
  for (auto& c : comps) c.center += delta;
  return BasicPointerMixture<Real>(std::move(comps), m.sigma_amp(), m.tau_g());
}

/// Closed-form moments of |phi|^2.  The product g_a g_b of two amplitude
/// Gaussians is <g_a|g_b> times a unit-mass Gaussian density centred at
/// (a+b)/2 with variance sigma_amp^2, which gives all three moments.
template <typename Real>
MixtureMoments<Real> mixture_moments(const BasicPointerMixture<Real>& m) {
  const auto& cs = m.components();
  const Real s2 = m.sigma_amp() * m.sigma_amp();
  Real m0 = 0, m1 = 0, m2 = 0;
  for (std::size_t k = 0; k < cs.size(); ++k) {
    for (std::size_t l = k; l < cs.size(); ++l) {
      const Real factor = (k == l ? Real(1) : Real(2));
      const Real w = factor * (std::conj(cs[k].weight) * cs[l].weight).real() * m.overlap(cs[k].center, cs[l].center);
      const Real mid = Real(0.5) * (cs[k].center + cs[l].center);
      m0 += w;
      m1 += w * mid;
      m2 += w * (mid * mid + s2);
    }
  }
  if (m0 <= Real(0)) return {Real(0), Real(0), Real(0)};
  const Real mean = m1 / m0;
  return {m0, mean, std::sqrt(std::max(Real(0), m2 / m0 - mean * mean))};
}

/// |phi(t)|^2 at every grid point.
template <typename Real>
Eigen::Matrix<Real, Eigen::Dynamic, 1> density_on_grid(const BasicPointerMixture<Real>& m,
                                                       const BasicTimeGrid<Real>& grid) {
  require(grid.count >= 2 && grid.step > Real(0), ErrorKind::InvalidParameter, "degenerate time grid");
  const Real need_lo = m.min_center() - Real(6) * m.sigma_amp();
  const Real need_hi = m.max_center() + Real(6) * m.sigma_amp();
  const Real slack = grid.step * Real(1e-9);
  require(grid.start <= need_lo + slack && grid.stop() >= need_hi - slack, ErrorKind::Coverage,
          "grid must cover every centre +/- 6 sigma_amp");

  Eigen::Matrix<Real, Eigen::Dynamic, 1> d(static_cast<Eigen::Index>(grid.count));
  for (std::size_t i = 0; i < grid.count; ++i) d(static_cast<Eigen::Index>(i)) = std::norm(m.amplitude(grid.at(i)));
  return d;
}

/// Inverse-CDF sampler for the normalized arrival density |phi|^2 / norm_sq.
/// The density is tabulated once; each draw is a binary search plus linear
/// interpolation within the bracketing grid cell.
template <typename Real>
class BasicArrivalSampler {
 public:
  static constexpr Real kDefaultStep = Real(0.001);

  explicit BasicArrivalSampler(const BasicPointerMixture<Real>& m, Real step = kDefaultStep)
      : grid_(BasicTimeGrid<Real>::covering(m, step)) {
    const auto d = density_on_grid(m, grid_);
    cdf_.resize(grid_.count);
    cdf_[0] = Real(0);
    for (std::size_t i = 1; i < grid_.count; ++i)
      cdf_[i] = cdf_[i - 1] + Real(0.5) * step * (d(static_cast<Eigen::Index>(i - 1)) + d(static_cast<Eigen::Index>(i)));
    const Real total = cdf_.back();
    require(total > Real(0) && std::isfinite(total), ErrorKind::DegenerateDistribution,
            "pointer mixture has zero norm");
    for (auto& c : cdf_) c /= total;
  }

  template <typename Rng>
  Real operator()(Rng& rng) const {
    std::uniform_real_distribution<Real> uni(Real(0), Real(1));
    const Real u = uni(rng);
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    if (it == cdf_.begin()) return grid_.start;
    if (it == cdf_.end()) return grid_.stop();
    const auto hi = static_cast<std::size_t>(it - cdf_.begin());
    const Real c0 = cdf_[hi - 1], c1 = cdf_[hi];
    const Real frac = c1 > c0 ? (u - c0) / (c1 - c0) : Real(0.5);
    return grid_.at(hi - 1) + frac * grid_.step;
  }

  const BasicTimeGrid<Real>& grid() const { return grid_; }

 private:
  BasicTimeGrid<Real> grid_;
  std::vector<Real> cdf_;
};

using ArrivalSampler = BasicArrivalSampler<double>;

/// One draw (in t/tau_G units).  Builds a sampler per call; reuse an
/// ArrivalSampler when drawing repeatedly from the same mixture.
template <typename Real, typename Rng>
Real sample_arrival(const BasicPointerMixture<Real>& m, Rng& rng) {
  return BasicArrivalSampler<Real>(m)(rng);
}

}  // namespace zpm
