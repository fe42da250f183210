#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "zpm/error.hpp"

namespace zpm {

/// Polarization qubit on the H/V basis.  Amplitudes are stored directly (not as
/// angles) so that perturbed states and arbitrary observables compose without
/// re-parameterization.  The global phase is free.
template <typename Real>
class BasicPolarizationState {
 public:
  using Complex = std::complex<Real>;
  using Amplitudes = Eigen::Matrix<Complex, 2, 1>;

  static constexpr Real kNormTolerance = std::max(Real(1e-12), Real(16) * std::numeric_limits<Real>::epsilon());

  BasicPolarizationState() : amps_(Complex(1), Complex(0)) {}

  /// Throws if |h|^2 + |v|^2 is off by more than kNormTolerance (1e-12 in double).
  BasicPolarizationState(Complex h, Complex v) : amps_(h, v) {
    require(std::abs(amps_.squaredNorm() - Real(1)) <= kNormTolerance, ErrorKind::InvalidParameter,
            "polarization state is not normalized");
  }

  static BasicPolarizationState normalized(const Amplitudes& a) {
    const Real n = a.norm();
    require(n > Real(0), ErrorKind::InvalidParameter, "zero polarization vector");
    return BasicPolarizationState(a(0) / n, a(1) / n);
  }

  Complex amp_h() const { return amps_(0); }
  Complex amp_v() const { return amps_(1); }
  const Amplitudes& amplitudes() const { return amps_; }

  /// Stokes/Bloch vector with +z = H, +x = diagonal, +y = right circular.
  Eigen::Matrix<Real, 3, 1> bloch() const {
    const Complex hv = std::conj(amps_(0)) * amps_(1);
    return {Real(2) * hv.real(), Real(2) * hv.imag(), std::norm(amps_(0)) - std::norm(amps_(1))};
  }

 private:
  Amplitudes amps_;
};

/// Hermitian 2x2 observable on the H/V basis.  Hermiticity is not enforced at
/// construction; operations that need it check and throw.
template <typename Real>
class BasicPolarizationObservable {
 public:
  using Complex = std::complex<Real>;
  using Matrix = Eigen::Matrix<Complex, 2, 2>;

  explicit BasicPolarizationObservable(const Matrix& m) : m_(m) {}

  /// |H><H| - |V><V|
  static BasicPolarizationObservable linear_polarization() {
    Matrix m = Matrix::Zero();
    m(0, 0) = Complex(1);
    m(1, 1) = Complex(-1);
    return BasicPolarizationObservable(m);
  }

  const Matrix& matrix() const { return m_; }

  bool is_hermitian(Real tol = Real(1e-12)) const {
    return (m_ - m_.adjoint()).cwiseAbs().maxCoeff() <= tol;
  }

 private:
  Matrix m_;
};

using PolarizationState = BasicPolarizationState<double>;
using PolarizationObservable = BasicPolarizationObservable<double>;

template <typename Real>
struct Moments2 {
  Real mean;
  Real uncertainty;
};

/// cos(theta)|H> + sin(theta) e^{i phi}|V>
template <typename Real = double>
BasicPolarizationState<Real> make_state(Real theta, Real phi = Real(0)) {
  using C = std::complex<Real>;
  return BasicPolarizationState<Real>(C(std::cos(theta)), std::sin(theta) * std::polar(Real(1), phi));
}

template <typename Real>
Moments2<Real> expectation_and_uncertainty(const BasicPolarizationState<Real>& state,
                                           const BasicPolarizationObservable<Real>& obs) {
  require(obs.is_hermitian(), ErrorKind::InvalidObservable, "observable is not Hermitian");
  const auto& a = state.amplitudes();
  const auto oa = (obs.matrix() * a).eval();
  const Real mean = a.dot(oa).real();  // dot() conjugates the left operand
  const Real second = oa.squaredNorm();
  return {mean, std::sqrt(std::max(Real(0), second - mean * mean))};
}

/// <post|O|pre> / <post|pre>
template <typename Real>
std::complex<Real> weak_value(const BasicPolarizationState<Real>& pre, const BasicPolarizationState<Real>& post,
                              const BasicPolarizationObservable<Real>& obs) {
  const std::complex<Real> overlap = post.amplitudes().dot(pre.amplitudes());
  require(std::abs(overlap) > Real(1e-12), ErrorKind::DegeneratePostselection,
          "pre- and postselected states are orthogonal");
  return post.amplitudes().dot(obs.matrix() * pre.amplitudes()) / overlap;
}

/// |<a|b>|^2, equal to cos^2(delta/2) for Bloch-vector separation delta.
template <typename Real>
Real fidelity(const BasicPolarizationState<Real>& a, const BasicPolarizationState<Real>& b) {
  return std::min(Real(1), std::norm(a.amplitudes().dot(b.amplitudes())));
}

/// Rotates the Bloch vector of `state` away from itself by a polar angle
/// |N(0, sigma_angle)| in a uniformly random azimuthal direction.
template <typename Real, typename Rng>
BasicPolarizationState<Real> perturb_state(const BasicPolarizationState<Real>& state, Real sigma_angle, Rng& rng) {
  require(sigma_angle >= Real(0), ErrorKind::InvalidParameter, "negative protection noise");
  if (sigma_angle == Real(0)) return state;

  using C = std::complex<Real>;
  using Vec3 = Eigen::Matrix<Real, 3, 1>;
  std::normal_distribution<Real> gauss(Real(0), sigma_angle);
  std::uniform_real_distribution<Real> uni(Real(0), Real(2) * std::numbers::pi_v<Real>);
  const Real delta = std::abs(gauss(rng));
  const Real azimuth = uni(rng);

  const Vec3 n = state.bloch().normalized();
  const Vec3 trial = std::abs(n.z()) < Real(0.9) ? Vec3::UnitZ() : Vec3::UnitX();
  const Vec3 e1 = n.cross(trial).normalized();
  const Vec3 e2 = n.cross(e1);
  const Vec3 axis = std::cos(azimuth) * e1 + std::sin(azimuth) * e2;

  // exp(-i delta/2 axis.sigma)
  const Real c = std::cos(delta / 2), s = std::sin(delta / 2);
  Eigen::Matrix<C, 2, 2> u;
  u(0, 0) = C(c, -s * axis.z());
  u(1, 1) = C(c, s * axis.z());
  u(0, 1) = C(-s * axis.y(), -s * axis.x());
  u(1, 0) = C(s * axis.y(), -s * axis.x());
  return BasicPolarizationState<Real>::normalized(u * state.amplitudes());
}

}  // namespace zpm
