#pragma once

// Independent oracles and fixtures shared by the unit tests. Nothing here
// calls into the library's geometry or steering code.

#include <cmath>
#include <complex>
#include <functional>
#include <random>

#include "coopsense/core.hpp"
#include "coopsense/geometry.hpp"
#include "coopsense/scenario.hpp"

namespace testsupport {

using coopsense::Complex;
using coopsense::Real;
using coopsense::Vec2;
using coopsense::kPi;

inline constexpr Real kC = 299792458.0;

inline Real rel_err(Real a, Real b) {
  const Real scale = std::max(std::abs(a), std::abs(b));
  return scale == 0 ? 0 : std::abs(a - b) / scale;
}

// Local coordinates by spelling out the 2x2 inverse of [c s; -s c].
inline Vec2 local_oracle(const Vec2& p, const Vec2& ap, Real kappa) {
  const Real a = std::cos(kappa), b = std::sin(kappa), c = -std::sin(kappa), d = std::cos(kappa);
  const Real det = a * d - b * c;
  const Real rx = p.x() - ap.x(), ry = p.y() - ap.y();
  return Vec2((d * rx - b * ry) / det, (-c * rx + a * ry) / det);
}

inline Real psi_oracle(const Vec2& p, const Vec2& ap, Real kappa) {
  const Vec2 l = local_oracle(p, ap, kappa);
  return l.x() / std::hypot(l.x(), l.y());
}

inline Real tau_oracle(const Vec2& p, const Vec2& ap) { return 2.0 * std::hypot(p.x() - ap.x(), p.y() - ap.y()) / kC; }

// Central difference of a scalar field.
inline Vec2 fd_gradient(const std::function<Real(const Vec2&)>& f, const Vec2& p, Real h) {
  return Vec2((f(p + Vec2(h, 0)) - f(p - Vec2(h, 0))) / (2 * h), (f(p + Vec2(0, h)) - f(p - Vec2(0, h))) / (2 * h));
}

// Entry (m, n, k) of one target's noiseless echo straight from the model,
// m = 0..M-1, n = 1..N, k = 1..K.
inline Complex echo_entry_oracle(Complex beta, Real psi, Real fd, Real tau, int m, int n, int k, Real d_over_lambda,
                                 Real ts, Real df) {
  const Complex j(0, 1);
  return beta * std::exp(j * 2.0 * kPi * (m * d_over_lambda * psi)) * std::exp(j * 2.0 * kPi * (n * ts * fd)) *
         std::exp(-j * 2.0 * kPi * (k * df * tau));
}

// Small random scene: P APs on a ring facing the centre, L targets in a box.
inline coopsense::ScenarioConfig random_scene(std::mt19937_64& rng, int aps, int targets, int antennas,
                                              int subcarriers, int symbols) {
  std::uniform_real_distribution<Real> box(-80.0, 80.0);
  std::uniform_real_distribution<Real> speed(-40.0, 40.0);
  coopsense::ScenarioConfig s;
  s.ofdm.subcarriers = subcarriers;
  s.ofdm.symbols = symbols;
  s.aps = coopsense::ap_ring(aps, 400.0, antennas, s.ofdm);
  for (int l = 0; l < targets; ++l)
    s.targets.push_back({Vec2(box(rng), box(rng)), Vec2(speed(rng), speed(rng)), 0.01});
  return s;
}

}  // namespace testsupport
