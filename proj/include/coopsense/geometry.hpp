#pragma once

#include <algorithm>
#include <cmath>

#include "coopsense/core.hpp"

namespace coopsense {

/// A monostatic access point with a ULA along its local x-axis.
///
/// `kappa` is the angle between the local and global frames, used through
/// rotation_matrix(): the local x-axis points along (cos kappa, -sin kappa)
/// in global coordinates.
struct ApGeometry {
  Vec2 position{Vec2::Zero()};
  Real kappa = 0.0;
  int antenna_count = 1;
  Real antenna_spacing = 0.0;
};

struct TargetTruth {
  Vec2 position{Vec2::Zero()};
  Vec2 velocity{Vec2::Zero()};
  Real rcs = 1.0;  // m^2
};

/// Wrap an angle into (-pi, pi].
template <typename Scalar>
Scalar normalize_angle(Scalar a) {
  using std::remainder;
  Scalar r = remainder(a, Scalar(kTwoPi));
  if (r <= -Scalar(kPi)) r += Scalar(kTwoPi);
  return r;
}

/// Local-to-global transform T(kappa) = [cos, sin; -sin, cos].
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 2> rotation_matrix(Scalar kappa) {
  using std::cos;
  using std::sin;
  const Scalar c = cos(kappa);
  const Scalar s = sin(kappa);
  Eigen::Matrix<Scalar, 2, 2> t;
  t << c, s, -s, c;
  return t;
}

/// T(kappa)^-1 (p - p_ap). T is orthonormal, so the inverse is its transpose.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> to_local(const Eigen::Matrix<Scalar, 2, 1>& p, const ApGeometry& ap) {
  const Eigen::Matrix<Scalar, 2, 1> rel = p - ap.position.template cast<Scalar>();
  return rotation_matrix<Scalar>(Scalar(ap.kappa)).transpose() * rel;
}

namespace detail {

template <typename Scalar>
Scalar checked_range(const Eigen::Matrix<Scalar, 2, 1>& rel) {
  const Scalar r = rel.norm();
  if (!(r > Scalar(0))) throw Error(ErrorCode::ZeroRange, "target coincides with AP position");
  return r;
}

}  // namespace detail

/// Round-trip delay 2 * range / c.
template <typename Scalar>
Scalar candidate_delay(const Eigen::Matrix<Scalar, 2, 1>& p, const ApGeometry& ap) {
  const Eigen::Matrix<Scalar, 2, 1> rel = p - ap.position.template cast<Scalar>();
  return Scalar(2) * detail::checked_range(rel) / Scalar(kSpeedOfLight);
}

/// Local unit direction to the target: (psi, sin(acos psi)) where psi is the
/// virtual angle cos(theta) seen by the array.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> local_direction(const Eigen::Matrix<Scalar, 2, 1>& p, const ApGeometry& ap) {
  const Eigen::Matrix<Scalar, 2, 1> loc = to_local(p, ap);
  return loc / detail::checked_range(loc);
}

template <typename Scalar>
Scalar candidate_virtual_angle(const Eigen::Matrix<Scalar, 2, 1>& p, const ApGeometry& ap) {
  using std::clamp;
  const Scalar psi = local_direction(p, ap).x();
  return clamp(psi, Scalar(-1), Scalar(1));
}

/// Gradient of candidate_delay with respect to the target position.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> delay_jacobian(const Eigen::Matrix<Scalar, 2, 1>& p, const ApGeometry& ap) {
  const Eigen::Matrix<Scalar, 2, 1> rel = p - ap.position.template cast<Scalar>();
  const Scalar r = detail::checked_range(rel);
  return Scalar(2) * rel / (Scalar(kSpeedOfLight) * r);
}

/// Global-frame virtual angle psi_g = cos(theta_g) = (x_t - x_ap) / range.
template <typename Scalar>
Scalar global_virtual_angle(const Eigen::Matrix<Scalar, 2, 1>& p, const ApGeometry& ap) {
  const Eigen::Matrix<Scalar, 2, 1> rel = p - ap.position.template cast<Scalar>();
  return rel.x() / detail::checked_range(rel);
}

enum class AngleJacobianForm {
  /// Closed forms (dy^2 / r^3, -dx dy / r^3) as printed for the bound.
  Printed,
  /// Differentiates psi_g = dx / r directly.
  Analytic,
  /// Gradient of the local-frame virtual angle the array actually observes.
  LocalFrame,
};

template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> angle_jacobian(const Eigen::Matrix<Scalar, 2, 1>& p, const ApGeometry& ap,
                                           AngleJacobianForm form = AngleJacobianForm::Analytic) {
  const Eigen::Matrix<Scalar, 2, 1> rel = p - ap.position.template cast<Scalar>();
  const Scalar r = detail::checked_range(rel);
  const Scalar r3 = r * r * r;
  const Scalar dx = rel.x();
  const Scalar dy = rel.y();
  Eigen::Matrix<Scalar, 2, 1> g;
  switch (form) {
    case AngleJacobianForm::Printed:
      g << dy * dy / r3, -(dx * dy) / r3;
      break;
    case AngleJacobianForm::Analytic:
      // d(dx/r) = e_x / r - dx * rel / r^3
      g = -dx * rel / r3;
      g.x() += Scalar(1) / r;
      break;
    case AngleJacobianForm::LocalFrame: {
      // psi = u . rel / r with u the array axis in global coordinates.
      const Eigen::Matrix<Scalar, 2, 1> axis =
          rotation_matrix<Scalar>(Scalar(ap.kappa)).transpose().row(0).transpose();
      g = axis / r - axis.dot(rel) * rel / r3;
      break;
    }
  }
  return g;
}

}  // namespace coopsense
