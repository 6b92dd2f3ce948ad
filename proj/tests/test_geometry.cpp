#include <doctest.h>

#include <random>

#include "coopsense/geometry.hpp"
#include "support.hpp"

using namespace coopsense;
using namespace testsupport;

namespace {

ApGeometry ap_at(Vec2 pos, Real kappa) { return ApGeometry{pos, kappa, 8, 0.03}; }

}  // namespace

TEST_CASE("rotation matrix: fixed angles") {
  CHECK(rotation_matrix(0.0).isApprox(Mat2::Identity()));
  Mat2 quarter;
  quarter << 0, 1, -1, 0;
  CHECK((rotation_matrix(kPi / 2) - quarter).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((rotation_matrix(0.7) * rotation_matrix(-0.7) - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("rotation matrix: orthonormal with unit determinant") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<Real> u(-10.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const Mat2 t = rotation_matrix(u(rng));
    CHECK((t.transpose() * t - Mat2::Identity()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(t.determinant() == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("normalize_angle lands in (-pi, pi]") {
  CHECK(normalize_angle(kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(-kPi) == doctest::Approx(kPi));
  CHECK(normalize_angle(3 * kPi / 2) == doctest::Approx(-kPi / 2));
  CHECK(normalize_angle(0.25) == 0.25);
}

TEST_CASE("to_local") {
  CHECK(to_local(Vec2(3, 4), ap_at(Vec2::Zero(), 0)).isApprox(Vec2(3, 4)));
  CHECK(to_local(Vec2(1, 0), ap_at(Vec2(1, 0), 0)).norm() == 0.0);

  const Vec2 got = to_local(Vec2(0, 1), ap_at(Vec2::Zero(), kPi / 2));
  CHECK((got - local_oracle(Vec2(0, 1), Vec2::Zero(), kPi / 2)).norm() < 1e-15);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<Real> u(-200.0, 200.0);
  for (int i = 0; i < 100; ++i) {
    const Vec2 p(u(rng), u(rng));
    const ApGeometry ap = ap_at(Vec2(u(rng), u(rng)), u(rng));
    const Vec2 loc = to_local(p, ap);
    CHECK((loc - local_oracle(p, ap.position, ap.kappa)).norm() < 1e-11);
    CHECK(loc.norm() == doctest::Approx((p - ap.position).norm()).epsilon(1e-13));
  }
}

TEST_CASE("candidate_delay") {
  // 150 m of range is a 300 m round trip.
  CHECK(candidate_delay(Vec2(150, 0), ap_at(Vec2::Zero(), 0)) == doctest::Approx(1.000692285e-6).epsilon(1e-9));

  const ApGeometry east = ap_at(Vec2(500, 0), 0);
  CHECK(candidate_delay(Vec2(40, 30), east) == doctest::Approx(2 * std::sqrt(460.0 * 460 + 30 * 30) / kC));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<Real> u(-kPi, kPi);
  const Vec2 p = east.position + Vec2(0, 37.5);
  const Real ref = candidate_delay(p, ap_at(east.position, 0));
  for (int i = 0; i < 10; ++i) {
    const Real tau = candidate_delay(p, ap_at(east.position, u(rng)));
    CHECK(tau > 0);
    CHECK(rel_err(tau, ref) <= 1e-15);
  }
  CHECK_THROWS_AS(candidate_delay(east.position, east), Error);
}

TEST_CASE("candidate_virtual_angle") {
  const ApGeometry origin = ap_at(Vec2::Zero(), 0);
  CHECK(candidate_virtual_angle(Vec2(10, 0), origin) == doctest::Approx(1.0));
  CHECK(candidate_virtual_angle(Vec2(0, 10), origin) == doctest::Approx(0.0));

  // With T(kappa) = [c s; -s c] the rotated local x-axis for kappa = pi/4
  // points along (1, -1) in global coordinates.
  const ApGeometry tilted = ap_at(Vec2::Zero(), kPi / 4);
  CHECK(candidate_virtual_angle(Vec2(10, -10), tilted) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(candidate_virtual_angle(Vec2(10, 10), tilted) == doctest::Approx(0.0).epsilon(1e-15));

  std::mt19937_64 rng(9);
  std::uniform_real_distribution<Real> u(-300.0, 300.0);
  std::uniform_real_distribution<Real> k(-kPi, kPi);
  for (int i = 0; i < 200; ++i) {
    const Vec2 p(u(rng), u(rng));
    const ApGeometry ap = ap_at(Vec2(u(rng), u(rng)), k(rng));
    const Real psi = candidate_virtual_angle(p, ap);
    CHECK(psi >= -1.0);
    CHECK(psi <= 1.0);
    CHECK(psi == doctest::Approx(psi_oracle(p, ap.position, ap.kappa)).epsilon(1e-12));
    CHECK(local_direction(p, ap).norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(candidate_virtual_angle(Vec2(Vec2::Zero()), origin), Error);
}

TEST_CASE("delay_jacobian") {
  const ApGeometry ap = ap_at(Vec2(-20, 5), 0.3);
  const Vec2 g = delay_jacobian(Vec2(80, 5), ap);
  CHECK(g.x() == doctest::Approx(2 / kC));
  CHECK(g.y() == doctest::Approx(0.0));
  CHECK_THROWS_AS(delay_jacobian(ap.position, ap), Error);
}

TEST_CASE("angle_jacobian printed form") {
  // Due east of the AP the printed numerators both vanish.
  const ApGeometry ap = ap_at(Vec2(-20, 5), 0.3);
  const Vec2 g = angle_jacobian(Vec2(80, 5), ap, AngleJacobianForm::Printed);
  CHECK(g.x() == 0.0);
  CHECK(g.y() == 0.0);
}

TEST_CASE("Jacobians match central differences") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<Real> u(-500.0, 500.0);
  std::uniform_real_distribution<Real> k(-kPi, kPi);
  const Real h = 1e-4;
  int checked = 0;
  while (checked < 1000) {
    const Vec2 p(u(rng), u(rng));
    const ApGeometry ap = ap_at(Vec2(u(rng), u(rng)), k(rng));
    if ((p - ap.position).norm() <= 1.0) continue;
    ++checked;

    const Vec2 gd = delay_jacobian(p, ap);
    const Vec2 fd_tau = fd_gradient([&](const Vec2& q) { return tau_oracle(q, ap.position); }, p, h);
    // Tolerance on the vector norm: individual entries near zero are noise-limited.
    CHECK((gd - fd_tau).norm() <= 1e-6 * gd.norm());
    CHECK(gd.norm() == doctest::Approx(2 / kC).epsilon(1e-12));

    const auto psi_g = [&](const Vec2& q) { return (q.x() - ap.position.x()) / (q - ap.position).norm(); };
    const Vec2 fd_psi = fd_gradient(psi_g, p, h);
    for (auto form : {AngleJacobianForm::Printed, AngleJacobianForm::Analytic}) {
      const Vec2 ga = angle_jacobian(p, ap, form);
      CHECK((ga - fd_psi).norm() <= 1e-6 * std::max(ga.norm(), 1e-12));
    }

    const Vec2 fd_local = fd_gradient([&](const Vec2& q) { return psi_oracle(q, ap.position, ap.kappa); }, p, h);
    const Vec2 gl = angle_jacobian(p, ap, AngleJacobianForm::LocalFrame);
    CHECK((gl - fd_local).norm() <= 1e-6 * std::max(gl.norm(), 1e-12));
  }
}

TEST_CASE("geometry templates evaluate in long double") {
  using V = Eigen::Matrix<long double, 2, 1>;
  const ApGeometry ap = ap_at(Vec2(500, 0), kPi / 2);
  const long double tau = candidate_delay(V(40, 30), ap);
  CHECK(static_cast<double>(tau) == doctest::Approx(candidate_delay(Vec2(40, 30), ap)));
}
