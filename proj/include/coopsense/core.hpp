#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace coopsense {

using Real = double;
using Complex = std::complex<Real>;

using Vec2 = Eigen::Matrix<Real, 2, 1>;
using Mat2 = Eigen::Matrix<Real, 2, 2>;
using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using RMatrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic>;

inline constexpr Real kSpeedOfLight = 299'792'458.0;  // m/s
inline constexpr Real kPi = 3.14159265358979323846;
inline constexpr Real kTwoPi = 2.0 * kPi;

enum class ErrorCode {
  ZeroRange,
  InvalidAngle,
  NonPositiveInput,
  NonPositiveNoise,
  InsufficientPeaks,
  SingularGeometry,
  LengthMismatch,
  PlacementFailure,
  InvalidConfig,
  IoError,
};

const char* to_string(ErrorCode code) noexcept;

/// Every recoverable failure in the library is reported through this type;
/// `code()` lets callers (the sweep harness in particular) classify it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Axis-aligned rectangle in the global frame.
struct Rect {
  Vec2 min{Vec2::Zero()};
  Vec2 max{Vec2::Zero()};

  Real width() const { return max.x() - min.x(); }
  Real height() const { return max.y() - min.y(); }
  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
};

inline Real db_to_power(Real db) { return std::pow(10.0, db / 10.0); }
inline Real power_to_db(Real p) { return 10.0 * std::log10(p); }

}  // namespace coopsense
