#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "coopsense/core.hpp"
#include "coopsense/geometry.hpp"

namespace coopsense {

struct OfdmParams {
  Real carrier_frequency = 4.9e9;    // Hz
  Real subcarrier_spacing = 30e3;    // Hz
  int subcarriers = 24;              // K
  int symbols = 7;                   // N
  Real symbol_period = 35.677e-6;    // s, cyclic prefix included

  Real wavelength() const { return kSpeedOfLight / carrier_frequency; }

  /// Throws InvalidConfig when the numerology is inconsistent.
  void validate() const;
};

/// Full ground truth for one simulation: AP layout, targets, numerology.
struct ScenarioConfig {
  std::vector<ApGeometry> aps;
  std::vector<TargetTruth> targets;
  OfdmParams ofdm;
  /// A target of `reference_rcs` at `reference_range` has unit |alpha|.
  Real reference_range = 500.0;
  Real reference_rcs = 0.01;
  /// Region searched by the estimator.
  Rect roi{Vec2(-100.0, -100.0), Vec2(100.0, 100.0)};

  int ap_count() const { return static_cast<int>(aps.size()); }
  int target_count() const { return static_cast<int>(targets.size()); }

  void validate() const;
};

/// `count` APs evenly spaced on a circle of `radius` around the origin, each
/// with its array axis tangent to the circle so that broadside faces the
/// centre. Spacing defaults to half a wavelength.
std::vector<ApGeometry> ap_ring(int count, Real radius, int antennas, const OfdmParams& ofdm,
                                std::optional<Real> spacing = std::nullopt);

/// The reference scene: five 8-antenna APs on a 500 m circle, targets at
/// (-32,-35) and (40,30) m with 0.01 m^2 RCS. `subcarriers` selects the
/// desk-scale (24) or full (96) allocation.
ScenarioConfig reference_scenario(int subcarriers = 24);

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& s);
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace coopsense
