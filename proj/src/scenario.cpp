#include "coopsense/scenario.hpp"

#include <cmath>
#include <fstream>

namespace coopsense {

namespace {

constexpr Real kDegToRad = kPi / 180.0;

Vec2 vec2_from_json(const nlohmann::json& j, const char* key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 2)
    throw Error(ErrorCode::InvalidConfig, std::string(key) + " must be a two-element array");
  return Vec2(a[0].get<Real>(), a[1].get<Real>());
}

nlohmann::json vec2_to_json(const Vec2& v) { return nlohmann::json::array({v.x(), v.y()}); }

}  // namespace

void OfdmParams::validate() const {
  if (!(carrier_frequency > 0)) throw Error(ErrorCode::InvalidConfig, "carrier frequency must be positive");
  if (!(subcarrier_spacing > 0)) throw Error(ErrorCode::InvalidConfig, "subcarrier spacing must be positive");
  if (subcarriers < 1 || symbols < 1) throw Error(ErrorCode::InvalidConfig, "K and N must be >= 1");
  // Ts >= 1/df, the cyclic prefix only lengthens the symbol.
  if (symbol_period * subcarrier_spacing < 1.0 - 1e-9)
    throw Error(ErrorCode::InvalidConfig, "symbol period shorter than 1/subcarrier_spacing");
}

void ScenarioConfig::validate() const {
  ofdm.validate();
  for (const auto& ap : aps) {
    if (ap.antenna_count < 1) throw Error(ErrorCode::InvalidConfig, "AP needs at least one antenna");
    if (!(ap.antenna_spacing > 0)) throw Error(ErrorCode::InvalidConfig, "antenna spacing must be positive");
  }
  for (const auto& t : targets) {
    if (!(t.rcs > 0)) throw Error(ErrorCode::InvalidConfig, "target RCS must be positive");
    for (const auto& ap : aps)
      if ((t.position - ap.position).norm() == 0.0)
        throw Error(ErrorCode::ZeroRange, "target placed on an AP");
  }
  if (!(reference_range > 0) || !(reference_rcs > 0))
    throw Error(ErrorCode::InvalidConfig, "reference range and RCS must be positive");
  if (!(roi.width() > 0) || !(roi.height() > 0)) throw Error(ErrorCode::InvalidConfig, "degenerate ROI");
}

std::vector<ApGeometry> ap_ring(int count, Real radius, int antennas, const OfdmParams& ofdm,
                                std::optional<Real> spacing) {
  std::vector<ApGeometry> aps;
  aps.reserve(static_cast<std::size_t>(count));
  for (int p = 0; p < count; ++p) {
    const Real phi = kTwoPi * p / count;
    ApGeometry ap;
    ap.position = radius * Vec2(std::cos(phi), std::sin(phi));
    // Local x-axis along (cos k, -sin k) must be the tangent direction phi + pi/2.
    ap.kappa = normalize_angle(-(phi + kPi / 2));
    ap.antenna_count = antennas;
    ap.antenna_spacing = spacing.value_or(ofdm.wavelength() / 2);
    aps.push_back(ap);
  }
  return aps;
}

ScenarioConfig reference_scenario(int subcarriers) {
  ScenarioConfig s;
  s.ofdm.subcarriers = subcarriers;
  s.aps = ap_ring(5, 500.0, 8, s.ofdm);
  // Opposite 40 m/s headings chosen so the radial speeds differ at every AP.
  s.targets = {
      TargetTruth{Vec2(-32.0, -35.0), Vec2(-32.0, 24.0), 0.01},
      TargetTruth{Vec2(40.0, 30.0), Vec2(32.0, -24.0), 0.01},
  };
  return s;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  ScenarioConfig s;
  if (j.contains("ofdm")) {
    const auto& o = j.at("ofdm");
    s.ofdm.carrier_frequency = o.value("carrier_frequency_hz", s.ofdm.carrier_frequency);
    s.ofdm.subcarrier_spacing = o.value("subcarrier_spacing_hz", s.ofdm.subcarrier_spacing);
    s.ofdm.symbols = o.value("symbols", s.ofdm.symbols);
    s.ofdm.symbol_period = o.value("symbol_period_s", s.ofdm.symbol_period);
    if (o.contains("resource_blocks")) s.ofdm.subcarriers = 12 * o.at("resource_blocks").get<int>();
    s.ofdm.subcarriers = o.value("subcarriers", s.ofdm.subcarriers);
  }
  if (j.contains("ap_ring")) {
    const auto& r = j.at("ap_ring");
    std::optional<Real> spacing;
    if (r.contains("spacing_m")) spacing = r.at("spacing_m").get<Real>();
    s.aps = ap_ring(r.at("count").get<int>(), r.at("radius_m").get<Real>(), r.value("antennas", 8), s.ofdm,
                    spacing);
  }
  if (j.contains("aps")) {
    for (const auto& a : j.at("aps")) {
      ApGeometry ap;
      ap.position = vec2_from_json(a, "position_m");
      ap.kappa = normalize_angle(a.value("orientation_deg", 0.0) * kDegToRad);
      ap.antenna_count = a.value("antennas", 8);
      ap.antenna_spacing = a.value("spacing_m", s.ofdm.wavelength() / 2);
      s.aps.push_back(ap);
    }
  }
  if (j.contains("targets")) {
    for (const auto& t : j.at("targets")) {
      TargetTruth tt;
      tt.position = vec2_from_json(t, "position_m");
      if (t.contains("velocity_mps")) tt.velocity = vec2_from_json(t, "velocity_mps");
      tt.rcs = t.value("rcs_m2", 0.01);
      s.targets.push_back(tt);
    }
  }
  s.reference_range = j.value("reference_range_m", s.reference_range);
  s.reference_rcs = j.value("reference_rcs_m2", s.reference_rcs);
  if (j.contains("roi_m")) {
    const auto& r = j.at("roi_m");
    if (!r.is_array() || r.size() != 4) throw Error(ErrorCode::InvalidConfig, "roi_m must be [x0,y0,x1,y1]");
    s.roi = Rect{Vec2(r[0].get<Real>(), r[1].get<Real>()), Vec2(r[2].get<Real>(), r[3].get<Real>())};
  }
  if (s.aps.empty()) throw Error(ErrorCode::InvalidConfig, "scenario defines no APs");
  s.validate();
  return s;
}

nlohmann::json scenario_to_json(const ScenarioConfig& s) {
  nlohmann::json j;
  j["ofdm"] = {
      {"carrier_frequency_hz", s.ofdm.carrier_frequency},
      {"subcarrier_spacing_hz", s.ofdm.subcarrier_spacing},
      {"subcarriers", s.ofdm.subcarriers},
      {"symbols", s.ofdm.symbols},
      {"symbol_period_s", s.ofdm.symbol_period},
  };
  j["aps"] = nlohmann::json::array();
  for (const auto& ap : s.aps) {
    j["aps"].push_back({{"position_m", vec2_to_json(ap.position)},
                        {"orientation_deg", ap.kappa / kDegToRad},
                        {"antennas", ap.antenna_count},
                        {"spacing_m", ap.antenna_spacing}});
  }
  j["targets"] = nlohmann::json::array();
  for (const auto& t : s.targets) {
    j["targets"].push_back(
        {{"position_m", vec2_to_json(t.position)}, {"velocity_mps", vec2_to_json(t.velocity)}, {"rcs_m2", t.rcs}});
  }
  j["reference_range_m"] = s.reference_range;
  j["reference_rcs_m2"] = s.reference_rcs;
  j["roi_m"] = {s.roi.min.x(), s.roi.min.y(), s.roi.max.x(), s.roi.max.y()};
  return j;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open scenario file " + path.string());
  try {
    nlohmann::json j;
    in >> j;
    return scenario_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

}  // namespace coopsense
