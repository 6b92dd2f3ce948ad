#include "coopsense/signal.hpp"

#include <algorithm>
#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

namespace coopsense {

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 + 2 * path.size());
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(master);
  for (auto v : path) push(v);
  std::seed_seq seq(words.begin(), words.end());
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t(out[1]) << 32) | out[0];
}

CVector steering_spatial(Real psi, int antennas, Real spacing, Real wavelength) {
  if (!(std::abs(psi) <= 1.0)) throw Error(ErrorCode::InvalidAngle, "virtual angle outside [-1, 1]");
  const Real step = kTwoPi * (spacing / wavelength) * psi;
  CVector a(antennas);
  for (int m = 0; m < antennas; ++m) a[m] = std::polar(1.0, step * m);
  return a;
}

CVector steering_doppler(Real doppler, int symbols, Real symbol_period) {
  const Real step = kTwoPi * symbol_period * doppler;
  CVector o(symbols);
  for (int n = 1; n <= symbols; ++n) o[n - 1] = std::polar(1.0, step * n);
  return o;
}

CVector steering_delay(Real tau, int subcarriers, Real subcarrier_spacing) {
  const Real step = -kTwoPi * subcarrier_spacing * tau;
  CVector g(subcarriers);
  for (int k = 1; k <= subcarriers; ++k) g[k - 1] = std::polar(1.0, step * k);
  return g;
}

Real path_loss_db(Real fc_mhz, Real d_km, Real rcs) {
  if (!(fc_mhz > 0) || !(d_km > 0) || !(rcs > 0))
    throw Error(ErrorCode::NonPositiveInput, "path loss needs positive frequency, range and RCS");
  return 103.4 + 20.0 * std::log10(fc_mhz) + 40.0 * std::log10(d_km) - 10.0 * std::log10(rcs);
}

Real path_gain_amplitude(const ScenarioConfig& scenario, int ap_index, int target_index) {
  const auto& ap = scenario.aps.at(static_cast<std::size_t>(ap_index));
  const auto& target = scenario.targets.at(static_cast<std::size_t>(target_index));
  const Real fc_mhz = scenario.ofdm.carrier_frequency / 1e6;
  const Real range = (target.position - ap.position).norm();
  if (!(range > 0)) throw Error(ErrorCode::ZeroRange, "target coincides with AP position");
  const Real pl = path_loss_db(fc_mhz, range / 1e3, target.rcs);
  const Real pl_ref = path_loss_db(fc_mhz, scenario.reference_range / 1e3, scenario.reference_rcs);
  return std::pow(10.0, -(pl - pl_ref) / 20.0);
}

CVector random_beamformer(int antennas, Rng& rng) {
  std::uniform_real_distribution<Real> phase(0.0, kTwoPi);
  const Real scale = 1.0 / std::sqrt(static_cast<Real>(antennas));
  CVector f(antennas);
  for (int m = 0; m < antennas; ++m) f[m] = std::polar(scale, phase(rng));
  return f;
}

Real radial_velocity(const TargetTruth& target, const ApGeometry& ap) {
  const Vec2 rel = target.position - ap.position;
  const Real r = rel.norm();
  if (!(r > 0)) throw Error(ErrorCode::ZeroRange, "target coincides with AP position");
  return target.velocity.dot(rel) / r;
}

Real doppler_shift(const TargetTruth& target, const ApGeometry& ap, const OfdmParams& ofdm) {
  return 2.0 * radial_velocity(target, ap) / ofdm.wavelength();
}

ChannelGain channel_gain(const ScenarioConfig& scenario, int ap_index, int target_index,
                         const CVector& beamformer, Real gain_phase) {
  const auto& ap = scenario.aps.at(static_cast<std::size_t>(ap_index));
  const auto& target = scenario.targets.at(static_cast<std::size_t>(target_index));
  const Real psi = candidate_virtual_angle(target.position, ap);
  const CVector a = steering_spatial(psi, ap.antenna_count, ap.antenna_spacing, scenario.ofdm.wavelength());
  ChannelGain g;
  g.alpha = std::polar(path_gain_amplitude(scenario, ap_index, target_index), gain_phase);
  g.beta = g.alpha * a.dot(beamformer);  // dot() conjugates its left operand: a^H f
  return g;
}

ApChannel draw_channel(const ScenarioConfig& scenario, int ap_index, Rng& rng) {
  const auto& ap = scenario.aps.at(static_cast<std::size_t>(ap_index));
  ApChannel ch;
  ch.beamformer = random_beamformer(ap.antenna_count, rng);
  std::uniform_real_distribution<Real> phase(0.0, kTwoPi);
  for (int l = 0; l < scenario.target_count(); ++l)
    ch.gains.push_back(channel_gain(scenario, ap_index, l, ch.beamformer, phase(rng)));
  return ch;
}

EchoTensor synthesize_echo(const ScenarioConfig& scenario, int ap_index, const ApChannel& channel,
                           Real noise_sigma, Rng& rng) {
  const auto& ap = scenario.aps.at(static_cast<std::size_t>(ap_index));
  const auto& ofdm = scenario.ofdm;
  const int M = ap.antenna_count;
  const int N = ofdm.symbols;
  const int K = ofdm.subcarriers;
  if (channel.gains.size() != scenario.targets.size())
    throw Error(ErrorCode::LengthMismatch, "channel gains do not match the target list");

  EchoTensor y(ap_index, M, N, K);
  // Storage order (m, k, n) makes each symbol's slice the vector g (x) a.
  Eigen::Map<CMatrix> unfolded(y.data().data(), Eigen::Index(M) * K, N);
  for (int l = 0; l < scenario.target_count(); ++l) {
    const auto& target = scenario.targets[static_cast<std::size_t>(l)];
    const CVector a = steering_spatial(candidate_virtual_angle(target.position, ap), M, ap.antenna_spacing,
                                       ofdm.wavelength());
    const CVector o = steering_doppler(doppler_shift(target, ap, ofdm), N, ofdm.symbol_period);
    const CVector g = steering_delay(candidate_delay(target.position, ap), K, ofdm.subcarrier_spacing);
    const CVector ga = channel.gains[static_cast<std::size_t>(l)].beta * Eigen::kroneckerProduct(g, a).eval();
    unfolded.noalias() += ga * o.transpose();
  }

  if (noise_sigma > 0) {
    std::normal_distribution<Real> normal(0.0, noise_sigma / std::sqrt(2.0));
    for (Eigen::Index i = 0; i < y.data().size(); ++i) y.data()[i] += Complex(normal(rng), normal(rng));
  }
  return y;
}

EchoTensor synthesize_echo(const ScenarioConfig& scenario, int ap_index, Real noise_sigma, Rng& rng) {
  const ApChannel channel = draw_channel(scenario, ap_index, rng);
  return synthesize_echo(scenario, ap_index, channel, noise_sigma, rng);
}

Real noise_sigma_for_snr(std::span<const Real> beta_magnitudes, Real snr_db) {
  if (beta_magnitudes.empty()) throw Error(ErrorCode::InvalidConfig, "SNR needs at least one target");
  const Real peak = *std::max_element(beta_magnitudes.begin(), beta_magnitudes.end());
  return peak / std::sqrt(db_to_power(snr_db));
}

Real noise_sigma_for_snr(const ScenarioConfig& scenario, Real snr_db) {
  std::vector<Real> mags;
  for (int p = 0; p < scenario.ap_count(); ++p)
    for (int l = 0; l < scenario.target_count(); ++l) mags.push_back(path_gain_amplitude(scenario, p, l));
  return noise_sigma_for_snr(mags, snr_db);
}

}  // namespace coopsense
