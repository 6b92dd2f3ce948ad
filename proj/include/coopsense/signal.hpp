#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <vector>

#include "coopsense/core.hpp"
#include "coopsense/geometry.hpp"
#include "coopsense/scenario.hpp"

namespace coopsense {

using Rng = std::mt19937_64;

/// Deterministic child seed for a position in a (master, a, b, ...) tree.
/// Streams for different paths are statistically independent; a given path
/// always yields the same seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);
inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  return Rng(derive_seed(master, path));
}

/// Per-AP observation cube, antenna x symbol x subcarrier (M x N x K).
///
/// Storage is column-major over (m, k, n): the antenna index runs fastest,
/// then subcarrier, then symbol, so the mode-2 unfolding is a plain reshape.
class EchoTensor {
 public:
  EchoTensor() = default;
  EchoTensor(int ap_index, int antennas, int symbols, int subcarriers)
      : ap_index_(ap_index), m_(antennas), n_(symbols), k_(subcarriers),
        data_(CVector::Zero(Eigen::Index(antennas) * symbols * subcarriers)) {}

  int ap_index() const { return ap_index_; }
  int antennas() const { return m_; }
  int symbols() const { return n_; }
  int subcarriers() const { return k_; }

  Complex& operator()(int m, int n, int k) { return data_[index(m, n, k)]; }
  const Complex& operator()(int m, int n, int k) const { return data_[index(m, n, k)]; }

  const CVector& data() const { return data_; }
  CVector& data() { return data_; }

 private:
  Eigen::Index index(int m, int n, int k) const {
    return m + Eigen::Index(m_) * (k + Eigen::Index(k_) * n);
  }

  int ap_index_ = 0;
  int m_ = 0;
  int n_ = 0;
  int k_ = 0;
  CVector data_;
};

/// Composite gain beta = alpha * a^H(psi) f and the raw path gain alpha.
struct ChannelGain {
  Complex beta;
  Complex alpha;
};

/// Random quantities of one AP for one trial: its beamformer and the
/// per-target gains that go with it.
struct ApChannel {
  CVector beamformer;
  std::vector<ChannelGain> gains;
};

/// a(psi): element m = exp(j 2 pi m (d / lambda) psi), m = 0..M-1.
CVector steering_spatial(Real psi, int antennas, Real spacing, Real wavelength);
/// o(f_d): element n = exp(j 2 pi n Ts f_d), n = 1..N.
CVector steering_doppler(Real doppler, int symbols, Real symbol_period);
/// g(tau): element k = exp(-j 2 pi k df tau), k = 1..K.
CVector steering_delay(Real tau, int subcarriers, Real subcarrier_spacing);

/// Radar path loss in dB for carrier in MHz, range in km, RCS in m^2.
Real path_loss_db(Real fc_mhz, Real d_km, Real rcs);

/// |alpha| = 10^(-(PL - PL_ref) / 20), PL_ref being the path loss of the
/// scenario's reference range and RCS.
Real path_gain_amplitude(const ScenarioConfig& scenario, int ap_index, int target_index);

/// Unit-norm beamformer with i.i.d. uniform phases.
CVector random_beamformer(int antennas, Rng& rng);

/// Radial velocity of the target along the AP->target line of sight and the
/// resulting Doppler 2 v / lambda.
Real radial_velocity(const TargetTruth& target, const ApGeometry& ap);
Real doppler_shift(const TargetTruth& target, const ApGeometry& ap, const OfdmParams& ofdm);

ChannelGain channel_gain(const ScenarioConfig& scenario, int ap_index, int target_index,
                         const CVector& beamformer, Real gain_phase);

/// Draw a beamformer and uniform gain phases for every target at one AP.
ApChannel draw_channel(const ScenarioConfig& scenario, int ap_index, Rng& rng);

/// Noise-free tensor sum_l beta_l a(psi_l) o(f_l) g(tau_l) plus circular
/// complex Gaussian noise of total variance noise_sigma^2 per entry.
EchoTensor synthesize_echo(const ScenarioConfig& scenario, int ap_index, const ApChannel& channel,
                           Real noise_sigma, Rng& rng);
EchoTensor synthesize_echo(const ScenarioConfig& scenario, int ap_index, Real noise_sigma, Rng& rng);

/// sigma_n such that max_i |beta_i|^2 / sigma_n^2 == 10^(snr_db/10).
Real noise_sigma_for_snr(std::span<const Real> beta_magnitudes, Real snr_db);
/// Same, with the nominal |beta| = |alpha| of every AP/target pair (the
/// expected beamforming gain of a random-phase unit-norm beamformer is 1).
Real noise_sigma_for_snr(const ScenarioConfig& scenario, Real snr_db);

}  // namespace coopsense
