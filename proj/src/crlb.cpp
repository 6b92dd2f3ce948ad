#include "coopsense/crlb.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "coopsense/signal.hpp"

namespace coopsense {

namespace {

void check_noise(Real sigma_n) {
  if (!(sigma_n > 0)) throw Error(ErrorCode::NonPositiveNoise, "noise sigma must be positive");
}

// sum of m and m^2 over the antenna index range
Real index_sum(int m_count, ArrayIndexing indexing) {
  const Real M = m_count;
  return indexing == ArrayIndexing::OneBased ? M * (M + 1) / 2 : M * (M - 1) / 2;
}

Real index_sum_sq(int m_count, ArrayIndexing indexing) {
  const Real M = m_count;
  return indexing == ArrayIndexing::OneBased ? M * (M + 1) * (2 * M + 1) / 6 : (M - 1) * M * (2 * M - 1) / 6;
}

}  // namespace

RMatrix FimBlocks::assemble() const {
  const int P = ap_count();
  RMatrix f = RMatrix::Zero(2 * P, 2 * P);
  f.topLeftCorner(P, P) = psi_diag.asDiagonal();
  f.bottomRightCorner(P, P) = omega_diag.asDiagonal();
  f.topRightCorner(P, P) = upsilon_diag.asDiagonal();
  f.bottomLeftCorner(P, P) = upsilon_diag.asDiagonal();
  return f;
}

FimBlocks fim_blocks_closed_form(std::span<const FimTerm> terms, const OfdmParams& ofdm, Real sigma_n,
                                 ArrayIndexing indexing) {
  check_noise(sigma_n);
  const auto P = static_cast<Eigen::Index>(terms.size());
  const Real K = ofdm.subcarriers;
  const Real N = ofdm.symbols;
  const Real df = ofdm.subcarrier_spacing;
  const Real lambda = ofdm.wavelength();
  const Real s2 = sigma_n * sigma_n;
  const Real pi2 = kPi * kPi;

  FimBlocks b;
  b.psi_diag.resize(P);
  b.omega_diag.resize(P);
  b.upsilon_diag.resize(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    const auto& t = terms[static_cast<std::size_t>(p)];
    const Real M = t.antennas;
    const Real d = t.antenna_spacing;
    const Real b2 = t.beta_magnitude * t.beta_magnitude;
    b.psi_diag[p] = 4 * pi2 * b2 * df * df * M * K * N * (N + 1) * (2 * N + 1) / (3 * s2);
    if (indexing == ArrayIndexing::OneBased) {
      b.omega_diag[p] = 4 * pi2 * b2 * d * d * M * (M + 1) * (2 * M + 1) * K * N / (3 * s2 * lambda * lambda);
      b.upsilon_diag[p] = -2 * pi2 * b2 * df * d * M * (M + 1) * N * (N + 1) * K / (s2 * lambda);
    } else {
      b.omega_diag[p] = 8 * pi2 * b2 * d * d * index_sum_sq(t.antennas, indexing) * K * N / (s2 * lambda * lambda);
      b.upsilon_diag[p] = -4 * pi2 * b2 * df * d * index_sum(t.antennas, indexing) * N * (N + 1) * K / (s2 * lambda);
    }
  }
  return b;
}

FimBlocks fim_blocks_bruteforce(std::span<const FimTerm> terms, const OfdmParams& ofdm, Real sigma_n,
                                ArrayIndexing indexing) {
  check_noise(sigma_n);
  const auto P = static_cast<Eigen::Index>(terms.size());
  const int K = ofdm.subcarriers;
  const int N = ofdm.symbols;
  const Real df = ofdm.subcarrier_spacing;
  const Real ts = ofdm.symbol_period;
  const Real lambda = ofdm.wavelength();
  const Real scale = 2.0 / (sigma_n * sigma_n);
  const Complex j(0.0, 1.0);

  FimBlocks b;
  b.psi_diag.setZero(P);
  b.omega_diag.setZero(P);
  b.upsilon_diag.setZero(P);
  for (Eigen::Index p = 0; p < P; ++p) {
    const auto& t = terms[static_cast<std::size_t>(p)];
    const int m_first = indexing == ArrayIndexing::OneBased ? 1 : 0;
    for (int mi = 0; mi < t.antennas; ++mi) {
      const int m = m_first + mi;
      for (int k = 1; k <= K; ++k) {
        for (int n = 1; n <= N; ++n) {
          const Real phase = kTwoPi * (t.doppler * n * ts - k * df * t.delay +
                                       m * t.global_angle * t.antenna_spacing / lambda);
          const Complex s = t.beta_magnitude * std::exp(j * phase);
          // Derivative terms as in the bound's derivation (symbol index n in the delay term).
          const Complex ds_tau = -j * kTwoPi * Real(n) * df * s;
          const Complex ds_psi = j * kTwoPi * Real(m) * t.antenna_spacing * s / lambda;
          b.psi_diag[p] += scale * std::real(std::conj(ds_tau) * ds_tau);
          b.omega_diag[p] += scale * std::real(std::conj(ds_psi) * ds_psi);
          b.upsilon_diag[p] += scale * std::real(std::conj(ds_tau) * ds_psi);
        }
      }
    }
  }
  return b;
}

std::vector<FimTerm> fim_terms(const ScenarioConfig& scenario, int target_index) {
  const auto& target = scenario.targets.at(static_cast<std::size_t>(target_index));
  std::vector<FimTerm> terms;
  for (int p = 0; p < scenario.ap_count(); ++p) {
    const auto& ap = scenario.aps[static_cast<std::size_t>(p)];
    FimTerm t;
    t.antennas = ap.antenna_count;
    t.antenna_spacing = ap.antenna_spacing;
    t.beta_magnitude = path_gain_amplitude(scenario, p, target_index);
    t.delay = candidate_delay(target.position, ap);
    t.doppler = doppler_shift(target, ap, scenario.ofdm);
    t.global_angle = global_virtual_angle(target.position, ap);
    terms.push_back(t);
  }
  return terms;
}

FimBlocks fim_blocks_closed_form(const ScenarioConfig& scenario, int target_index, Real sigma_n,
                                 ArrayIndexing indexing) {
  return fim_blocks_closed_form(fim_terms(scenario, target_index), scenario.ofdm, sigma_n, indexing);
}

FimBlocks fim_blocks_bruteforce(const ScenarioConfig& scenario, int target_index, Real sigma_n,
                                ArrayIndexing indexing) {
  return fim_blocks_bruteforce(fim_terms(scenario, target_index), scenario.ofdm, sigma_n, indexing);
}

RMatrix position_jacobian(const Vec2& target, std::span<const ApGeometry> aps, AngleJacobianForm form) {
  const auto P = static_cast<Eigen::Index>(aps.size());
  RMatrix theta(2, 2 * P);
  for (Eigen::Index p = 0; p < P; ++p) {
    const auto& ap = aps[static_cast<std::size_t>(p)];
    theta.col(p) = delay_jacobian(target, ap);
    theta.col(P + p) = angle_jacobian(target, ap, form);
  }
  return theta;
}

CrlbReport crlb_from_blocks(const FimBlocks& blocks, const RMatrix& jacobian) {
  const RMatrix f = blocks.assemble();
  if (jacobian.cols() != f.rows()) throw Error(ErrorCode::LengthMismatch, "Jacobian does not match the FIM");
  Mat2 info = jacobian * f * jacobian.transpose();
  info = (info + info.transpose()).eval() / 2;

  Eigen::SelfAdjointEigenSolver<Mat2> evd(info);
  const Real lo = evd.eigenvalues()[0];
  const Real hi = evd.eigenvalues()[1];
  if (!(lo > 0) || hi / lo > 1e12)
    throw Error(ErrorCode::SingularGeometry, "position information matrix is singular or ill-conditioned");

  CrlbReport r;
  r.covariance_bound = info.inverse();
  r.root_crlb = std::sqrt(r.covariance_bound.trace());
  return r;
}

CrlbReport crlb_position(const ScenarioConfig& scenario, int target_index, Real sigma_n,
                         const CrlbOptions& options) {
  check_noise(sigma_n);
  const auto terms = fim_terms(scenario, target_index);
  const FimBlocks blocks = fim_blocks_closed_form(terms, scenario.ofdm, sigma_n, options.indexing);
  const RMatrix theta = position_jacobian(scenario.targets[static_cast<std::size_t>(target_index)].position,
                                          scenario.aps, options.angle_form);
  CrlbReport r = crlb_from_blocks(blocks, theta);
  r.per_ap_snr_db.resize(static_cast<Eigen::Index>(terms.size()));
  for (std::size_t p = 0; p < terms.size(); ++p)
    r.per_ap_snr_db[static_cast<Eigen::Index>(p)] =
        power_to_db(terms[p].beta_magnitude * terms[p].beta_magnitude / (sigma_n * sigma_n));
  return r;
}

void write_crlb_csv_header(std::ostream& out) {
  out << "target_id,snr_db,root_crlb_m,bound_xx,bound_xy,bound_yy\n";
}

void write_crlb_csv_row(std::ostream& out, int target_id, Real snr_db, const CrlbReport& report) {
  const auto old = out.precision(17);
  out << target_id << ',' << snr_db << ',' << report.root_crlb << ',' << report.covariance_bound(0, 0) << ','
      << report.covariance_bound(0, 1) << ',' << report.covariance_bound(1, 1) << '\n';
  out.precision(old);
}

}  // namespace coopsense
