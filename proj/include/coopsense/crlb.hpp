#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "coopsense/core.hpp"
#include "coopsense/geometry.hpp"
#include "coopsense/scenario.hpp"

namespace coopsense {

/// Antenna index range in the Fisher sums.
enum class ArrayIndexing {
  OneBased,   // m = 1..M, the closed forms as printed
  ZeroBased,  // m = 0..M-1, matching steering_spatial()
};

/// Per-AP diagonals of the delay/angle Fisher blocks for one target:
/// F = [[diag(psi), diag(upsilon)], [diag(upsilon), diag(omega)]] over the
/// parameters [tau_1..tau_P, psi_g_1..psi_g_P].
struct FimBlocks {
  RVector psi_diag;      // 1/s^2
  RVector omega_diag;    // per unit virtual angle squared
  RVector upsilon_diag;  // 1/(s * unit angle)

  int ap_count() const { return static_cast<int>(psi_diag.size()); }
  RMatrix assemble() const;
};

/// Everything the bound needs about one AP/target pair.
struct FimTerm {
  int antennas = 1;
  Real antenna_spacing = 0.0;
  Real beta_magnitude = 0.0;
  // Only used by the brute-force route, which forms the actual samples.
  Real delay = 0.0;
  Real doppler = 0.0;
  Real global_angle = 0.0;
};

FimBlocks fim_blocks_closed_form(std::span<const FimTerm> terms, const OfdmParams& ofdm, Real sigma_n,
                                 ArrayIndexing indexing = ArrayIndexing::OneBased);
/// Enumerates s_{m,k,n} and its derivatives and accumulates
/// (2 / sigma^2) Re{ conj(ds/di) ds/dj } directly.
FimBlocks fim_blocks_bruteforce(std::span<const FimTerm> terms, const OfdmParams& ofdm, Real sigma_n,
                                ArrayIndexing indexing = ArrayIndexing::OneBased);

/// Per-AP terms for one scenario target with nominal gains |beta| = |alpha|.
std::vector<FimTerm> fim_terms(const ScenarioConfig& scenario, int target_index);

FimBlocks fim_blocks_closed_form(const ScenarioConfig& scenario, int target_index, Real sigma_n,
                                 ArrayIndexing indexing = ArrayIndexing::OneBased);
FimBlocks fim_blocks_bruteforce(const ScenarioConfig& scenario, int target_index, Real sigma_n,
                                ArrayIndexing indexing = ArrayIndexing::OneBased);

/// Theta = d[tau_1..tau_P, psi_1..psi_P] / d(x, y), 2 x 2P.
RMatrix position_jacobian(const Vec2& target, std::span<const ApGeometry> aps,
                          AngleJacobianForm form = AngleJacobianForm::Printed);

struct CrlbOptions {
  AngleJacobianForm angle_form = AngleJacobianForm::Printed;
  ArrayIndexing indexing = ArrayIndexing::OneBased;
};

struct CrlbReport {
  Mat2 covariance_bound{Mat2::Zero()};  // m^2
  Real root_crlb = 0.0;                 // m, sqrt(trace)
  RVector per_ap_snr_db;
};

/// (Theta F Theta^T)^-1 for one target. Gains and Doppler are treated as known.
CrlbReport crlb_position(const ScenarioConfig& scenario, int target_index, Real sigma_n,
                         const CrlbOptions& options = {});
CrlbReport crlb_from_blocks(const FimBlocks& blocks, const RMatrix& jacobian);

/// "target_id,snr_db,root_crlb_m,bound_xx,bound_xy,bound_yy" rows.
void write_crlb_csv_header(std::ostream& out);
void write_crlb_csv_row(std::ostream& out, int target_id, Real snr_db, const CrlbReport& report);

}  // namespace coopsense
