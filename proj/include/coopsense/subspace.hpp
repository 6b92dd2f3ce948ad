#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "coopsense/core.hpp"
#include "coopsense/geometry.hpp"
#include "coopsense/scenario.hpp"
#include "coopsense/signal.hpp"

namespace coopsense {

/// Mode-2 unfolding: MK x N, row r = k * M + m, one column per OFDM symbol.
struct UnfoldedData {
  CMatrix matrix;
  int antennas = 0;
  int subcarriers = 0;
};

UnfoldedData mode2_unfold(const EchoTensor& tensor);
EchoTensor refold(const UnfoldedData& unfolded, int ap_index = 0);

/// Column-wise Kronecker product [g_1 (x) a_1, ..., g_L (x) a_L].
CMatrix khatri_rao(const CMatrix& g, const CMatrix& a);

/// (1/cols) Y Y^H, the EVA-element covariance.
CMatrix sample_covariance(const CMatrix& snapshots);
inline CMatrix sample_covariance(const UnfoldedData& u) { return sample_covariance(u.matrix); }

/// Noise subspace of one AP, from an EVD with eigenvalues in descending order.
struct NoiseProjector {
  int ap_index = 0;
  CMatrix basis;          // dim x (dim - L), orthonormal columns
  CMatrix signal_basis;   // dim x L
  RVector signal_eigenvalues;
  RVector eigenvalues;    // all, descending
  bool ambiguous_split = false;  // eigenvalues L and L+1 nearly equal

  int dimension() const { return static_cast<int>(basis.rows()); }

  /// w^H U_w U_w^H w, evaluated as ||w||^2 - ||U_s^H w||^2 (U_w U_w^H + U_s U_s^H = I).
  Real projection_energy(const CVector& w) const;
  /// Same quantity through the noise basis itself.
  Real projection_energy_direct(const CVector& w) const;
};

NoiseProjector noise_subspace(const CMatrix& covariance, int signal_dim, int ap_index = 0);

/// Which steering dictionary the fused spectrum scans.
enum class SteeringModel {
  Eva,        // g(tau) (x) a(psi), MK elements
  DelayOnly,  // g(tau), K elements
};

/// g(tau(p)) (x) a(psi(p)).
CVector eva_steering(const Vec2& p, const ApGeometry& ap, const OfdmParams& ofdm);
CVector model_steering(SteeringModel model, const Vec2& p, const ApGeometry& ap, const OfdmParams& ofdm);

/// Fused pseudospectrum 1 / (sum_p w_p^H U_p U_p^H w_p + eps), eps = 1e-12 * sum_p dim_p.
/// Each projector's ap_index selects its entry in `aps`.
Real fused_spectrum(const Vec2& p, std::span<const NoiseProjector> projectors, std::span<const ApGeometry> aps,
                    const OfdmParams& ofdm, SteeringModel model = SteeringModel::Eva);

struct SpectrumGrid {
  Vec2 origin{Vec2::Zero()};  // centre of cell (0, 0)
  Real spacing = 1.0;
  int nx = 0;
  int ny = 0;
  RMatrix values;  // ny x nx, values(iy, ix)

  Vec2 cell_center(int ix, int iy) const { return origin + spacing * Vec2(ix, iy); }
  /// True when p lies in the closed cell around (ix, iy).
  bool cell_contains(int ix, int iy, const Vec2& p) const {
    const Vec2 d = (p - cell_center(ix, iy)).cwiseAbs();
    return d.x() <= spacing / 2 && d.y() <= spacing / 2;
  }
};

/// Lattice of cell centres from roi.min in steps of `resolution`, covering the ROI.
SpectrumGrid spectrum_grid(std::span<const NoiseProjector> projectors, std::span<const ApGeometry> aps,
                           const OfdmParams& ofdm, const Rect& roi, Real resolution,
                           SteeringModel model = SteeringModel::Eva, int threads = 1);

/// Header line "origin_x,origin_y,spacing,nx,ny", one metadata line, then ny
/// rows of nx comma-separated values 10 log10(Psi), row iy = 0 first.
void write_spectrum_csv(const SpectrumGrid& grid, std::ostream& out);
void write_spectrum_csv(const SpectrumGrid& grid, const std::filesystem::path& path);
/// Reads the format above; the values come back in linear scale.
SpectrumGrid read_spectrum_csv(std::istream& in);

}  // namespace coopsense
