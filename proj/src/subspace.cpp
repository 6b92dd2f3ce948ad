#include "coopsense/subspace.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <unsupported/Eigen/KroneckerProduct>

#include "coopsense/parallel.hpp"

namespace coopsense {

UnfoldedData mode2_unfold(const EchoTensor& tensor) {
  const int M = tensor.antennas();
  const int K = tensor.subcarriers();
  const int N = tensor.symbols();
  UnfoldedData u;
  u.antennas = M;
  u.subcarriers = K;
  u.matrix = Eigen::Map<const CMatrix>(tensor.data().data(), Eigen::Index(M) * K, N);
  return u;
}

EchoTensor refold(const UnfoldedData& unfolded, int ap_index) {
  const auto N = static_cast<int>(unfolded.matrix.cols());
  EchoTensor t(ap_index, unfolded.antennas, N, unfolded.subcarriers);
  Eigen::Map<CMatrix>(t.data().data(), unfolded.matrix.rows(), N) = unfolded.matrix;
  return t;
}

CMatrix khatri_rao(const CMatrix& g, const CMatrix& a) {
  if (g.cols() != a.cols()) throw Error(ErrorCode::LengthMismatch, "Khatri-Rao factors differ in column count");
  CMatrix out(g.rows() * a.rows(), g.cols());
  for (Eigen::Index c = 0; c < g.cols(); ++c) out.col(c) = Eigen::kroneckerProduct(g.col(c), a.col(c));
  return out;
}

CMatrix sample_covariance(const CMatrix& snapshots) {
  const auto cols = static_cast<Real>(snapshots.cols());
  CMatrix r = snapshots * snapshots.adjoint() / cols;
  // Exact Hermitian symmetry for the eigensolver.
  return (r + r.adjoint()) / 2.0;
}

Real NoiseProjector::projection_energy(const CVector& w) const {
  const Real total = w.squaredNorm();
  if (signal_basis.cols() == 0) return total;
  return std::max(total - (signal_basis.adjoint() * w).squaredNorm(), 0.0);
}

Real NoiseProjector::projection_energy_direct(const CVector& w) const {
  return (basis.adjoint() * w).squaredNorm();
}

NoiseProjector noise_subspace(const CMatrix& covariance, int signal_dim, int ap_index) {
  const auto dim = static_cast<int>(covariance.rows());
  if (covariance.cols() != dim) throw Error(ErrorCode::InvalidConfig, "covariance must be square");
  if (signal_dim < 0 || signal_dim >= dim)
    throw Error(ErrorCode::InsufficientPeaks, "model order " + std::to_string(signal_dim) +
                                                  " leaves no noise subspace in dimension " + std::to_string(dim));

  Eigen::SelfAdjointEigenSolver<CMatrix> evd(covariance);
  if (evd.info() != Eigen::Success) throw Error(ErrorCode::InvalidConfig, "eigendecomposition failed");

  // Eigen sorts ascending; reverse so index 0 is the strongest component.
  const RVector eig = evd.eigenvalues().reverse();
  const CMatrix vecs = evd.eigenvectors().rowwise().reverse();

  NoiseProjector proj;
  proj.ap_index = ap_index;
  proj.eigenvalues = eig;
  proj.signal_eigenvalues = eig.head(signal_dim);
  proj.signal_basis = vecs.leftCols(signal_dim);
  proj.basis = vecs.rightCols(dim - signal_dim);
  if (signal_dim > 0) {
    const Real upper = eig[signal_dim - 1];
    const Real lower = eig[signal_dim];
    proj.ambiguous_split = !(upper > 0) || (upper - lower) < 1e-6 * std::abs(upper);
  }
  return proj;
}

CVector eva_steering(const Vec2& p, const ApGeometry& ap, const OfdmParams& ofdm) {
  const CVector g = steering_delay(candidate_delay(p, ap), ofdm.subcarriers, ofdm.subcarrier_spacing);
  const CVector a =
      steering_spatial(candidate_virtual_angle(p, ap), ap.antenna_count, ap.antenna_spacing, ofdm.wavelength());
  return Eigen::kroneckerProduct(g, a);
}

CVector model_steering(SteeringModel model, const Vec2& p, const ApGeometry& ap, const OfdmParams& ofdm) {
  switch (model) {
    case SteeringModel::Eva:
      return eva_steering(p, ap, ofdm);
    case SteeringModel::DelayOnly:
      return steering_delay(candidate_delay(p, ap), ofdm.subcarriers, ofdm.subcarrier_spacing);
  }
  throw Error(ErrorCode::InvalidConfig, "unknown steering model");
}

Real fused_spectrum(const Vec2& p, std::span<const NoiseProjector> projectors, std::span<const ApGeometry> aps,
                    const OfdmParams& ofdm, SteeringModel model) {
  if (projectors.empty()) throw Error(ErrorCode::InvalidConfig, "fused spectrum needs at least one projector");
  Real energy = 0.0;
  Real floor = 0.0;
  for (const auto& proj : projectors) {
    const auto& ap = aps[static_cast<std::size_t>(proj.ap_index)];
    energy += proj.projection_energy(model_steering(model, p, ap, ofdm));
    floor += 1e-12 * proj.dimension();
  }
  return 1.0 / (energy + floor);
}

SpectrumGrid spectrum_grid(std::span<const NoiseProjector> projectors, std::span<const ApGeometry> aps,
                           const OfdmParams& ofdm, const Rect& roi, Real resolution, SteeringModel model,
                           int threads) {
  if (!(resolution > 0)) throw Error(ErrorCode::InvalidConfig, "grid resolution must be positive");
  if (roi.width() < 0 || roi.height() < 0) throw Error(ErrorCode::InvalidConfig, "degenerate ROI");
  SpectrumGrid grid;
  grid.origin = roi.min;
  grid.spacing = resolution;
  grid.nx = static_cast<int>(std::floor(roi.width() / resolution + 1e-9)) + 1;
  grid.ny = static_cast<int>(std::floor(roi.height() / resolution + 1e-9)) + 1;
  grid.values.resize(grid.ny, grid.nx);

  parallel_for(static_cast<std::size_t>(grid.ny), threads, [&](std::size_t row) {
    const int iy = static_cast<int>(row);
    for (int ix = 0; ix < grid.nx; ++ix) {
      Real v = 0.0;
      try {
        v = fused_spectrum(grid.cell_center(ix, iy), projectors, aps, ofdm, model);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroRange) throw;
      }
      grid.values(iy, ix) = v;
    }
  });
  return grid;
}

void write_spectrum_csv(const SpectrumGrid& grid, std::ostream& out) {
  out << std::setprecision(17);
  out << "origin_x,origin_y,spacing,nx,ny\n";
  out << grid.origin.x() << ',' << grid.origin.y() << ',' << grid.spacing << ',' << grid.nx << ',' << grid.ny
      << '\n';
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      if (ix) out << ',';
      out << power_to_db(grid.values(iy, ix));
    }
    out << '\n';
  }
}

void write_spectrum_csv(const SpectrumGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  write_spectrum_csv(grid, out);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

SpectrumGrid read_spectrum_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "origin_x,origin_y,spacing,nx,ny")
    throw Error(ErrorCode::IoError, "spectrum CSV: bad header");
  SpectrumGrid grid;
  char c1, c2, c3, c4;
  if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "spectrum CSV: missing metadata");
  std::istringstream meta(line);
  Real ox, oy;
  meta >> ox >> c1 >> oy >> c2 >> grid.spacing >> c3 >> grid.nx >> c4 >> grid.ny;
  if (!meta) throw Error(ErrorCode::IoError, "spectrum CSV: bad metadata");
  grid.origin = Vec2(ox, oy);
  grid.values.resize(grid.ny, grid.nx);
  for (int iy = 0; iy < grid.ny; ++iy) {
    if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "spectrum CSV: truncated");
    std::istringstream row(line);
    std::string cell;
    for (int ix = 0; ix < grid.nx; ++ix) {
      if (!std::getline(row, cell, ',')) throw Error(ErrorCode::IoError, "spectrum CSV: short row");
      grid.values(iy, ix) = std::pow(10.0, std::stod(cell) / 10.0);
    }
  }
  return grid;
}

}  // namespace coopsense
