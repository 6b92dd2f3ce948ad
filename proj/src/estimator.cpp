#include "coopsense/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coopsense {

void EstimatorConfig::validate() const {
  if (targets < 1) throw Error(ErrorCode::InvalidConfig, "estimator needs L >= 1");
  if (!(coarse_resolution > 0) || !(qn_tolerance > 0) || !(fd_step > 0) || qn_max_iters < 0)
    throw Error(ErrorCode::InvalidConfig, "estimator tolerances must be positive");
  if (peak_exclusion_radius < coarse_resolution)
    throw Error(ErrorCode::InvalidConfig, "peak exclusion radius must be at least the grid resolution");
  if (!(roi.width() >= 0) || !(roi.height() >= 0)) throw Error(ErrorCode::InvalidConfig, "degenerate ROI");
}

std::vector<Vec2> find_peaks(const SpectrumGrid& grid, int count, Real exclusion) {
  const int nx = grid.nx;
  const int ny = grid.ny;
  if (count < 1) return {};
  if (static_cast<long>(nx) * ny < count)
    throw Error(ErrorCode::InsufficientPeaks, "grid has fewer cells than requested peaks");

  auto is_local_max = [&](int ix, int iy) {
    const Real v = grid.values(iy, ix);
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int jx = ix + dx;
        const int jy = iy + dy;
        if ((dx || dy) && jx >= 0 && jx < nx && jy >= 0 && jy < ny && grid.values(jy, jx) > v) return false;
      }
    return true;
  };

  struct Cell {
    Real value;
    int ix, iy;
    bool local_max;
  };
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy)
    for (int ix = 0; ix < nx; ++ix) cells.push_back({grid.values(iy, ix), ix, iy, is_local_max(ix, iy)});
  // Local maxima first, then by value; ties broken by position for determinism.
  std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) {
    if (a.local_max != b.local_max) return a.local_max;
    return a.value > b.value;
  });

  std::vector<Vec2> peaks;
  for (const auto& c : cells) {
    if (static_cast<int>(peaks.size()) == count) break;
    const Vec2 p = grid.cell_center(c.ix, c.iy);
    const bool suppressed =
        std::any_of(peaks.begin(), peaks.end(), [&](const Vec2& q) { return (p - q).norm() <= exclusion; });
    if (!suppressed) peaks.push_back(p);
  }
  if (static_cast<int>(peaks.size()) < count)
    throw Error(ErrorCode::InsufficientPeaks, "suppression exhausted the grid after " +
                                                  std::to_string(peaks.size()) + " peaks");
  return peaks;
}

namespace {

Vec2 central_gradient(const std::function<Real(const Vec2&)>& f, const Vec2& x, Real h) {
  Vec2 g;
  for (int i = 0; i < 2; ++i) {
    Vec2 xp = x;
    Vec2 xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

}  // namespace

PeakRefinement refine_peak(const Vec2& seed, const SpectrumObjective& objective, const EstimatorConfig& cfg) {
  // Minimize the projection energy D = 1/Psi.
  const std::function<Real(const Vec2&)> energy = [&](const Vec2& p) {
    const Real v = objective(p);
    return v > 0 ? 1.0 / v : std::numeric_limits<Real>::infinity();
  };

  PeakRefinement out;
  out.seed_value = objective(seed);
  if (!(out.seed_value > 0) || !std::isfinite(out.seed_value))
    throw Error(ErrorCode::InvalidConfig, "objective is not finite and positive at the seed");

  constexpr Real kArmijo = 1e-4;
  const Real max_step = cfg.coarse_resolution;

  Vec2 x = seed;
  Real fx = 1.0 / out.seed_value;
  Vec2 g = central_gradient(energy, x, cfg.fd_step);
  Mat2 h_inv = Mat2::Identity();
  bool scaled = false;

  for (int it = 0; it < cfg.qn_max_iters; ++it) {
    if (!g.allFinite()) break;
    if (g.norm() == 0.0) {
      out.converged = true;
      break;
    }
    Vec2 dir = -h_inv * g;
    if (dir.dot(g) >= 0) {
      h_inv.setIdentity();
      scaled = false;
      dir = -g;
    }
    if (dir.norm() > max_step) dir *= max_step / dir.norm();

    Real alpha = 1.0;
    Vec2 x_new = x + dir;
    Real f_new = energy(x_new);
    while (!(f_new <= fx + kArmijo * alpha * g.dot(dir))) {
      alpha /= 2;
      if (alpha * dir.norm() < cfg.qn_tolerance * 1e-3) break;
      x_new = x + alpha * dir;
      f_new = energy(x_new);
    }
    if (!(f_new < fx)) {
      // No decrease along a descent direction at sub-tolerance step lengths.
      out.converged = true;
      break;
    }

    const Vec2 s = x_new - x;
    const Vec2 g_new = central_gradient(energy, x_new, cfg.fd_step);
    const Vec2 y = g_new - g;
    x = x_new;
    fx = f_new;
    g = g_new;
    out.iterations = it + 1;

    const Real sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (!scaled) {
        h_inv = Mat2::Identity() * (sy / y.squaredNorm());
        scaled = true;
      }
      const Real rho = 1.0 / sy;
      const Mat2 v = Mat2::Identity() - rho * s * y.transpose();
      h_inv = v * h_inv * v.transpose() + rho * s * s.transpose();
    }
    if (s.norm() < cfg.qn_tolerance) {
      out.converged = true;
      break;
    }
  }

  out.position = x;
  out.value = 1.0 / fx;
  return out;
}

CMatrix delay_snapshots(const EchoTensor& tensor) {
  const int M = tensor.antennas();
  const int N = tensor.symbols();
  const int K = tensor.subcarriers();
  CMatrix d(K, Eigen::Index(N) * M);
  for (int n = 0; n < N; ++n)
    for (int m = 0; m < M; ++m)
      for (int k = 0; k < K; ++k) d(k, Eigen::Index(n) * M + m) = tensor(m, n, k);
  return d;
}

std::vector<NoiseProjector> estimate_subspaces(std::span<const EchoTensor> tensors, int signal_dim,
                                               SteeringModel model) {
  std::vector<NoiseProjector> out;
  out.reserve(tensors.size());
  for (const auto& t : tensors) {
    const CMatrix cov = model == SteeringModel::Eva ? sample_covariance(mode2_unfold(t))
                                                    : sample_covariance(delay_snapshots(t));
    out.push_back(noise_subspace(cov, signal_dim, t.ap_index()));
  }
  return out;
}

LocalizationResult localize_with(SteeringModel model, std::span<const EchoTensor> tensors,
                                 std::span<const ApGeometry> aps, const OfdmParams& ofdm,
                                 const EstimatorConfig& cfg) {
  cfg.validate();
  if (tensors.empty()) throw Error(ErrorCode::InvalidConfig, "localize needs at least one AP tensor");
  for (const auto& t : tensors)
    if (t.ap_index() < 0 || t.ap_index() >= static_cast<int>(aps.size()))
      throw Error(ErrorCode::InvalidConfig, "tensor refers to an unknown AP");

  // Step 1: per-AP noise subspaces.
  const auto projectors = estimate_subspaces(tensors, cfg.targets, model);

  LocalizationResult result;
  result.ambiguous_subspace =
      std::any_of(projectors.begin(), projectors.end(), [](const auto& p) { return p.ambiguous_split; });

  // Step 2: coarse grid and peak picking.
  const SpectrumGrid grid = spectrum_grid(projectors, aps, ofdm, cfg.roi, cfg.coarse_resolution, model, cfg.threads);
  std::vector<Real> flat(grid.values.data(), grid.values.data() + grid.values.size());
  std::nth_element(flat.begin(), flat.begin() + static_cast<long>(flat.size() / 2), flat.end());
  result.grid_median = flat[flat.size() / 2];
  result.coarse_seeds = find_peaks(grid, cfg.targets, cfg.peak_exclusion_radius);

  // Step 3: refine every seed on the continuous spectrum.
  const SpectrumObjective objective = [&](const Vec2& p) {
    try {
      return fused_spectrum(p, projectors, aps, ofdm, model);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ZeroRange) return 0.0;
      throw;
    }
  };
  for (const auto& seed : result.coarse_seeds) {
    const PeakRefinement r = refine_peak(seed, objective, cfg);
    result.estimates.push_back(r.position);
    result.spectrum_values.push_back(r.value);
    result.iterations.push_back(r.iterations);
    result.converged.push_back(r.converged);
    result.low_confidence.push_back(r.value < 10.0 * result.grid_median);
    const bool dup = std::any_of(result.estimates.begin(), result.estimates.end() - 1, [&](const Vec2& q) {
      return (q - r.position).norm() < cfg.peak_exclusion_radius / 2;
    });
    result.duplicate.push_back(dup);
  }
  return result;
}

LocalizationResult localize(std::span<const EchoTensor> tensors, std::span<const ApGeometry> aps,
                            const OfdmParams& ofdm, const EstimatorConfig& cfg) {
  return localize_with(SteeringModel::Eva, tensors, aps, ofdm, cfg);
}

LocalizationResult delay_only_localize(std::span<const EchoTensor> tensors, std::span<const ApGeometry> aps,
                                       const OfdmParams& ofdm, const EstimatorConfig& cfg) {
  return localize_with(SteeringModel::DelayOnly, tensors, aps, ofdm, cfg);
}

}  // namespace coopsense
