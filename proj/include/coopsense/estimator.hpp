#pragma once

#include <functional>
#include <span>
#include <vector>

#include "coopsense/core.hpp"
#include "coopsense/signal.hpp"
#include "coopsense/subspace.hpp"

namespace coopsense {

struct EstimatorConfig {
  Rect roi{Vec2(-100.0, -100.0), Vec2(100.0, 100.0)};
  Real coarse_resolution = 2.0;      // m
  Real peak_exclusion_radius = 10.0; // m
  int targets = 1;                   // L, known model order
  Real qn_tolerance = 1e-4;          // m, stop when the accepted step is shorter
  int qn_max_iters = 200;
  Real fd_step = 1e-3;               // m, central-difference step
  int threads = 1;                   // grid evaluation workers

  void validate() const;
};

struct PeakRefinement {
  Vec2 position{Vec2::Zero()};
  Real value = 0.0;       // Psi at position
  Real seed_value = 0.0;  // Psi at the seed
  int iterations = 0;
  bool converged = false;
};

struct LocalizationResult {
  std::vector<Vec2> estimates;
  std::vector<Real> spectrum_values;
  std::vector<Vec2> coarse_seeds;
  std::vector<int> iterations;
  std::vector<bool> converged;
  /// Psi at the estimate is below 10x the coarse-grid median. Diagnostic only.
  std::vector<bool> low_confidence;
  /// Refined onto (within half the exclusion radius of) an earlier estimate.
  std::vector<bool> duplicate;
  Real grid_median = 0.0;
  /// Some AP's signal/noise eigenvalue split was ambiguous.
  bool ambiguous_subspace = false;
};

/// Greedy peak picking: repeatedly take the strongest remaining local maximum
/// and suppress every cell within `exclusion` of it. Falls back to plain
/// cells once local maxima run out. Positions come back by descending value.
std::vector<Vec2> find_peaks(const SpectrumGrid& grid, int count, Real exclusion);

using SpectrumObjective = std::function<Real(const Vec2&)>;

/// BFGS maximization of `objective` (a positive pseudospectrum) starting at
/// `seed`. Works on 1/Psi, which is a smooth projection energy, with
/// central-difference gradients. The result never has lower Psi than the seed.
PeakRefinement refine_peak(const Vec2& seed, const SpectrumObjective& objective, const EstimatorConfig& cfg);

/// Step 1 for every AP: unfold, covariance, EVD, noise subspace.
std::vector<NoiseProjector> estimate_subspaces(std::span<const EchoTensor> tensors, int signal_dim,
                                               SteeringModel model = SteeringModel::Eva);

/// K x (N M) rearrangement of one tensor: the subcarrier-only snapshot matrix.
CMatrix delay_snapshots(const EchoTensor& tensor);

/// Subspace fusion localization over the EVA arrays (coarse grid + refinement).
LocalizationResult localize(std::span<const EchoTensor> tensors, std::span<const ApGeometry> aps,
                            const OfdmParams& ofdm, const EstimatorConfig& cfg);

/// Same pipeline restricted to delay information (K-element subspaces).
LocalizationResult delay_only_localize(std::span<const EchoTensor> tensors, std::span<const ApGeometry> aps,
                                       const OfdmParams& ofdm, const EstimatorConfig& cfg);

/// Shared driver behind localize() and delay_only_localize().
LocalizationResult localize_with(SteeringModel model, std::span<const EchoTensor> tensors,
                                 std::span<const ApGeometry> aps, const OfdmParams& ofdm,
                                 const EstimatorConfig& cfg);

}  // namespace coopsense
