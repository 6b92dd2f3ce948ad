#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coopsense/core.hpp"
#include "coopsense/crlb.hpp"
#include "coopsense/estimator.hpp"
#include "coopsense/scenario.hpp"
#include "coopsense/signal.hpp"

namespace coopsense {

/// Minimum total-squared-distance matching; result[i] is the truth index
/// assigned to estimate i. Exhaustive search, so L is capped at 8.
std::vector<int> match_estimates(std::span<const Vec2> estimates, std::span<const Vec2> truths);

/// sqrt(1/L sum ||est - truth||^2) after match_estimates().
Real rmse(std::span<const Vec2> estimates, std::span<const Vec2> truths);

struct TrialRecord {
  int trial_id = 0;
  std::uint64_t seed = 0;
  Real snr_db = 0.0;
  std::vector<Real> per_target_error;               // indexed by estimate
  std::vector<std::pair<int, int>> assigned_pairs;  // (estimate, truth)
  std::vector<bool> converged;
  bool failed = false;
  std::string failure_reason;
};

/// Random target layout used by the target-count sweep.
struct PlacementRule {
  std::optional<Rect> region;   // default: scenario ROI shrunk by `margin`
  Real margin = 10.0;           // m
  Real min_separation = 40.0;   // m
  Real min_speed = 5.0;         // m/s
  Real max_speed = 40.0;        // m/s
  Real rcs = 0.01;              // m^2
  int max_attempts = 1000;
};

/// Draw `count` targets under `rule`; throws PlacementFailure when a target
/// cannot be placed within max_attempts draws.
std::vector<TargetTruth> place_targets(int count, const ScenarioConfig& scenario, const PlacementRule& rule,
                                       Rng& rng);

struct SweepOptions {
  int trials = 100;
  std::uint64_t master_seed = 1;
  int threads = 1;
  bool baseline = false;
  /// Trials whose closest estimate is farther than this from every truth fail.
  Real outlier_radius = 50.0;
  /// Synthesize without noise (the RMSE then reflects estimator bias only).
  bool noiseless = false;
  /// Grid/refinement settings; roi and targets are filled from the scenario.
  EstimatorConfig estimator;
  CrlbOptions crlb;
  PlacementRule placement;
};

struct SweepResult {
  std::vector<Real> axis;       // SNR in dB, or target counts
  std::vector<Real> rmse;       // m, NaN when every trial failed
  std::vector<Real> root_crlb;  // m, mean across targets (and placements)
  int trials_per_point = 0;
  std::vector<int> failures;
  std::optional<std::vector<Real>> baseline_rmse;
  std::vector<int> baseline_failures;
  std::vector<std::vector<TrialRecord>> records;           // [axis][trial]
  std::vector<std::vector<TrialRecord>> baseline_records;  // empty without baseline
};

/// One Monte Carlo trial on a fixed scenario: tensors from the (trial_seed, ap)
/// streams, then the proposed estimator and optionally the delay-only one on
/// the same data.
struct TrialOutcome {
  TrialRecord proposed;
  std::optional<TrialRecord> baseline;
};
TrialOutcome run_trial(const ScenarioConfig& scenario, Real noise_sigma, std::uint64_t trial_seed,
                       const SweepOptions& options);

SweepResult run_snr_sweep(const ScenarioConfig& scenario, std::span<const Real> snr_db, const SweepOptions& options);

SweepResult run_target_sweep(const ScenarioConfig& scenario_template, std::span<const int> target_counts,
                             Real snr_db, const SweepOptions& options);

/// "axis_value,rmse_m,root_crlb_m,baseline_rmse_m,trials,failures", 17
/// significant digits, empty baseline column when no baseline was run.
void emit_csv(const SweepResult& result, std::ostream& out);
void emit_csv(const SweepResult& result, const std::filesystem::path& path);
/// Reads emit_csv() output back (records are not serialized).
SweepResult parse_sweep_csv(std::istream& in);

}  // namespace coopsense
