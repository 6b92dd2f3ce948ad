#include "coopsense/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "coopsense/parallel.hpp"

namespace coopsense {

namespace {

constexpr Real kNaN = std::numeric_limits<Real>::quiet_NaN();
constexpr const char* kSweepHeader = "axis_value,rmse_m,root_crlb_m,baseline_rmse_m,trials,failures";

std::vector<Vec2> positions(const ScenarioConfig& s) {
  std::vector<Vec2> out;
  for (const auto& t : s.targets) out.push_back(t.position);
  return out;
}

TrialRecord score(const LocalizationResult& result, std::span<const Vec2> truths, const SweepOptions& options) {
  TrialRecord rec;
  const auto assignment = match_estimates(result.estimates, truths);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    const Real err = (result.estimates[i] - truths[static_cast<std::size_t>(assignment[i])]).norm();
    rec.per_target_error.push_back(err);
    rec.assigned_pairs.emplace_back(static_cast<int>(i), assignment[i]);
  }
  // Outlier: even the closest estimate is far from every truth.
  Real closest = std::numeric_limits<Real>::infinity();
  for (const auto& e : result.estimates)
    for (const auto& t : truths) closest = std::min(closest, (e - t).norm());
  if (closest > options.outlier_radius) {
    rec.failed = true;
    rec.failure_reason = "outlier";
  }
  rec.converged = result.converged;
  return rec;
}

TrialRecord run_estimator(SteeringModel model, std::span<const EchoTensor> tensors, const ScenarioConfig& scenario,
                          const EstimatorConfig& cfg, const SweepOptions& options) {
  try {
    const LocalizationResult r = localize_with(model, tensors, scenario.aps, scenario.ofdm, cfg);
    return score(r, positions(scenario), options);
  } catch (const Error& e) {
    TrialRecord rec;
    rec.failed = true;
    rec.failure_reason = to_string(e.code());
    return rec;
  }
}

struct Aggregate {
  Real rmse = kNaN;
  int failures = 0;
};

Aggregate aggregate(const std::vector<TrialRecord>& records) {
  Aggregate a;
  Real sum_sq = 0.0;
  std::size_t count = 0;
  for (const auto& r : records) {
    if (r.failed) {
      ++a.failures;
      continue;
    }
    for (Real e : r.per_target_error) sum_sq += e * e;
    count += r.per_target_error.size();
  }
  if (count > 0) a.rmse = std::sqrt(sum_sq / static_cast<Real>(count));
  return a;
}

Real mean_root_crlb(const ScenarioConfig& scenario, Real sigma, const CrlbOptions& options) {
  if (!(sigma > 0) || scenario.targets.empty()) return kNaN;
  Real sum = 0.0;
  for (int l = 0; l < scenario.target_count(); ++l) {
    try {
      sum += crlb_position(scenario, l, sigma, options).root_crlb;
    } catch (const Error&) {
      return kNaN;
    }
  }
  return sum / scenario.target_count();
}

EstimatorConfig estimator_for(const ScenarioConfig& scenario, const SweepOptions& options) {
  EstimatorConfig cfg = options.estimator;
  cfg.roi = scenario.roi;
  cfg.targets = scenario.target_count();
  cfg.threads = 1;
  return cfg;
}

void fill_point(SweepResult& result, std::size_t i, std::vector<TrialOutcome>& outcomes) {
  auto& recs = result.records[i];
  for (auto& o : outcomes) recs.push_back(std::move(o.proposed));
  const Aggregate a = aggregate(recs);
  result.rmse[i] = a.rmse;
  result.failures[i] = a.failures;
  if (result.baseline_rmse) {
    auto& brecs = result.baseline_records[i];
    for (auto& o : outcomes) brecs.push_back(std::move(*o.baseline));
    const Aggregate b = aggregate(brecs);
    (*result.baseline_rmse)[i] = b.rmse;
    result.baseline_failures[i] = b.failures;
  }
}

SweepResult make_result(std::size_t points, const SweepOptions& options) {
  SweepResult r;
  r.trials_per_point = options.trials;
  r.rmse.assign(points, kNaN);
  r.root_crlb.assign(points, kNaN);
  r.failures.assign(points, 0);
  r.records.resize(points);
  if (options.baseline) {
    r.baseline_rmse = std::vector<Real>(points, kNaN);
    r.baseline_failures.assign(points, 0);
    r.baseline_records.resize(points);
  }
  return r;
}

}  // namespace

std::vector<int> match_estimates(std::span<const Vec2> estimates, std::span<const Vec2> truths) {
  if (estimates.size() != truths.size() || estimates.empty())
    throw Error(ErrorCode::LengthMismatch, "estimates and truths must have the same non-zero length");
  if (estimates.size() > 8) throw Error(ErrorCode::LengthMismatch, "exhaustive matching supports at most 8 targets");

  std::vector<int> perm(truths.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  Real best_cost = std::numeric_limits<Real>::infinity();
  do {
    Real cost = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i)
      cost += (estimates[i] - truths[static_cast<std::size_t>(perm[i])]).squaredNorm();
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

Real rmse(std::span<const Vec2> estimates, std::span<const Vec2> truths) {
  const auto assignment = match_estimates(estimates, truths);
  Real sum = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i)
    sum += (estimates[i] - truths[static_cast<std::size_t>(assignment[i])]).squaredNorm();
  return std::sqrt(sum / static_cast<Real>(assignment.size()));
}

std::vector<TargetTruth> place_targets(int count, const ScenarioConfig& scenario, const PlacementRule& rule,
                                       Rng& rng) {
  Rect region = rule.region.value_or(
      Rect{scenario.roi.min + Vec2::Constant(rule.margin), scenario.roi.max - Vec2::Constant(rule.margin)});
  std::uniform_real_distribution<Real> ux(region.min.x(), region.max.x());
  std::uniform_real_distribution<Real> uy(region.min.y(), region.max.y());
  std::uniform_real_distribution<Real> speed(rule.min_speed, rule.max_speed);
  std::uniform_real_distribution<Real> heading(0.0, kTwoPi);

  std::vector<TargetTruth> out;
  for (int l = 0; l < count; ++l) {
    bool placed = false;
    for (int attempt = 0; attempt < rule.max_attempts && !placed; ++attempt) {
      const Vec2 p(ux(rng), uy(rng));
      const bool clear = std::all_of(out.begin(), out.end(), [&](const TargetTruth& t) {
        return (t.position - p).norm() >= rule.min_separation;
      });
      if (!clear) continue;
      const Real v = speed(rng);
      const Real h = heading(rng);
      out.push_back(TargetTruth{p, v * Vec2(std::cos(h), std::sin(h)), rule.rcs});
      placed = true;
    }
    if (!placed)
      throw Error(ErrorCode::PlacementFailure,
                  "could not place target " + std::to_string(l + 1) + " with the requested separation");
  }
  return out;
}

TrialOutcome run_trial(const ScenarioConfig& scenario, Real noise_sigma, std::uint64_t trial_seed,
                       const SweepOptions& options) {
  std::vector<EchoTensor> tensors;
  tensors.reserve(scenario.aps.size());
  const Real sigma = options.noiseless ? 0.0 : noise_sigma;
  for (int p = 0; p < scenario.ap_count(); ++p) {
    Rng rng = make_rng(trial_seed, {static_cast<std::uint64_t>(p)});
    const ApChannel channel = draw_channel(scenario, p, rng);
    tensors.push_back(synthesize_echo(scenario, p, channel, sigma, rng));
  }
  const EstimatorConfig cfg = estimator_for(scenario, options);

  TrialOutcome out;
  out.proposed = run_estimator(SteeringModel::Eva, tensors, scenario, cfg, options);
  if (options.baseline) out.baseline = run_estimator(SteeringModel::DelayOnly, tensors, scenario, cfg, options);
  return out;
}

SweepResult run_snr_sweep(const ScenarioConfig& scenario, std::span<const Real> snr_db, const SweepOptions& options) {
  if (options.trials < 1) throw Error(ErrorCode::InvalidConfig, "a sweep needs at least one trial");
  scenario.validate();
  SweepResult result = make_result(snr_db.size(), options);
  result.axis.assign(snr_db.begin(), snr_db.end());

  for (std::size_t i = 0; i < snr_db.size(); ++i) {
    const Real sigma = noise_sigma_for_snr(scenario, snr_db[i]);
    result.root_crlb[i] = mean_root_crlb(scenario, sigma, options.crlb);

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(options.trials));
    parallel_for(outcomes.size(), options.threads, [&](std::size_t t) {
      const std::uint64_t seed = derive_seed(options.master_seed, {i, t});
      outcomes[t] = run_trial(scenario, sigma, seed, options);
      for (auto* rec : {&outcomes[t].proposed, outcomes[t].baseline ? &*outcomes[t].baseline : nullptr}) {
        if (!rec) continue;
        rec->trial_id = static_cast<int>(t);
        rec->seed = seed;
        rec->snr_db = snr_db[i];
      }
    });
    fill_point(result, i, outcomes);
  }
  return result;
}

SweepResult run_target_sweep(const ScenarioConfig& scenario_template, std::span<const int> target_counts,
                             Real snr_db, const SweepOptions& options) {
  if (options.trials < 1) throw Error(ErrorCode::InvalidConfig, "a sweep needs at least one trial");
  SweepResult result = make_result(target_counts.size(), options);
  for (int c : target_counts) result.axis.push_back(c);

  for (std::size_t i = 0; i < target_counts.size(); ++i) {
    const int count = target_counts[i];
    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(options.trials));
    std::vector<Real> crlbs(outcomes.size(), kNaN);
    parallel_for(outcomes.size(), options.threads, [&](std::size_t t) {
      const std::uint64_t seed = derive_seed(options.master_seed, {i, t});
      ScenarioConfig scenario = scenario_template;
      Rng placement_rng = make_rng(seed, {~std::uint64_t{0}});
      scenario.targets = place_targets(count, scenario, options.placement, placement_rng);
      const Real sigma = noise_sigma_for_snr(scenario, snr_db);
      crlbs[t] = mean_root_crlb(scenario, sigma, options.crlb);
      outcomes[t] = run_trial(scenario, sigma, seed, options);
      for (auto* rec : {&outcomes[t].proposed, outcomes[t].baseline ? &*outcomes[t].baseline : nullptr}) {
        if (!rec) continue;
        rec->trial_id = static_cast<int>(t);
        rec->seed = seed;
        rec->snr_db = snr_db;
      }
    });
    Real sum = 0.0;
    int n = 0;
    for (Real c : crlbs)
      if (std::isfinite(c)) {
        sum += c;
        ++n;
      }
    result.root_crlb[i] = n ? sum / n : kNaN;
    fill_point(result, i, outcomes);
  }
  return result;
}

void emit_csv(const SweepResult& result, std::ostream& out) {
  std::ostringstream buf;
  buf.imbue(std::locale::classic());
  buf << std::setprecision(17);
  buf << kSweepHeader << '\n';
  for (std::size_t i = 0; i < result.axis.size(); ++i) {
    buf << result.axis[i] << ',' << result.rmse[i] << ',' << result.root_crlb[i] << ',';
    if (result.baseline_rmse) buf << (*result.baseline_rmse)[i];
    buf << ',' << result.trials_per_point << ',' << result.failures[i] << '\n';
  }
  out << buf.str();
}

void emit_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  emit_csv(result, out);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

SweepResult parse_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader) throw Error(ErrorCode::IoError, "sweep CSV: bad header");
  SweepResult r;
  auto number = [](const std::string& s) { return s.empty() ? kNaN : std::stod(s); };
  bool has_baseline = false;
  std::vector<Real> baseline;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) f.push_back(cell);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw Error(ErrorCode::IoError, "sweep CSV: expected 6 columns");
    r.axis.push_back(number(f[0]));
    r.rmse.push_back(number(f[1]));
    r.root_crlb.push_back(number(f[2]));
    has_baseline = has_baseline || !f[3].empty();
    baseline.push_back(number(f[3]));
    r.trials_per_point = std::stoi(f[4]);
    r.failures.push_back(std::stoi(f[5]));
  }
  if (has_baseline) r.baseline_rmse = std::move(baseline);
  return r;
}

}  // namespace coopsense
