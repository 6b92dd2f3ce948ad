#include <doctest.h>

#include <algorithm>
#include <random>

#include "coopsense/estimator.hpp"
#include "coopsense/experiments.hpp"
#include "support.hpp"

using namespace coopsense;
using namespace testsupport;

namespace {

std::vector<EchoTensor> make_tensors(const ScenarioConfig& s, Real sigma, std::uint64_t seed) {
  std::vector<EchoTensor> out;
  for (int p = 0; p < s.ap_count(); ++p) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(p)});
    out.push_back(synthesize_echo(s, p, sigma, rng));
  }
  return out;
}

EstimatorConfig config_for(const ScenarioConfig& s) {
  EstimatorConfig cfg;
  cfg.roi = s.roi;
  cfg.targets = s.target_count();
  return cfg;
}

SpectrumGrid synthetic_grid(const std::function<Real(const Vec2&)>& f) {
  SpectrumGrid g;
  g.origin = Vec2(-50, -50);
  g.spacing = 1.0;
  g.nx = g.ny = 101;
  g.values.resize(101, 101);
  for (int iy = 0; iy < 101; ++iy)
    for (int ix = 0; ix < 101; ++ix) g.values(iy, ix) = f(g.cell_center(ix, iy));
  return g;
}

Real max_matched_error(const std::vector<Vec2>& est, const std::vector<Vec2>& truth) {
  const auto match = match_estimates(est, truth);
  Real worst = 0;
  for (std::size_t i = 0; i < est.size(); ++i)
    worst = std::max(worst, (est[i] - truth[static_cast<std::size_t>(match[i])]).norm());
  return worst;
}

std::vector<Vec2> truths(const ScenarioConfig& s) {
  std::vector<Vec2> out;
  for (const auto& t : s.targets) out.push_back(t.position);
  return out;
}

}  // namespace

TEST_CASE("EstimatorConfig validation") {
  EstimatorConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.peak_exclusion_radius = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.qn_tolerance = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.targets = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("find_peaks: one dominant cell") {
  SpectrumGrid g = synthetic_grid([](const Vec2&) { return 1.0; });
  g.values(70, 20) = 5.0;
  const auto p = find_peaks(g, 1, 3.0);
  REQUIRE(p.size() == 1);
  CHECK(p[0] == g.cell_center(20, 70));
}

TEST_CASE("find_peaks: two equal Gaussians in either tie order") {
  for (const Real sign : {1.0, -1.0}) {
    const Vec2 a(sign * 20, 10), b(-sign * 20, -15);
    const auto f = [&](const Vec2& p) {
      return std::exp(-(p - a).squaredNorm() / 50) + std::exp(-(p - b).squaredNorm() / 50);
    };
    const auto peaks = find_peaks(synthetic_grid(f), 2, 10.0);
    REQUIRE(peaks.size() == 2);
    CHECK(max_matched_error(peaks, {a, b}) < 1e-12);
  }
}

TEST_CASE("find_peaks: ordered by value and suppression-separated") {
  const Vec2 a(0, 0), b(30, 0), c(-30, 25);
  const auto f = [&](const Vec2& p) {
    return 3 * std::exp(-(p - a).squaredNorm() / 20) + 2 * std::exp(-(p - b).squaredNorm() / 20) +
           std::exp(-(p - c).squaredNorm() / 20);
  };
  const auto peaks = find_peaks(synthetic_grid(f), 3, 10.0);
  CHECK(peaks[0] == a);
  CHECK(peaks[1] == b);
  CHECK(peaks[2] == c);
}

TEST_CASE("find_peaks: exhausted grid") {
  SpectrumGrid g = synthetic_grid([](const Vec2& p) { return -p.norm(); });
  // An exclusion radius wider than the grid leaves nothing after the first pick.
  CHECK_THROWS_AS(find_peaks(g, 2, 200.0), Error);
  SpectrumGrid tiny;
  tiny.nx = tiny.ny = 1;
  tiny.values = RMatrix::Ones(1, 1);
  CHECK_THROWS_AS(find_peaks(tiny, 2, 1.0), Error);
}

TEST_CASE("refine_peak: stationary seed") {
  const Vec2 opt(2, -1);
  const SpectrumObjective bowl = [&](const Vec2& p) { return 1.0 / (1.0 + (p - opt).squaredNorm()); };
  EstimatorConfig cfg;
  const PeakRefinement r = refine_peak(opt, bowl, cfg);
  CHECK(r.iterations <= 1);
  CHECK((r.position - opt).norm() < 1e-9);
  CHECK(r.value >= r.seed_value);
}

TEST_CASE("refine_peak: analytic objective from 3 m away") {
  const Vec2 opt(12.3, -4.5);
  const SpectrumObjective f = [&](const Vec2& p) { return 1.0 / (1.0 + (p - opt).squaredNorm()); };
  EstimatorConfig cfg;
  for (const Vec2& dir : {Vec2(1, 0), Vec2(0.6, 0.8), Vec2(-0.8, 0.6)}) {
    const PeakRefinement r = refine_peak(opt + 3 * dir, f, cfg);
    CHECK(r.converged);
    CHECK((r.position - opt).norm() < 1e-3);
    CHECK(r.value >= r.seed_value);
  }
}

TEST_CASE("refine_peak: anisotropic objective and monotonicity") {
  const Vec2 opt(-7, 3);
  const SpectrumObjective f = [&](const Vec2& p) {
    const Vec2 d = p - opt;
    return 1.0 / (1e-3 + 9 * d.x() * d.x() + 0.2 * d.y() * d.y() + 0.5 * d.x() * d.y());
  };
  EstimatorConfig cfg;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<Real> u(-5, 5);
  for (int i = 0; i < 20; ++i) {
    const PeakRefinement r = refine_peak(opt + Vec2(u(rng), u(rng)), f, cfg);
    CHECK(r.value >= r.seed_value);
    CHECK((r.position - opt).norm() < 1e-2);
  }
  CHECK_THROWS_AS(refine_peak(opt, [](const Vec2&) { return 0.0; }, cfg), Error);
}

TEST_CASE("localize: noiseless reference scene") {
  const ScenarioConfig s = reference_scenario();
  const auto tensors = make_tensors(s, 0.0, 1);
  const LocalizationResult r = localize(tensors, s.aps, s.ofdm, config_for(s));
  REQUIRE(r.estimates.size() == 2);
  CHECK(max_matched_error(r.estimates, truths(s)) < 0.01);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(r.converged[i]);
    CHECK_FALSE(r.duplicate[i]);
    CHECK(r.spectrum_values[i] >= fused_spectrum(r.coarse_seeds[i], estimate_subspaces(tensors, 2), s.aps, s.ofdm));
  }
  CHECK((r.estimates[0] - r.estimates[1]).norm() >= 5.0);
}

TEST_CASE("localize: single AP, single target at 50 m") {
  ScenarioConfig s;
  s.aps = ap_ring(1, 50.0, 8, s.ofdm);
  s.targets.push_back({Vec2(0, 0), Vec2(5, 3), 0.01});
  s.roi = Rect{Vec2(-30, -30), Vec2(30, 30)};
  const auto tensors = make_tensors(s, 0.0, 2);
  const LocalizationResult r = localize(tensors, s.aps, s.ofdm, config_for(s));
  CHECK(r.estimates[0].norm() < 0.1);
}

TEST_CASE("localize: no signal is flagged") {
  ScenarioConfig s = reference_scenario();
  const ScenarioConfig silent = [&] {
    ScenarioConfig q = s;
    q.targets.clear();
    return q;
  }();
  const auto tensors = make_tensors(silent, 1e-6, 3);
  EstimatorConfig cfg = config_for(s);
  cfg.targets = 1;
  const LocalizationResult r = localize(tensors, s.aps, s.ofdm, cfg);
  CHECK((!r.converged[0] || r.low_confidence[0]));
}

TEST_CASE("delay-only baseline") {
  ScenarioConfig s = reference_scenario();
  s.targets.resize(1);
  const auto tensors = make_tensors(s, 0.0, 4);
  const LocalizationResult r = delay_only_localize(tensors, s.aps, s.ofdm, config_for(s));
  CHECK((r.estimates[0] - s.targets[0].position).norm() < 0.5);

  const CMatrix d = delay_snapshots(tensors[0]);
  CHECK(d.rows() == s.ofdm.subcarriers);
  CHECK(d.cols() == 8 * s.ofdm.symbols);
  CHECK(d(3, 2 * 8 + 5) == tensors[0](5, 2, 3));

  ScenarioConfig k1 = s;
  k1.ofdm.subcarriers = 1;
  const auto t1 = make_tensors(k1, 0.0, 4);
  CHECK_THROWS_AS(delay_only_localize(t1, k1.aps, k1.ofdm, config_for(k1)), Error);
}

TEST_CASE("proposed beats delay-only on median error at 0 dB" * doctest::timeout(300)) {
  ScenarioConfig s = reference_scenario();
  s.targets.resize(1);
  const Real sigma = noise_sigma_for_snr(s, 0.0);
  const EstimatorConfig cfg = config_for(s);
  std::vector<Real> prop, base;
  for (int t = 0; t < 100; ++t) {
    const auto tensors = make_tensors(s, sigma, derive_seed(77, {static_cast<std::uint64_t>(t)}));
    prop.push_back((localize(tensors, s.aps, s.ofdm, cfg).estimates[0] - s.targets[0].position).norm());
    base.push_back((delay_only_localize(tensors, s.aps, s.ofdm, cfg).estimates[0] - s.targets[0].position).norm());
  }
  std::nth_element(prop.begin(), prop.begin() + 50, prop.end());
  std::nth_element(base.begin(), base.begin() + 50, base.end());
  CHECK(prop[50] < base[50]);
}

TEST_CASE("localize: permutation equivariance and determinism") {
  const ScenarioConfig s = reference_scenario();
  ScenarioConfig swapped = s;
  std::swap(swapped.targets[0], swapped.targets[1]);
  // Same per-AP channel draws, relabelled.
  std::vector<EchoTensor> a, b;
  for (int p = 0; p < s.ap_count(); ++p) {
    Rng rng = make_rng(5, {static_cast<std::uint64_t>(p)});
    const ApChannel ch = draw_channel(s, p, rng);
    ApChannel sw{ch.beamformer, {ch.gains[1], ch.gains[0]}};
    Rng n1 = make_rng(6, {static_cast<std::uint64_t>(p)}), n2 = n1;
    a.push_back(synthesize_echo(s, p, ch, 0.05, n1));
    b.push_back(synthesize_echo(swapped, p, sw, 0.05, n2));
  }
  EstimatorConfig cfg = config_for(s);
  const LocalizationResult ra = localize(a, s.aps, s.ofdm, cfg);
  const LocalizationResult rb = localize(b, swapped.aps, swapped.ofdm, cfg);
  std::vector<Real> ea, eb;
  for (const auto& e : ra.estimates) ea.push_back((e - s.targets[0].position).norm());
  for (const auto& e : rb.estimates) eb.push_back((e - swapped.targets[1].position).norm());
  std::sort(ea.begin(), ea.end());
  std::sort(eb.begin(), eb.end());
  for (std::size_t i = 0; i < ea.size(); ++i) CHECK(ea[i] == doctest::Approx(eb[i]).epsilon(1e-9));

  cfg.threads = 4;
  const LocalizationResult rt = localize(a, s.aps, s.ofdm, cfg);
  for (std::size_t i = 0; i < ra.estimates.size(); ++i) {
    CHECK(rt.estimates[i] == ra.estimates[i]);
    CHECK(rt.spectrum_values[i] == ra.spectrum_values[i]);
  }
}

TEST_CASE("noiseless consistency over random two-target scenes" * doctest::timeout(600)) {
  std::mt19937_64 rng(2025);
  const ScenarioConfig base = reference_scenario();
  Rect inner{base.roi.min + Vec2(5, 5), base.roi.max - Vec2(5, 5)};
  PlacementRule rule;
  rule.region = inner;
  rule.min_separation = 30.0;
  Real worst = 0;
  for (int trial = 0; trial < 50; ++trial) {
    ScenarioConfig s = base;
    Rng place(derive_seed(31, {static_cast<std::uint64_t>(trial)}));
    s.targets = place_targets(2, s, rule, place);
    const auto tensors = make_tensors(s, 0.0, static_cast<std::uint64_t>(trial));
    const LocalizationResult r = localize(tensors, s.aps, s.ofdm, config_for(s));
    worst = std::max(worst, max_matched_error(r.estimates, truths(s)));
  }
  CHECK(worst < 0.1);
}
