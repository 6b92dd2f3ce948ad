// coopsense: command-line front end for simulation, spectra, bounds and sweeps.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "coopsense/crlb.hpp"
#include "coopsense/estimator.hpp"
#include "coopsense/experiments.hpp"
#include "coopsense/scenario.hpp"
#include "coopsense/signal.hpp"
#include "coopsense/subspace.hpp"

namespace fs = std::filesystem;
using namespace coopsense;

namespace {

struct Globals {
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  bool full = false;
  std::string log_level = "info";
};

constexpr int kFullSubcarriers = 96;
constexpr int kFullTrials = 1000;

ScenarioConfig scenario_for(const std::string& path, const Globals& g) {
  ScenarioConfig s = path.empty() ? reference_scenario() : load_scenario(path);
  if (g.full) s.ofdm.subcarriers = kFullSubcarriers;
  s.validate();
  spdlog::debug("scenario: {} APs, {} targets, K={} N={}", s.ap_count(), s.target_count(), s.ofdm.subcarriers,
                s.ofdm.symbols);
  return s;
}

std::vector<Real> parse_list(const std::string& text) {
  std::vector<Real> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

// "a:step:b" (inclusive) or a comma list.
std::vector<Real> parse_range(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_list(text);
  std::vector<Real> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(std::stod(item));
  if (parts.size() != 3 || !(parts[1] > 0) || parts[2] < parts[0])
    throw Error(ErrorCode::InvalidConfig, "range must look like start:step:stop with step > 0");
  std::vector<Real> out;
  const auto steps = static_cast<long>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
  for (long i = 0; i <= steps; ++i) out.push_back(parts[0] + static_cast<Real>(i) * parts[1]);
  return out;
}

Rect parse_roi(const std::string& text) {
  const auto v = parse_list(text);
  if (v.size() != 4 || v[2] < v[0] || v[3] < v[1])
    throw Error(ErrorCode::InvalidConfig, "roi must be x0,y0,x1,y1 with x0 <= x1 and y0 <= y1");
  return Rect{Vec2(v[0], v[1]), Vec2(v[2], v[3])};
}

std::vector<EchoTensor> synthesize(const ScenarioConfig& s, std::optional<Real> snr_db, std::uint64_t seed) {
  const Real sigma = snr_db ? noise_sigma_for_snr(s, *snr_db) : 0.0;
  std::vector<EchoTensor> tensors;
  for (int p = 0; p < s.ap_count(); ++p) {
    Rng rng = make_rng(seed, {static_cast<std::uint64_t>(p)});
    const ApChannel channel = draw_channel(s, p, rng);
    tensors.push_back(synthesize_echo(s, p, channel, sigma, rng));
  }
  return tensors;
}

void write_tensor_csv(const EchoTensor& t, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << std::setprecision(17) << "m,n,k,re,im\n";
  for (int n = 0; n < t.symbols(); ++n)
    for (int k = 0; k < t.subcarriers(); ++k)
      for (int m = 0; m < t.antennas(); ++m)
        out << m << ',' << n + 1 << ',' << k + 1 << ',' << t(m, n, k).real() << ',' << t(m, n, k).imag() << '\n';
}

void print_estimates(const ScenarioConfig& s, const LocalizationResult& r, std::ostream& out) {
  std::vector<Vec2> truths;
  for (const auto& t : s.targets) truths.push_back(t.position);
  const auto match = match_estimates(r.estimates, truths);
  out << std::setprecision(10) << "estimate_id,x_m,y_m,truth_id,error_m,psi,converged,low_confidence\n";
  for (std::size_t i = 0; i < r.estimates.size(); ++i) {
    const auto& e = r.estimates[i];
    const int j = match[i];
    out << i << ',' << e.x() << ',' << e.y() << ',' << j << ','
        << (e - truths[static_cast<std::size_t>(j)]).norm() << ',' << r.spectrum_values[i] << ','
        << r.converged[i] << ',' << r.low_confidence[i] << '\n';
  }
}

SweepOptions sweep_options(const Globals& g, int trials, bool trials_given, std::uint64_t seed, bool baseline) {
  SweepOptions o;
  o.trials = (g.full && !trials_given) ? kFullTrials : trials;
  o.master_seed = seed;
  o.threads = g.threads;
  o.baseline = baseline;
  return o;
}

void write_sweep(const SweepResult& r, const std::string& out) {
  if (out.empty() || out == "-") {
    emit_csv(r, std::cout);
  } else {
    emit_csv(r, fs::path(out));
    spdlog::info("wrote {}", out);
  }
  for (std::size_t i = 0; i < r.axis.size(); ++i)
    spdlog::info("axis {}: rmse {:.4g} m, root CRLB {:.4g} m, {} failures", r.axis[i], r.rmse[i], r.root_crlb[i],
                 r.failures[i]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative ISAC localization: EVA subspace fusion, CRLB and Monte Carlo sweeps"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--full", g.full, "Full-scale settings: K=96 subcarriers and 1000 trials");
  app.add_option("--log", g.log_level, "trace, debug, info, warn, error, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
  app.fallthrough();

  std::string scenario_path;
  std::uint64_t seed = 1;
  std::string out;

  auto* sim = app.add_subcommand("simulate", "Synthesize echoes, localize, print estimates and errors");
  std::optional<Real> sim_snr;
  sim->add_option("--scenario", scenario_path, "Scenario JSON (default: built-in reference scene)");
  sim->add_option("--seed", seed, "Master seed");
  sim->add_option("--snr", sim_snr, "SNR in dB (omit for noiseless)");
  sim->add_option("--out", out, "Directory for tensor and estimate CSVs");

  auto* spec = app.add_subcommand("spectrum", "Dump the fused pseudospectrum on a grid (dB)");
  Real resolution = 2.0;
  std::string roi_text;
  std::optional<Real> spec_snr;
  spec->add_option("--scenario", scenario_path, "Scenario JSON");
  spec->add_option("--resolution", resolution, "Grid spacing in metres")->check(CLI::PositiveNumber);
  spec->add_option("--roi", roi_text, "x0,y0,x1,y1 in metres (default: scenario ROI)");
  spec->add_option("--snr", spec_snr, "SNR in dB (omit for noiseless)");
  spec->add_option("--seed", seed, "Master seed");
  spec->add_option("--out", out, "Output CSV")->required();

  auto* bound = app.add_subcommand("crlb", "Root CRLB per target");
  Real crlb_snr = 0.0;
  bound->add_option("--scenario", scenario_path, "Scenario JSON");
  bound->add_option("--snr", crlb_snr, "SNR in dB")->required();

  auto* ssnr = app.add_subcommand("sweep-snr", "RMSE and root CRLB versus SNR");
  std::string snr_range = "-5:5:15";
  int trials = 100;
  bool baseline = false;
  ssnr->add_option("--scenario", scenario_path, "Scenario JSON");
  ssnr->add_option("--snr", snr_range, "start:step:stop or a comma list, dB");
  auto* ssnr_trials = ssnr->add_option("--trials", trials, "Trials per point")->check(CLI::PositiveNumber);
  ssnr->add_flag("--baseline", baseline, "Also run the delay-only baseline on the same data");
  ssnr->add_option("--seed", seed, "Master seed");
  ssnr->add_option("--out", out, "Output CSV (default: stdout)");

  auto* stgt = app.add_subcommand("sweep-targets", "RMSE and root CRLB versus target count");
  std::string counts_text = "1,2,3";
  Real tgt_snr = 5.0;
  stgt->add_option("--scenario", scenario_path, "Scenario JSON (targets are replaced)");
  stgt->add_option("--counts", counts_text, "Comma-separated target counts");
  stgt->add_option("--snr", tgt_snr, "SNR in dB");
  auto* stgt_trials = stgt->add_option("--trials", trials, "Trials per point")->check(CLI::PositiveNumber);
  stgt->add_flag("--baseline", baseline, "Also run the delay-only baseline on the same data");
  stgt->add_option("--seed", seed, "Master seed");
  stgt->add_option("--out", out, "Output CSV (default: stdout)");

  CLI11_PARSE(app, argc, argv);
  // Logs go to stderr so CSV on stdout stays clean.
  spdlog::set_default_logger(spdlog::stderr_color_mt("coopsense"));
  spdlog::set_level(spdlog::level::from_str(g.log_level));
  spdlog::set_pattern("[%l] %v");

  try {
    if (*sim) {
      const ScenarioConfig s = scenario_for(scenario_path, g);
      const auto tensors = synthesize(s, sim_snr, seed);
      EstimatorConfig cfg;
      cfg.roi = s.roi;
      cfg.targets = s.target_count();
      cfg.threads = g.threads;
      const LocalizationResult r = localize(tensors, s.aps, s.ofdm, cfg);
      print_estimates(s, r, std::cout);
      if (!out.empty()) {
        fs::create_directories(out);
        for (const auto& t : tensors)
          write_tensor_csv(t, fs::path(out) / ("tensor_ap" + std::to_string(t.ap_index()) + ".csv"));
        std::ofstream est(fs::path(out) / "estimates.csv");
        if (!est) throw Error(ErrorCode::IoError, "cannot write estimates.csv");
        print_estimates(s, r, est);
        spdlog::info("wrote {} tensors and estimates.csv to {}", tensors.size(), out);
      }
    } else if (*spec) {
      const ScenarioConfig s = scenario_for(scenario_path, g);
      const Rect roi = roi_text.empty() ? s.roi : parse_roi(roi_text);
      const auto tensors = synthesize(s, spec_snr, seed);
      const auto projectors = estimate_subspaces(tensors, s.target_count());
      const SpectrumGrid grid = spectrum_grid(projectors, s.aps, s.ofdm, roi, resolution, SteeringModel::Eva, g.threads);
      write_spectrum_csv(grid, fs::path(out));
      spdlog::info("wrote {}x{} grid to {}", grid.nx, grid.ny, out);
    } else if (*bound) {
      const ScenarioConfig s = scenario_for(scenario_path, g);
      const Real sigma = noise_sigma_for_snr(s, crlb_snr);
      write_crlb_csv_header(std::cout);
      for (int l = 0; l < s.target_count(); ++l) write_crlb_csv_row(std::cout, l, crlb_snr, crlb_position(s, l, sigma));
    } else if (*ssnr) {
      const ScenarioConfig s = scenario_for(scenario_path, g);
      const auto snrs = parse_range(snr_range);
      const SweepOptions o = sweep_options(g, trials, ssnr_trials->count() > 0, seed, baseline);
      spdlog::info("SNR sweep: {} points x {} trials, {} threads", snrs.size(), o.trials, o.threads);
      write_sweep(run_snr_sweep(s, snrs, o), out);
    } else if (*stgt) {
      const ScenarioConfig s = scenario_for(scenario_path, g);
      std::vector<int> counts;
      for (Real c : parse_list(counts_text)) counts.push_back(static_cast<int>(c));
      const SweepOptions o = sweep_options(g, trials, stgt_trials->count() > 0, seed, baseline);
      spdlog::info("target sweep: {} points x {} trials, {} threads", counts.size(), o.trials, o.threads);
      write_sweep(run_target_sweep(s, counts, tgt_snr, o), out);
    }
  } catch (const Error& e) {
    spdlog::error("{}: {}", to_string(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
