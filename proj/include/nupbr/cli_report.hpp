#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "report.hpp"
#include "strategies.hpp"
#include "verifiers.hpp"

#ifndef NUPBR_VERSION
#define NUPBR_VERSION "0.1.0"
#endif

namespace nupbr {

enum ExitCode : int {
  kExitPass = 0,
  kExitUsage = 1,  // unreadable or invalid configuration
  kExitFail = 2,
  kExitSkip = 3,
  kExitIo = 4,
};

inline int exit_code_for(Verdict v) {
  switch (v) {
    case Verdict::Pass: return kExitPass;
    case Verdict::Fail: return kExitFail;
    case Verdict::Skip: return kExitSkip;
  }
  return kExitFail;
}

struct RunOptions {
  unsigned workers = 0;
  bool quiet = false;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  out << content;
  out.flush();
  if (!out) throw IoError("write failed for " + p.string());
}

inline std::filesystem::path prepare_output_dir(const std::string& dir) {
  std::filesystem::path p(dir);
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec || !std::filesystem::is_directory(p)) throw IoError("cannot create output directory " + dir);
  return p;
}

inline ExperimentConfig load_config(const std::filesystem::path& p) { return parse_config(read_file(p)); }

/// One row per path for paths.csv: Y(T), its weight, and the strategy gain.
inline std::vector<PathRow> simulate_rows(const MarketConfig& cfg, std::size_t n, unsigned workers) {
  cfg.validate();
  const PathwiseStrategy strat = make_pathwise_strategy(cfg);
  std::vector<PathRow> rows(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const ModelOutput out = simulate(cfg, i);
    double v0h = std::numeric_limits<double>::quiet_NaN();
    if (strat.kind != PathwiseStrategy::Kind::None) v0h = value_process(strat, out).gain();
    else if (const auto* g = out.y_grid()) v0h = integrate_delta_hedge(*g, cfg.horizon).gain();
    rows[i] = {i, out.y_terminal(), out.weight.w, v0h, stop_reason_of(out)};
  });
  return rows;
}

/// Writes paths.csv for the configured number of paths.
inline int run_simulate(const ExperimentConfig& cfg, const RunOptions& opt) {
  try {
    const auto dir = prepare_output_dir(cfg.output_dir);
    write_file(dir / "paths.csv", render_csv(simulate_rows(cfg.market, cfg.market.n_paths, opt.workers)));
    if (!opt.quiet) *opt.out << "wrote " << (dir / "paths.csv").string() << "\n";
    return kExitPass;
  } catch (const IoError& e) {
    *opt.err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

/// Full certification: report.json, paths.csv and the SVG plots. Exit status
/// follows the overall verdict.
inline int run_verify(const ExperimentConfig& cfg, const RunOptions& opt) {
  std::filesystem::path dir;
  try {
    dir = prepare_output_dir(cfg.output_dir);
  } catch (const IoError& e) {
    *opt.err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  const auto start = std::chrono::steady_clock::now();
  const CertificationRun run = run_full_certification(cfg.market, cfg.certification_options(opt.workers));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const Json doc = to_json(cfg, run, NUPBR_VERSION, seconds);
  const StoredReport stored = report_from_json(doc);
  try {
    if (cfg.wants("json")) write_file(dir / "report.json", doc.dump(2) + "\n");
    if (cfg.wants("csv")) write_file(dir / "paths.csv", render_csv(run.rows));
    if (cfg.wants("svg"))
      for (const auto& [name, svg] : render_svgs(stored)) write_file(dir / name, svg);
  } catch (const IoError& e) {
    *opt.err << "error: " << e.what() << "\n";
    return kExitIo;
  }
  if (!opt.quiet) *opt.out << render_text(stored);
  return exit_code_for(run.report.overall);
}

/// Superreplication price of 1{Y(T) > 0}: closed form where the market is
/// complete, else Monte Carlo bounds.
inline int run_price(const ExperimentConfig& cfg, bool monte_carlo, const RunOptions& opt) {
  const auto& m = cfg.market;
  std::optional<double> closed;
  try {
    closed = superreplication_price_complete(m);
  } catch (const ConfigError& e) {
    if (!opt.quiet) *opt.out << "closed form unavailable: " << e.what() << "\n";
  }
  if (closed && !opt.quiet) *opt.out << "price " << detail::fmt(*closed) << " (closed form)\n";
  if (monte_carlo || !closed) {
    std::vector<double> alive(m.n_paths);
    parallel_for(m.n_paths, opt.workers,
                 [&](std::size_t i) { alive[i] = simulate(m, i).y_terminal() > 0.0 ? 1.0 : 0.0; });
    Estimate e = estimate_mean(alive, cfg.confidence);
    e.lower_clamp = 0.0;
    e.upper_clamp = 1.0;
    if (!opt.quiet)
      *opt.out << "E^Q[1{Y(T)>0}] " << detail::fmt(e.mean) << " +/- " << detail::fmt(e.z() * e.std_error)
               << " (Monte Carlo, lower bound on the superreplication price)\n";
    const PathwiseStrategy s = make_pathwise_strategy(m);
    if (s.kind != PathwiseStrategy::Kind::None && !closed && !opt.quiet)
      *opt.out << "upper bound " << detail::fmt(s.x) << " (capital of the pathwise superreplicating strategy)\n";
  }
  return kExitPass;
}

/// Re-renders a stored report.json to text and SVG.
inline int run_report(const std::filesystem::path& report_path, const std::optional<std::string>& output_dir,
                      const RunOptions& opt) {
  try {
    const StoredReport s = report_from_json(Json::parse(read_file(report_path)));
    const std::string dir_name = output_dir ? *output_dir : report_path.parent_path().string();
    const auto dir = prepare_output_dir(dir_name.empty() ? "." : dir_name);
    for (const auto& [name, svg] : render_svgs(s)) write_file(dir / name, svg);
    if (!opt.quiet) *opt.out << render_text(s);
    return exit_code_for(s.report.overall);
  } catch (const IoError& e) {
    *opt.err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Json::exception& e) {
    *opt.err << "error: malformed report: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace nupbr
