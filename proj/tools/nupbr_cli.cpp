// nupbr: simulate, certify and report market models that admit a strong
// arbitrage yet keep a local martingale deflator.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "nupbr/cli_report.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> paths;
  std::optional<std::string> output;
  unsigned threads = 0;
  bool quiet = false;
};

nupbr::ExperimentConfig resolve(const GlobalFlags& g) {
  if (g.config.empty()) throw CLI::RequiredError("--config");
  auto cfg = nupbr::load_config(g.config);
  if (g.seed) cfg.market.seed = *g.seed;
  if (g.paths) cfg.market.n_paths = *g.paths;
  if (g.output) cfg.output_dir = *g.output;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certify markets that satisfy NUPBR but not NFLVR"};
  app.require_subcommand(1);
  app.set_version_flag("--version", NUPBR_VERSION);

  GlobalFlags g;
  app.add_option("--config", g.config, "experiment configuration (YAML)");
  app.add_option("--seed", g.seed, "override the seed");
  app.add_option("--paths", g.paths, "override the number of paths");
  app.add_option("--output", g.output, "output directory");
  app.add_option("--threads", g.threads, "worker threads (0 = hardware concurrency)");
  app.add_flag("--quiet", g.quiet, "suppress text output");

  auto* simulate = app.add_subcommand("simulate", "simulate paths and write paths.csv");
  auto* verify = app.add_subcommand("verify", "run the full certification and write report.json");
  auto* price = app.add_subcommand("price", "superreplication price of 1{Y(T) > 0}");
  bool mc = false;
  price->add_flag("--mc", mc, "also estimate the price by Monte Carlo");
  auto* report = app.add_subcommand("report", "re-render a stored report.json");
  std::string report_path;
  report->add_option("report", report_path, "path to report.json")->required();
  for (auto* sub : {simulate, verify, price, report}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  nupbr::RunOptions opt;
  opt.workers = g.threads;
  opt.quiet = g.quiet;
  try {
    if (report->parsed()) return nupbr::run_report(report_path, g.output, opt);
    const auto cfg = resolve(g);
    if (simulate->parsed()) return nupbr::run_simulate(cfg, opt);
    if (verify->parsed()) return nupbr::run_verify(cfg, opt);
    if (price->parsed()) return nupbr::run_price(cfg, mc, opt);
  } catch (const nupbr::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return nupbr::kExitIo;
  } catch (const nupbr::SyntaxError& e) {
    std::cerr << "config syntax error: " << e.what() << "\n";
    return nupbr::kExitUsage;
  } catch (const nupbr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return nupbr::kExitUsage;
  } catch (const CLI::Error& e) {
    return app.exit(e);
  }
  return nupbr::kExitUsage;
}
