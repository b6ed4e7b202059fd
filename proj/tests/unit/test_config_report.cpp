#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "nupbr/cli_report.hpp"

using namespace nupbr;
namespace fs = std::filesystem;

namespace {

const char* kExample3 = R"(model: compound_poisson
lambda: 1.0
T: 1.0
n_paths: 4000
seed: 9
jump_law:
  atoms: [[0.9, 0.5], [1.1, 0.5]]
hedge: {paths: 100, steps: [10, 100]}
output: {dir: out, formats: [json, csv]}
)";

std::string config_error_key(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nupbr_unit_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Config, ParsesFullExample) {
  const ExperimentConfig cfg = parse_config(kExample3);
  EXPECT_EQ(cfg.market.model, ModelKind::CompoundPoisson);
  ASSERT_TRUE(cfg.market.jump_law.has_value());
  EXPECT_DOUBLE_EQ(cfg.market.jump_law->f_min, 0.9);
  EXPECT_DOUBLE_EQ(cfg.market.jump_law->f_max, 1.1);
  EXPECT_EQ(cfg.market.n_paths, 4000u);
  EXPECT_EQ(cfg.market.seed, 9u);
  EXPECT_EQ(cfg.hedge_paths, 100u);
  EXPECT_EQ(cfg.hedge_steps, (std::vector<std::size_t>{10, 100}));
  EXPECT_EQ(cfg.output_dir, "out");
  EXPECT_FALSE(cfg.wants("svg"));
  EXPECT_EQ(cfg.probe_times.size(), 10u);
  EXPECT_DOUBLE_EQ(cfg.probe_times.back(), 1.0);
}

TEST(Config, AtomsAsMaps) {
  const ExperimentConfig cfg = parse_config(
      "model: compound_poisson\nlambda: 2\nT: 1\nn_paths: 10\nseed: 1\n"
      "jump_law:\n  atoms:\n    - {size: 0.8, probability: 0.5}\n    - {size: 1.2, probability: 0.5}\n");
  EXPECT_DOUBLE_EQ(cfg.market.jump_law->atoms[1].size, 1.2);
}

TEST(Config, MissingRequiredKeys) {
  EXPECT_EQ(config_error_key("model: compensated_poisson\nT: 1\nn_paths: 10\nseed: 1\n"), "lambda");
  EXPECT_EQ(config_error_key("model: stopped_brownian\nT: 1\nseed: 1\n"), "n_paths");
}

TEST(Config, UnknownKeysReportPath) {
  EXPECT_EQ(config_error_key("model: stopped_brownian\nT: 1\nn_paths: 10\nseed: 1\nsigma: 2\n"), "sigma");
  EXPECT_EQ(config_error_key("model: stopped_brownian\nT: 1\nn_paths: 10\nseed: 1\nhedge: {pathz: 3}\n"),
            "hedge.pathz");
}

TEST(Config, WrongTypeReportsKey) {
  EXPECT_EQ(config_error_key("model: stopped_brownian\nT: soon\nn_paths: 10\nseed: 1\n"), "T");
}

TEST(Config, InvalidContent) {
  EXPECT_EQ(config_error_key("model: heston\nT: 1\nn_paths: 10\nseed: 1\n"), "model");
  EXPECT_EQ(config_error_key("model: compensated_poisson\nlambda: 0.5\nT: 1\nn_paths: 10\nseed: 1\n"), "lambda");
  EXPECT_EQ(config_error_key("model: compound_poisson\nlambda: 1\nT: 1\nn_paths: 10\nseed: 1\n"
                             "jump_law: {atoms: [[0.9, 0.5], [1.3, 0.5]]}\n"),
            "jump_law.atoms");
  EXPECT_EQ(config_error_key("model: stopped_brownian\nT: 1\nn_paths: 10\nseed: 1\nprobe_times: [0.5, 0.2]\n"),
            "probe_times[1]");
  EXPECT_EQ(config_error_key("model: stopped_brownian\nT: 1\nn_paths: 10\nseed: 1\noutput: {formats: [png]}\n"),
            "output.formats");
}

TEST(Config, SyntaxErrorHasLocation) {
  try {
    parse_config("model: stopped_brownian\nT: [1, 2\nseed: 1\n");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_GE(e.line(), 2);
  }
}

TEST(Config, JsonRoundTrip) {
  const ExperimentConfig a = parse_config(kExample3);
  const ExperimentConfig b = config_from_json(to_json(a));
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Report, EstimateRoundTrip) {
  Estimate e{0.25, 0.01, 1000, 0.95, 0.0, 1.0};
  const Estimate r = estimate_from_json(to_json(e));
  EXPECT_EQ(r.mean, e.mean);
  EXPECT_EQ(r.std_error, e.std_error);
  EXPECT_EQ(r.n, e.n);
  EXPECT_EQ(r.confidence, e.confidence);
  EXPECT_EQ(r.lower(), e.lower());
}

TEST(Report, CsvFormat) {
  const std::vector<PathRow> rows{{0, 1.5, 1.5, 0.25, "jumped"},
                                  {1, 0.0, 0.0, std::nan(""), "hit_zero"}};
  EXPECT_EQ(render_csv(rows), std::string(kCsvHeader) + "\n0,1.5,1.5,0.25,jumped\n1,0,0,,hit_zero\n");
}

TEST(Report, DocumentRoundTripKeepsVerdicts) {
  ExperimentConfig cfg = parse_config(kExample3);
  const CertificationRun run = run_full_certification(cfg.market, cfg.certification_options(1));
  const Json doc = to_json(cfg, run, "test", 0.0);
  const StoredReport s = report_from_json(doc);
  EXPECT_EQ(s.report.overall, run.report.overall);
  ASSERT_EQ(s.report.checks.size(), run.report.checks.size());
  for (std::size_t i = 0; i < s.report.checks.size(); ++i) {
    EXPECT_EQ(s.report.checks[i].name, run.report.checks[i].name);
    EXPECT_EQ(s.report.checks[i].verdict, run.report.checks[i].verdict);
  }
  EXPECT_EQ(s.initial_capital, run.initial_capital);
  EXPECT_EQ(doc.at("seed").get<std::uint64_t>(), 9u);
  EXPECT_TRUE(doc.contains("timings"));
  const auto svgs = render_svgs(s);
  EXPECT_EQ(svgs.size(), 3u);
  for (const auto& [name, svg] : svgs) EXPECT_EQ(svg.rfind("<svg", 0), 0u) << name;
}

TEST(Cli, VerifyThenReportReproducesPlots) {
  ExperimentConfig cfg = parse_config(kExample3);
  const fs::path dir = scratch("verify");
  cfg.output_dir = dir.string();
  cfg.report_formats = {"json", "csv", "svg"};
  std::ostringstream out, err;
  RunOptions opt{1, false, &out, &err};
  EXPECT_EQ(run_verify(cfg, opt), kExitPass) << err.str();
  EXPECT_NE(out.str().find("overall: pass"), std::string::npos);
  ASSERT_TRUE(fs::exists(dir / "report.json"));
  ASSERT_TRUE(fs::exists(dir / "paths.csv"));
  const std::string before = read_file(dir / "value_fan.svg");
  fs::remove(dir / "value_fan.svg");
  const fs::path again = scratch("report");
  EXPECT_EQ(run_report(dir / "report.json", again.string(), opt), kExitPass);
  EXPECT_EQ(read_file(again / "value_fan.svg"), before);
}

TEST(Cli, SimulateWritesOneRowPerPath) {
  ExperimentConfig cfg = parse_config(kExample3);
  cfg.market.n_paths = 25;
  const fs::path dir = scratch("simulate");
  cfg.output_dir = dir.string();
  std::ostringstream out, err;
  EXPECT_EQ(run_simulate(cfg, {1, true, &out, &err}), kExitPass);
  const std::string csv = read_file(dir / "paths.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 26);
  EXPECT_TRUE(out.str().empty());
}

TEST(Cli, PriceReportsClosedFormOrBounds) {
  ExperimentConfig cfg = parse_config(kExample3);
  std::ostringstream out, err;
  EXPECT_EQ(run_price(cfg, false, {1, false, &out, &err}), kExitPass);
  EXPECT_NE(out.str().find("closed form unavailable"), std::string::npos);
  EXPECT_NE(out.str().find("upper bound 0.7298"), std::string::npos);
  cfg.market.jump_law = JumpLaw::degenerate();
  std::ostringstream out2;
  EXPECT_EQ(run_price(cfg, false, {1, false, &out2, &err}), kExitPass);
  EXPECT_NE(out2.str().find("price 0.63212"), std::string::npos);
}

TEST(Cli, UnreadableInputsAreIoErrors) {
  EXPECT_THROW(load_config("/nonexistent/config.yaml"), IoError);
  std::ostringstream out, err;
  EXPECT_EQ(run_report("/nonexistent/report.json", std::nullopt, {1, true, &out, &err}), kExitIo);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(exit_code_for(Verdict::Pass), 0);
  EXPECT_EQ(exit_code_for(Verdict::Fail), 2);
  EXPECT_EQ(exit_code_for(Verdict::Skip), 3);
}
