#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "verifiers.hpp"

namespace nupbr {

using Json = nlohmann::ordered_json;

/// Field names of paths.csv, in column order.
inline constexpr const char* kCsvHeader = "path_id,y_T,weight,v0h_T,stop_reason";

namespace detail {

inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline double number_or_nan(const Json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

inline std::string fmt(double v, const char* spec = "%.17g") {
  if (!std::isfinite(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const Estimate& e) {
  const bool clamped = std::isfinite(e.lower_clamp) || std::isfinite(e.upper_clamp);
  return Json{{"mean", e.mean},
              {"std_error", e.std_error},
              {"n", e.n},
              {"confidence", e.confidence},
              {"lower", e.lower()},
              {"upper", e.upper()},
              {"probability", clamped}};
}

inline Estimate estimate_from_json(const Json& j) {
  Estimate e{j.at("mean").get<double>(), j.at("std_error").get<double>(), j.at("n").get<std::size_t>(),
             j.at("confidence").get<double>()};
  if (j.value("probability", false)) {
    e.lower_clamp = 0.0;
    e.upper_clamp = 1.0;
  }
  return e;
}

inline Json to_json(const CheckResult& c) {
  Json probes = Json::array();
  for (const auto& p : c.probes)
    probes.push_back(Json{{"time", p.time}, {"estimate", to_json(p.estimate)}, {"rejected", p.rejected}});
  return Json{{"name", c.name},
              {"verdict", std::string(to_string(c.verdict))},
              {"clause", c.clause},
              {"detail", c.detail},
              {"estimate", c.estimate ? to_json(*c.estimate) : Json(nullptr)},
              {"statistic", c.statistic ? detail::number_or_null(*c.statistic) : Json(nullptr)},
              {"probes", probes}};
}

inline CheckResult check_from_json(const Json& j) {
  CheckResult c;
  c.name = j.at("name").get<std::string>();
  const auto v = verdict_from_string(j.at("verdict").get<std::string>());
  if (!v) throw std::runtime_error("report.json: unknown verdict in check " + c.name);
  c.verdict = *v;
  c.clause = j.at("clause").get<std::string>();
  c.detail = j.at("detail").get<std::string>();
  if (!j.at("estimate").is_null()) c.estimate = estimate_from_json(j.at("estimate"));
  if (!j.at("statistic").is_null()) c.statistic = j.at("statistic").get<double>();
  for (const auto& p : j.at("probes"))
    c.probes.push_back({p.at("time").get<double>(), estimate_from_json(p.at("estimate")), p.at("rejected").get<bool>()});
  return c;
}

inline Json to_json(const ExperimentConfig& cfg) {
  const auto& m = cfg.market;
  Json law = nullptr;
  if (m.jump_law) {
    Json atoms = Json::array();
    for (const auto& a : m.jump_law->atoms) atoms.push_back(Json::array({a.size, a.probability}));
    law = Json{{"atoms", atoms}, {"f_min", m.jump_law->f_min}, {"f_max", m.jump_law->f_max}};
  }
  return Json{{"model", std::string(to_string(m.model))},
              {"base_model", std::string(to_string(m.base_model))},
              {"lambda", m.lambda},
              {"T", m.horizon.T},
              {"grid_points", m.horizon.grid_points},
              {"n_paths", m.n_paths},
              {"seed", m.seed},
              {"d", m.d},
              {"compensated", m.compensated},
              {"confidence", cfg.confidence},
              {"probe_times", cfg.probe_times},
              {"jump_law", law},
              {"hedge", Json{{"paths", cfg.hedge_paths}, {"steps", cfg.hedge_steps}}},
              {"output", Json{{"dir", cfg.output_dir}, {"formats", cfg.report_formats}}}};
}

inline ExperimentConfig config_from_json(const Json& j) {
  ExperimentConfig cfg;
  auto& m = cfg.market;
  m.model = model_from_string(j.at("model").get<std::string>()).value();
  m.base_model = model_from_string(j.at("base_model").get<std::string>()).value();
  m.lambda = j.at("lambda").get<double>();
  m.horizon.T = j.at("T").get<double>();
  m.horizon.grid_points = j.at("grid_points").get<std::size_t>();
  m.n_paths = j.at("n_paths").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.d = j.at("d").get<std::size_t>();
  m.compensated = j.at("compensated").get<bool>();
  cfg.confidence = j.at("confidence").get<double>();
  cfg.probe_times = j.at("probe_times").get<std::vector<double>>();
  if (!j.at("jump_law").is_null()) {
    JumpLaw law;
    for (const auto& a : j.at("jump_law").at("atoms")) law.atoms.push_back({a.at(0).get<double>(), a.at(1).get<double>()});
    law.f_min = j.at("jump_law").at("f_min").get<double>();
    law.f_max = j.at("jump_law").at("f_max").get<double>();
    m.jump_law = law;
  }
  cfg.hedge_paths = j.at("hedge").at("paths").get<std::size_t>();
  cfg.hedge_steps = j.at("hedge").at("steps").get<std::vector<std::size_t>>();
  cfg.output_dir = j.at("output").at("dir").get<std::string>();
  cfg.report_formats = j.at("output").at("formats").get<std::vector<std::string>>();
  return cfg;
}

inline Json to_json(const PlotData& p) {
  Json traj = Json::array();
  for (const auto& t : p.trajectories) {
    Json v = Json::array();
    for (double x : t.v) v.push_back(detail::number_or_null(x));
    traj.push_back(Json{{"path_id", t.path_id}, {"weight", t.weight}, {"y", t.y}, {"v", v}});
  }
  return Json{{"times", p.times},
              {"trajectories", traj},
              {"probe_times", p.probe_times},
              {"q_mean", p.q_mean},
              {"p_mean", p.p_mean},
              {"gap_n", p.gap_n},
              {"gap_mean", p.gap_mean},
              {"gap_se", p.gap_se}};
}

inline PlotData plots_from_json(const Json& j) {
  PlotData p;
  p.times = j.at("times").get<std::vector<double>>();
  for (const auto& t : j.at("trajectories")) {
    Trajectory tr{t.at("path_id").get<std::size_t>(), t.at("weight").get<double>(),
                  t.at("y").get<std::vector<double>>(), {}};
    for (const auto& v : t.at("v")) tr.v.push_back(detail::number_or_nan(v));
    p.trajectories.push_back(std::move(tr));
  }
  p.probe_times = j.at("probe_times").get<std::vector<double>>();
  p.q_mean = j.at("q_mean").get<std::vector<double>>();
  p.p_mean = j.at("p_mean").get<std::vector<double>>();
  p.gap_n = j.at("gap_n").get<std::vector<std::size_t>>();
  p.gap_mean = j.at("gap_mean").get<std::vector<double>>();
  p.gap_se = j.at("gap_se").get<std::vector<double>>();
  return p;
}

/// report.json document: {version, config, seed, overall, conclusions,
/// checks[], plots, timings}. Everything except `timings` is a deterministic
/// function of (config, seed).
inline Json to_json(const ExperimentConfig& cfg, const CertificationRun& run, const std::string& version,
                    double seconds) {
  Json checks = Json::array();
  for (const auto& c : run.report.checks) checks.push_back(to_json(c));
  return Json{{"version", version},
              {"config", to_json(cfg)},
              {"seed", cfg.market.seed},
              {"overall", std::string(to_string(run.report.overall))},
              {"conclusions",
               Json{{"nflvr_fails", run.nflvr_fails},
                    {"nupbr_certified", run.nupbr_certified},
                    {"initial_capital", run.initial_capital ? Json(*run.initial_capital) : Json(nullptr)}}},
              {"checks", checks},
              {"plots", to_json(run.plots)},
              {"timings", Json{{"total_seconds", seconds}}}};
}

struct StoredReport {
  ExperimentConfig config;
  CertificationReport report;
  PlotData plots;
  std::string version;
  bool nflvr_fails = false;
  bool nupbr_certified = false;
  std::optional<double> initial_capital;
};

inline StoredReport report_from_json(const Json& j) {
  StoredReport s;
  s.version = j.at("version").get<std::string>();
  s.config = config_from_json(j.at("config"));
  for (const auto& c : j.at("checks")) s.report.checks.push_back(check_from_json(c));
  const auto overall = verdict_from_string(j.at("overall").get<std::string>());
  if (!overall) throw std::runtime_error("report.json: unknown overall verdict");
  s.report.overall = *overall;
  s.plots = plots_from_json(j.at("plots"));
  const auto& c = j.at("conclusions");
  s.nflvr_fails = c.at("nflvr_fails").get<bool>();
  s.nupbr_certified = c.at("nupbr_certified").get<bool>();
  if (!c.at("initial_capital").is_null()) s.initial_capital = c.at("initial_capital").get<double>();
  return s;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string render_csv(const std::vector<PathRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.path_id) + "," + detail::fmt(r.y_T) + "," + detail::fmt(r.weight) + "," +
           detail::fmt(r.v0h_T) + "," + r.stop_reason + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text

inline std::string render_text(const StoredReport& s) {
  std::ostringstream os;
  const auto& m = s.config.market;
  os << "model " << to_string(m.model) << ", T = " << m.horizon.T << ", n_paths = " << m.n_paths
     << ", seed = " << m.seed << "\n";
  for (const auto& c : s.report.checks) {
    char line[512];
    std::snprintf(line, sizeof line, "  [%-4s] %-34s %s", std::string(to_string(c.verdict)).c_str(), c.name.c_str(),
                  c.detail.c_str());
    os << line << "\n";
  }
  os << "NFLVR fails: " << (s.nflvr_fails ? "yes" : "no") << "; NUPBR certified: " << (s.nupbr_certified ? "yes" : "no");
  if (s.initial_capital) os << "; x = " << detail::fmt(*s.initial_capital, "%.6f");
  os << "\noverall: " << to_string(s.report.overall) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

class SvgChart {
 public:
  SvgChart(std::string title, double x0, double x1, double y0, double y1, bool log_x = false)
      : title_(std::move(title)), log_x_(log_x), x0_(tx(x0)), x1_(tx(x1)), y0_(y0), y1_(y1) {
    if (x1_ <= x0_) x1_ = x0_ + 1.0;
    if (y1_ <= y0_) y1_ = y0_ + 1.0;
  }

  void polyline(const std::vector<double>& xs, const std::vector<double>& ys, const std::string& colour,
                double width = 1.0, double opacity = 1.0) {
    std::string pts;
    for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      pts += fmt(px(xs[i]), "%.2f") + "," + fmt(py(ys[i]), "%.2f") + " ";
    }
    if (!pts.empty()) pts.pop_back();
    body_ += "  <polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"" + fmt(width, "%.2f") +
             "\" stroke-opacity=\"" + fmt(opacity, "%.3f") + "\" points=\"" + pts + "\"/>\n";
  }

  void hline(double y, const std::string& colour) {
    body_ += "  <line x1=\"" + fmt(kLeft, "%.2f") + "\" x2=\"" + fmt(kW - kRight, "%.2f") + "\" y1=\"" +
             fmt(py(y), "%.2f") + "\" y2=\"" + fmt(py(y), "%.2f") + "\" stroke=\"" + colour +
             "\" stroke-dasharray=\"4 3\"/>\n";
  }

  void legend(const std::string& text, const std::string& colour) {
    const double y = kTop + 14.0 * static_cast<double>(++legends_);
    body_ += "  <text x=\"" + fmt(kW - kRight - 150.0, "%.2f") + "\" y=\"" + fmt(y, "%.2f") +
             "\" font-size=\"11\" fill=\"" + colour + "\">" + text + "</text>\n";
  }

  std::string str(const std::string& x_label, const std::string& y_label) const {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
    s += "  <rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
    s += "  <text x=\"320\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + title_ + "</text>\n";
    s += "  <rect x=\"" + fmt(kLeft, "%.2f") + "\" y=\"" + fmt(kTop, "%.2f") + "\" width=\"" +
         fmt(kW - kLeft - kRight, "%.2f") + "\" height=\"" + fmt(kH - kTop - kBottom, "%.2f") +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    const std::string xl = log_x_ ? "1e" + fmt(x0_, "%.0f") : fmt(x0_, "%.3g");
    const std::string xr = log_x_ ? "1e" + fmt(x1_, "%.0f") : fmt(x1_, "%.3g");
    s += "  <text x=\"" + fmt(kLeft, "%.2f") + "\" y=\"" + fmt(kH - kBottom + 15.0, "%.2f") + "\" font-size=\"11\">" +
         xl + "</text>\n";
    s += "  <text x=\"" + fmt(kW - kRight, "%.2f") + "\" y=\"" + fmt(kH - kBottom + 15.0, "%.2f") +
         "\" font-size=\"11\" text-anchor=\"end\">" + xr + "</text>\n";
    s += "  <text x=\"" + fmt(kLeft - 5.0, "%.2f") + "\" y=\"" + fmt(kH - kBottom, "%.2f") +
         "\" font-size=\"11\" text-anchor=\"end\">" + fmt(y0_, "%.3g") + "</text>\n";
    s += "  <text x=\"" + fmt(kLeft - 5.0, "%.2f") + "\" y=\"" + fmt(kTop + 10.0, "%.2f") +
         "\" font-size=\"11\" text-anchor=\"end\">" + fmt(y1_, "%.3g") + "</text>\n";
    s += "  <text x=\"320\" y=\"392\" text-anchor=\"middle\" font-size=\"12\">" + x_label + "</text>\n";
    s += "  <text x=\"14\" y=\"200\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 14 200)\">" +
         y_label + "</text>\n";
    return s + body_ + "</svg>\n";
  }

 private:
  static constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 20, kTop = 30, kBottom = 40;
  double tx(double x) const { return log_x_ ? std::log10(std::max(x, 1e-300)) : x; }
  double px(double x) const { return kLeft + (tx(x) - x0_) / (x1_ - x0_) * (kW - kLeft - kRight); }
  double py(double y) const { return kH - kBottom - (y - y0_) / (y1_ - y0_) * (kH - kTop - kBottom); }

  std::string title_;
  bool log_x_;
  double x0_, x1_, y0_, y1_;
  std::string body_;
  int legends_ = 0;
};

inline std::pair<double, double> value_range(const std::vector<std::vector<double>>& series, double lo, double hi) {
  for (const auto& s : series)
    for (double v : s)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  return {lo, hi};
}

}  // namespace detail

/// SVG plots keyed by file name, rendered only from the stored report so that
/// `verify` and `report` produce identical files.
inline std::map<std::string, std::string> render_svgs(const StoredReport& s) {
  std::map<std::string, std::string> out;
  const auto& p = s.plots;
  const double T = s.config.market.horizon.T;
  {
    std::vector<std::vector<double>> ys;
    for (const auto& t : p.trajectories) ys.push_back(t.y);
    ys.push_back(p.q_mean);
    ys.push_back(p.p_mean);
    auto [lo, hi] = detail::value_range(ys, 0.0, 1.0);
    detail::SvgChart c("Sample paths of Y under Q with Q- and P-means", 0.0, T, lo, hi * 1.05);
    for (const auto& t : p.trajectories) c.polyline(p.times, t.y, "#888888", 1.0, t.weight > 0.0 ? 0.8 : 0.3);
    c.polyline(p.probe_times, p.q_mean, "#1f77b4", 2.0);
    c.polyline(p.probe_times, p.p_mean, "#d62728", 2.0);
    c.legend("E^Q[Y(t)]", "#1f77b4");
    c.legend("E^P[Y(t)]", "#d62728");
    c.legend("sample paths", "#888888");
    out["trajectories.svg"] = c.str("t", "Y(t)");
  }
  {
    std::vector<std::vector<double>> vs;
    for (const auto& t : p.trajectories) vs.push_back(t.v);
    auto [lo, hi] = detail::value_range(vs, 0.0, 1.0);
    detail::SvgChart c("Value process V^{x,H}(t) of the superreplicating strategy", 0.0, T, lo - 0.05, hi + 0.05);
    c.hline(0.0, "#000000");
    c.hline(1.0, "#2ca02c");
    for (const auto& t : p.trajectories)
      if (!t.v.empty()) c.polyline(p.times, t.v, t.weight > 0.0 ? "#2ca02c" : "#d62728", 1.0, 0.8);
    c.legend("Y(T) > 0", "#2ca02c");
    c.legend("Y(T) = 0", "#d62728");
    out["value_fan.svg"] = c.str("t", "V(t)");
  }
  {
    std::vector<double> n, up, dn;
    for (std::size_t k = 0; k < p.gap_n.size(); ++k) {
      n.push_back(static_cast<double>(p.gap_n[k]));
      up.push_back(p.gap_mean[k] + 2.576 * p.gap_se[k]);
      dn.push_back(p.gap_mean[k] - 2.576 * p.gap_se[k]);
    }
    auto [lo, hi] = detail::value_range({up, dn}, 0.5, 1.0);
    detail::SvgChart c("Reweighted E^P[1/Y(T)] against sample size", n.empty() ? 1.0 : n.front(),
                       n.empty() ? 10.0 : n.back(), lo - 0.02, hi + 0.02, true);
    c.hline(1.0, "#000000");
    c.polyline(n, p.gap_mean, "#1f77b4", 2.0);
    c.polyline(n, up, "#1f77b4", 1.0, 0.5);
    c.polyline(n, dn, "#1f77b4", 1.0, 0.5);
    c.legend("estimate +/- 99% band", "#1f77b4");
    c.legend("1/Y(0) = 1", "#000000");
    out["gap_convergence.svg"] = c.str("N (paths)", "E^P[1/Y(T)]");
  }
  return out;
}

}  // namespace nupbr
