#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "core_types.hpp"
#include "measure_change.hpp"
#include "model_zoo.hpp"
#include "parallel.hpp"
#include "stats.hpp"
#include "strategies.hpp"

namespace nupbr {

enum class Verdict { Pass, Fail, Skip };

inline std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "pass";
    case Verdict::Fail: return "fail";
    case Verdict::Skip: return "skip";
  }
  return "?";
}

inline std::optional<Verdict> verdict_from_string(std::string_view s) {
  for (auto v : {Verdict::Pass, Verdict::Fail, Verdict::Skip})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

struct ProbeStat {
  double time;
  Estimate estimate;
  bool rejected;
};

struct CheckResult {
  std::string name;
  Verdict verdict = Verdict::Skip;
  std::string clause;  // which property of the construction this check certifies
  std::string detail;
  std::optional<Estimate> estimate;
  std::optional<double> statistic;
  std::vector<ProbeStat> probes;
};

struct CertificationReport {
  std::vector<CheckResult> checks;
  Verdict overall = Verdict::Skip;

  const CheckResult* find(std::string_view name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
};

/// Fail if any check fails; otherwise skip if a check was skipped because its
/// precondition failed; otherwise pass.
inline Verdict overall_verdict(const std::vector<CheckResult>& checks) {
  bool skipped = false;
  for (const auto& c : checks) {
    if (c.verdict == Verdict::Fail) return Verdict::Fail;
    if (c.verdict == Verdict::Skip) skipped = true;
  }
  return skipped ? Verdict::Skip : Verdict::Pass;
}

inline double bonferroni_two_sided_z(double confidence, std::size_t k) {
  return normal_quantile(1.0 - (1.0 - confidence) / (2.0 * static_cast<double>(std::max<std::size_t>(k, 1))));
}

inline double bonferroni_one_sided_z(double confidence, std::size_t k) {
  return normal_quantile(1.0 - (1.0 - confidence) / static_cast<double>(std::max<std::size_t>(k, 1)));
}

// ---------------------------------------------------------------------------

/// Two-sided z-tests of E^Q[X(t)] = target at every probe time, Bonferroni
/// adjusted. `values[k][i]` is path i at probe k.
inline CheckResult test_q_martingale(const std::vector<std::vector<double>>& values,
                                     std::span<const double> probe_times, double confidence = 0.99,
                                     double target = 1.0, std::string name = "q_martingale") {
  CheckResult r;
  r.name = std::move(name);
  r.clause = "Y (and each traded asset) is a Q-martingale";
  if (values.size() != probe_times.size()) throw std::invalid_argument("test_q_martingale: probe mismatch");
  if (values.empty() || values.front().size() < 1000) {
    r.verdict = Verdict::Skip;
    r.detail = "needs at least 1000 paths";
    return r;
  }
  const double z = bonferroni_two_sided_z(confidence, values.size());
  bool any = false;
  double worst = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    const Estimate e = estimate_mean(values[k], confidence);
    const double dev = std::abs(e.mean - target);
    // the 1e-12 slack absorbs rounding in sums of (nearly) constant values
    const bool rejected = dev > z * e.std_error + 1e-12;
    any = any || rejected;
    if (e.std_error > 0.0) worst = std::max(worst, dev / e.std_error);
    r.probes.push_back({probe_times[k], e, rejected});
  }
  r.statistic = worst;
  r.verdict = any ? Verdict::Fail : Verdict::Pass;
  r.detail = any ? "mean departs from " + std::to_string(target) + " at some probe time"
                 : "no probe rejects at Bonferroni z = " + std::to_string(z);
  return r;
}

/// E^P[1/Y(T)] via reweighting; strictness of the local martingale 1/Y is
/// certified when the upper confidence bound stays below 1/Y(0) = 1. Also
/// requires 1/Y(T) to be finite and positive on every positive-weight path.
inline CheckResult test_strict_local_martingale_gap(std::span<const double> y_terminal,
                                                    std::span<const double> weights, double confidence = 0.99) {
  CheckResult r;
  r.name = "strict_local_martingale_gap";
  r.clause = "1/Y is a nonnegative strict local martingale under P with P(1/Y(T) > 0) = 1";
  WeightedSample s;
  s.functional_values.resize(y_terminal.size());
  s.weights.assign(weights.begin(), weights.end());
  std::size_t bad = 0;
  for (std::size_t i = 0; i < y_terminal.size(); ++i) {
    if (weights[i] > 0.0) {
      const double inv = 1.0 / y_terminal[i];
      if (!(std::isfinite(inv) && inv > 0.0)) ++bad;
      s.functional_values[i] = inv;
    }
  }
  const Estimate e = p_expectation(s, confidence);
  r.estimate = e;
  r.statistic = 1.0 - e.mean;
  const bool strict = e.upper() < 1.0;
  r.verdict = (strict && bad == 0) ? Verdict::Pass : Verdict::Fail;
  if (bad > 0)
    r.detail = std::to_string(bad) + " positive-weight paths with 1/Y(T) not finite and positive";
  else
    r.detail = strict ? "upper bound " + std::to_string(e.upper()) + " < 1"
                      : "interval reaches 1: no strict local martingale gap";
  return r;
}

/// One-sided test that E^P[S(t)/Y(t)] <= S(0) at every probe time, the
/// supermartingale consequence of S/Y being a nonnegative P-local martingale.
inline CheckResult test_deflated_supermartingale(const std::vector<std::vector<double>>& s_values,
                                                 const std::vector<std::vector<double>>& y_values,
                                                 std::span<const double> weights, double s0,
                                                 std::span<const double> probe_times, double confidence = 0.99,
                                                 std::string name = "deflated_supermartingale") {
  CheckResult r;
  r.name = std::move(name);
  r.clause = "S/Y is a P-local martingale, so 1/Y is a local martingale deflator";
  if (s_values.size() != probe_times.size() || y_values.size() != probe_times.size())
    throw std::invalid_argument("test_deflated_supermartingale: probe mismatch");
  const double z = bonferroni_one_sided_z(confidence, probe_times.size());
  bool any = false;
  double worst = -kNever;
  for (std::size_t k = 0; k < probe_times.size(); ++k) {
    WeightedSample ws;
    ws.weights.assign(weights.begin(), weights.end());
    ws.functional_values.resize(weights.size(), 0.0);
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const double sv = s_values[k][i];
      if (sv < 0.0) throw std::invalid_argument("test_deflated_supermartingale: negative asset value");
      if (weights[i] == 0.0) continue;
      if (!(y_values[k][i] > 0.0))
        throw std::logic_error("test_deflated_supermartingale: Y(t) = 0 on a positive-weight path");
      ws.functional_values[i] = sv / y_values[k][i];
    }
    const Estimate e = p_expectation(ws, confidence);
    const double excess = e.mean - s0;
    const bool rejected = excess > z * e.std_error + 1e-12;
    any = any || rejected;
    worst = std::max(worst, excess);
    r.probes.push_back({probe_times[k], e, rejected});
  }
  r.statistic = worst;
  r.verdict = any ? Verdict::Fail : Verdict::Pass;
  r.detail = any ? "deflated mean exceeds S(0) at some probe time" : "no probe exceeds S(0)";
  return r;
}

/// Strong arbitrage under P: x < 1, the strategy is x-admissible, and the gain
/// V^{0,H}(T) is at least 1 - x on every positive-weight path.
inline CheckResult certify_strong_arbitrage(std::span<const double> gains, double x, std::span<const double> weights,
                                            bool admissible) {
  CheckResult r;
  r.name = "strong_arbitrage";
  r.clause = "the superreplicating strategy is a strong arbitrage under P, so NFLVR fails";
  std::size_t violations = 0;
  double min_margin = kNever;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    min_margin = std::min(min_margin, gains[i]);
    if (gains[i] < 1.0 - x - 1e-9) ++violations;
  }
  r.statistic = min_margin;
  const bool ok = x < 1.0 && admissible && violations == 0 && min_margin > 0.0;
  r.verdict = ok ? Verdict::Pass : Verdict::Fail;
  if (!(x < 1.0)) r.detail = "initial capital not below 1";
  else if (!admissible) r.detail = "strategy not admissible";
  else if (violations > 0) r.detail = std::to_string(violations) + " positive-weight paths with gain below 1 - x";
  else r.detail = "minimum gain " + std::to_string(min_margin) + " >= 1 - x = " + std::to_string(1.0 - x);
  return r;
}

/// Under Q the same strategy loses money with positive probability.
inline CheckResult test_loss_under_q(std::span<const double> gains, double confidence = 0.99) {
  CheckResult r;
  r.name = "no_arbitrage_under_q";
  r.clause = "the strategy is not an arbitrage before the measure change";
  std::vector<double> loss(gains.size());
  for (std::size_t i = 0; i < gains.size(); ++i) loss[i] = gains[i] < 0.0 ? 1.0 : 0.0;
  Estimate e = estimate_mean(loss, confidence);
  e.lower_clamp = 0.0;
  e.upper_clamp = 1.0;
  r.estimate = e;
  r.verdict = e.lower() > 0.0 ? Verdict::Pass : Verdict::Fail;
  r.detail = "Q-fraction of losing paths " + std::to_string(e.mean);
  return r;
}

// ---------------------------------------------------------------------------
// Pipeline

struct CertificationOptions {
  double confidence = 0.99;
  std::vector<double> probe_times;  // empty: 10 equally spaced points on [0, T]
  unsigned workers = 0;
  std::size_t hedge_paths = 200000;
  std::vector<std::size_t> hedge_steps{100, 1000, 10000};
  std::size_t sample_paths = 20;    // trajectories kept for plots
  std::size_t plot_points = 101;
  std::size_t csv_rows = 1000;
};

inline std::vector<double> default_probe_times(double T, std::size_t n = 10) {
  std::vector<double> t(n);
  for (std::size_t k = 0; k < n; ++k) t[k] = T * static_cast<double>(k) / static_cast<double>(n - 1);
  t.back() = T;
  return t;
}

struct Trajectory {
  std::size_t path_id;
  double weight;
  std::vector<double> y;
  std::vector<double> v;  // V^{x,H}(t); empty when no pathwise strategy
};

struct PlotData {
  std::vector<double> times;  // plot grid
  std::vector<Trajectory> trajectories;
  std::vector<double> probe_times;
  std::vector<double> q_mean;  // E^Q[Y(t)]
  std::vector<double> p_mean;  // E^P[Y(t)] = E^Q[Y(T) Y(t)]
  std::vector<std::size_t> gap_n;
  std::vector<double> gap_mean;  // running E^P[1/Y(T)]
  std::vector<double> gap_se;
};

struct PathRow {
  std::size_t path_id;
  double y_T;
  double weight;
  double v0h_T;  // NaN when no strategy was constructed
  std::string stop_reason;
};

struct CertificationRun {
  CertificationReport report;
  PlotData plots;
  std::vector<PathRow> rows;
  std::optional<double> initial_capital;
  bool nflvr_fails = false;
  bool nupbr_certified = false;
};

/// Pathwise strategy attached to a configuration, if one is constructed.
struct PathwiseStrategy {
  enum class Kind { None, FirstJump, BuyAndHold } kind = Kind::None;
  StrategySpec spec;
  double x = 0.0;
  std::string error;  // why construction failed
};

inline PathwiseStrategy make_pathwise_strategy(const MarketConfig& cfg) {
  PathwiseStrategy s;
  try {
    if (cfg.model == ModelKind::CompensatedPoisson || cfg.model == ModelKind::CompoundPoisson) {
      s.spec = example3_strategy(cfg.lambda, cfg.effective_law(), cfg.d);
      s.kind = PathwiseStrategy::Kind::FirstJump;
      s.x = s.spec.x;
    } else if (cfg.model == ModelKind::CondExpectation) {
      // One unit of the claim-price asset, bought at its time-0 price.
      s.kind = PathwiseStrategy::Kind::BuyAndHold;
      s.x = is_jump_model(cfg.base_model) ? 1.0 - std::exp(-1.0) : brownian_hedge_capital(cfg.horizon);
    }
  } catch (const ConfigError& e) {
    s.kind = PathwiseStrategy::Kind::None;
    s.error = e.what();
  }
  return s;
}

inline ValueProcessRecord value_process(const PathwiseStrategy& s, const ModelOutput& out,
                                        std::optional<double> t_end = std::nullopt) {
  if (s.kind == PathwiseStrategy::Kind::FirstJump) {
    std::vector<EventPath> assets;
    for (const auto& a : out.s_paths) assets.push_back(std::get<EventPath>(a));
    return integrate_value_process_jump(assets, s.spec, t_end);
  }
  if (s.kind == PathwiseStrategy::Kind::BuyAndHold) {
    ValueProcessRecord r = integrate_buy_and_hold(out.s_paths.front(), 1.0, s.x);
    if (t_end) {
      r.terminal_value = s.x + value_at(out.s_paths.front(), *t_end) - value_at(out.s_paths.front(), 0.0);
    }
    return r;
  }
  throw std::logic_error("value_process: no strategy");
}

inline std::string stop_reason_of(const ModelOutput& out) {
  if (const auto* e = out.y_events()) return std::string(to_string(e->stop_reason));
  return out.y_grid()->hit_zero ? "hit_zero" : "horizon_end";
}

namespace detail {

inline CheckResult skip_check(std::string name, std::string clause, std::string why) {
  CheckResult r;
  r.name = std::move(name);
  r.clause = std::move(clause);
  r.verdict = Verdict::Skip;
  r.detail = std::move(why);
  return r;
}

}  // namespace detail

/// Runs the whole battery on one configuration: zero-hitting admission, Q
/// martingale tests, superreplication and admissibility of the constructed
/// strategy, the strong-arbitrage certificate (NFLVR fails), and the deflator
/// checks (NUPBR holds).
inline CertificationRun run_full_certification(const MarketConfig& cfg, CertificationOptions opt = {}) {
  cfg.validate();
  const double T = cfg.horizon.T;
  if (opt.probe_times.empty()) opt.probe_times = default_probe_times(T);
  const auto& probes = opt.probe_times;
  const std::size_t n = cfg.n_paths;
  const std::size_t k_probes = probes.size();
  const std::size_t d = cfg.d;
  const double conf = opt.confidence;

  const PathwiseStrategy strat = make_pathwise_strategy(cfg);
  const bool has_strategy = strat.kind != PathwiseStrategy::Kind::None;

  std::vector<double> y_T(n), weight(n), zero(n), gain(n, 0.0), min_gain(n, 0.0), super(n, 0.0);
  std::vector<unsigned char> jump_at_hit(n), chain_bad(n);
  std::vector<std::vector<double>> y_probe(k_probes, std::vector<double>(n));
  std::vector<std::vector<std::vector<double>>> s_probe(
      d, std::vector<std::vector<double>>(k_probes, std::vector<double>(n)));
  std::vector<double> s0(d, 0.0);

  const JumpLaw law = cfg.effective_law();
  parallel_for(n, opt.workers, [&](std::size_t i) {
    const ModelOutput out = simulate(cfg, i);
    y_T[i] = out.y_terminal();
    weight[i] = out.weight.w;
    zero[i] = y_T[i] == 0.0 ? 1.0 : 0.0;
    jump_at_hit[i] = reaches_zero_by_jump(out) ? 1 : 0;
    for (std::size_t k = 0; k < k_probes; ++k) {
      y_probe[k][i] = std::visit([&](const auto& p) { return value_at(p, probes[k]); }, out.y_path);
      for (std::size_t a = 0; a < d; ++a) s_probe[a][k][i] = value_at(out.s_paths[a], probes[k]);
    }
    if (has_strategy) {
      const ValueProcessRecord rec = value_process(strat, out);
      gain[i] = rec.gain();
      min_gain[i] = rec.running_minimum - rec.x;
      super[i] = rec.terminal_value - (y_T[i] > 0.0 ? 1.0 : 0.0);
      if (strat.kind == PathwiseStrategy::Kind::FirstJump && cfg.compensated) {
        // Intermediate quantities of the superreplication inequality chain.
        const auto& y = *out.y_events();
        const double s = y.active_until();
        const double before = strat.x + rec.drift_integral;
        const double closed = law.f_max / law.f_min * (1.0 - std::exp(-(1.0 - cfg.lambda * s) / law.f_max));
        bool bad = std::abs(before - closed) > 1e-12;
        if (y.jumped()) {
          const double e = std::exp(-(1.0 - cfg.lambda * y.stop_time) / law.f_max);
          bad = bad || rec.jump_term < e - 1e-12 || closed + e < 1.0 - 1e-12;
        }
        chain_bad[i] = bad ? 1 : 0;
      }
    }
  });
  {
    const ModelOutput first = simulate(cfg, 0);
    for (std::size_t a = 0; a < d; ++a) s0[a] = value_at(first.s_paths[a], 0.0);
  }

  CertificationRun run;
  auto& checks = run.report.checks;

  // (1) zero hitting
  {
    std::size_t jumps = 0;
    for (auto b : jump_at_hit) jumps += b;
    const A0Verdict a0 = evaluate_assumption_A0(zero, jumps, conf);
    CheckResult r;
    r.name = "zero_hitting";
    r.clause = "0 < Q(Y(T) = 0) < 1 and Y only reaches zero continuously";
    r.verdict = a0.pass ? Verdict::Pass : Verdict::Fail;
    r.estimate = a0.zero_hit;
    r.statistic = static_cast<double>(jumps);
    r.detail = a0.pass ? "zero-hit frequency " + std::to_string(a0.zero_hit.mean) : a0.violated;
    checks.push_back(std::move(r));
  }

  // (2) Q-martingale property of Y and the traded assets
  checks.push_back(test_q_martingale(y_probe, probes, conf, 1.0, "q_martingale"));
  for (std::size_t a = 0; a < d; ++a) {
    const bool same_as_y = (cfg.model != ModelKind::CondExpectation && a == 0);
    if (same_as_y) continue;
    checks.push_back(test_q_martingale(s_probe[a], probes, conf, s0[a], "q_martingale_asset" + std::to_string(a + 1)));
  }

  // (3) superreplication of 1{Y(T) > 0} from capital below 1
  const std::string super_clause = "1{Y(T) > 0} is superreplicated from initial capital x < 1";
  const std::string arb_clause = "the superreplicating strategy is a strong arbitrage under P, so NFLVR fails";
  if (cfg.model == ModelKind::StoppedBrownian) {
    const double price = superreplication_price_complete(cfg);
    run.initial_capital = price;
    CheckResult p;
    p.name = "superreplication_price";
    p.clause = super_clause;
    p.statistic = price;
    p.verdict = price < 1.0 ? Verdict::Pass : Verdict::Fail;
    p.detail = "complete market: price = Q(Y(T) > 0) = " + std::to_string(price);
    checks.push_back(p);

    const HedgeConvergence hc = delta_hedge_convergence(T, opt.hedge_steps, opt.hedge_paths, cfg.seed ^ 0x5eedULL,
                                                        opt.workers);
    CheckResult h;
    h.name = "delta_hedge_convergence";
    h.clause = "the delta hedge replicates 1{Y(T) > 0} in the continuous-rebalancing limit";
    h.verdict = hc.pass() ? Verdict::Pass : Verdict::Fail;
    for (std::size_t k = 0; k < hc.steps.size(); ++k)
      h.probes.push_back({static_cast<double>(hc.steps[k]), Estimate{hc.rms[k], 0.0, hc.n_paths, conf},
                          k > 0 && !(hc.rms[k] < hc.rms[k - 1])});
    h.statistic = hc.ratios.empty() ? 0.0 : *std::min_element(hc.ratios.begin(), hc.ratios.end());
    h.detail = std::string(hc.decreasing() ? "RMS error decreasing" : "RMS error not decreasing") +
               (hc.order_half() ? ", refinement ratios in [2.5, 4.5]" : ", refinement ratios outside [2.5, 4.5]");
    checks.push_back(h);

    CheckResult a;
    a.name = "strong_arbitrage";
    a.clause = arb_clause;
    a.statistic = 1.0 - price;
    a.verdict = (p.verdict == Verdict::Pass && h.verdict == Verdict::Pass) ? Verdict::Pass : Verdict::Fail;
    a.detail = "replicating capital " + std::to_string(price) + " < 1 pays 1 P-a.s.; margin 1 - x = " +
               std::to_string(1.0 - price);
    checks.push_back(a);
  } else if (!has_strategy) {
    checks.push_back(detail::skip_check("superreplication", super_clause, strat.error));
    checks.push_back(detail::skip_check("admissibility", "the strategy is x-admissible", strat.error));
    checks.push_back(detail::skip_check("strong_arbitrage", arb_clause, strat.error));
    checks.push_back(detail::skip_check("no_arbitrage_under_q", "the strategy is not an arbitrage before the measure change",
                                        strat.error));
  } else {
    run.initial_capital = strat.x;
    CheckResult s;
    s.name = "superreplication";
    s.clause = super_clause;
    std::size_t violations = 0;
    double worst = kNever;
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::min(worst, super[i]);
      if (super[i] < -1e-9) ++violations;
    }
    s.statistic = worst;
    s.verdict = (strat.x < 1.0 && violations == 0) ? Verdict::Pass : Verdict::Fail;
    s.detail = "x = " + std::to_string(strat.x) + "; min V(T) - 1{Y(T)>0} = " + std::to_string(worst) + " over " +
               std::to_string(n) + " paths";
    checks.push_back(s);

    if (strat.kind == PathwiseStrategy::Kind::FirstJump && cfg.compensated) {
      std::size_t bad = 0;
      for (auto b : chain_bad) bad += b;
      CheckResult c;
      c.name = "superreplication_chain";
      c.clause = "drift integral and jump term satisfy each step of the superreplication inequality";
      c.statistic = static_cast<double>(bad);
      c.verdict = bad == 0 ? Verdict::Pass : Verdict::Fail;
      c.detail = std::to_string(bad) + " paths violate an intermediate inequality";
      checks.push_back(c);
    }

    double worst_min = kNever;
    for (double m : min_gain) worst_min = std::min(worst_min, m);
    CheckResult adm;
    adm.name = "admissibility";
    adm.clause = "the strategy is x-admissible: V^{0,H}(t) >= -x";
    adm.statistic = worst_min;
    adm.verdict = worst_min >= -strat.x - 1e-9 ? Verdict::Pass : Verdict::Fail;
    adm.detail = "inf V^{0,H} = " + std::to_string(worst_min) + " against alpha = " + std::to_string(strat.x);
    checks.push_back(adm);

    checks.push_back(certify_strong_arbitrage(gain, strat.x, weight, adm.verdict == Verdict::Pass));
    checks.push_back(test_loss_under_q(gain, conf));
  }

  // (4) deflator checks
  checks.push_back(test_strict_local_martingale_gap(y_T, weight, conf));
  for (std::size_t a = 0; a < d; ++a)
    checks.push_back(test_deflated_supermartingale(s_probe[a], y_probe, weight, s0[a], probes, conf,
                                                   "deflated_supermartingale_asset" + std::to_string(a + 1)));
  {
    std::vector<double> alive(n);
    for (std::size_t i = 0; i < n; ++i) alive[i] = 1.0 - zero[i];
    const Estimate p_zero = p_probability(zero, weight, conf);
    const Estimate q_zero = [&] {
      Estimate e = estimate_mean(zero, conf);
      e.lower_clamp = 0.0;
      e.upper_clamp = 1.0;
      return e;
    }();
    CheckResult r;
    r.name = "non_equivalence";
    r.clause = "P << Q but not equivalent: Q(Y(T) = 0) > 0 while P(Y(T) = 0) = 0, so Z(T) = 1/Y(T) > 0 P-a.s.";
    r.estimate = p_zero;
    r.statistic = q_zero.lower();
    r.verdict = (p_zero.mean == 0.0 && p_zero.std_error == 0.0 && q_zero.lower() > 0.0) ? Verdict::Pass : Verdict::Fail;
    r.detail = "P(Y(T) = 0) = " + std::to_string(p_zero.mean) + ", Q lower bound " + std::to_string(q_zero.lower());
    checks.push_back(r);

    const auto* gap = run.report.find("strict_local_martingale_gap");
    CheckResult m;
    m.name = "gap_matches_zero_hit";
    m.clause = "1 - E^P[1/Y(T)] and Q(Y(T) = 0) estimate the same quantity";
    const double g = *gap->statistic;
    const double joint = std::hypot(gap->estimate->std_error, q_zero.std_error) * gap->estimate->z();
    m.statistic = g - q_zero.mean;
    const bool agree = std::abs(g - q_zero.mean) <= joint + 1e-12;
    m.verdict = agree ? Verdict::Pass : Verdict::Fail;
    m.detail = "gap " + std::to_string(g) + " vs zero-hit " + std::to_string(q_zero.mean);
    checks.push_back(m);
  }

  run.report.overall = overall_verdict(checks);

  auto verdict_of = [&](std::string_view name) {
    const auto* c = run.report.find(name);
    return c ? c->verdict : Verdict::Skip;
  };
  run.nflvr_fails = verdict_of("strong_arbitrage") == Verdict::Pass;
  run.nupbr_certified = verdict_of("strict_local_martingale_gap") == Verdict::Pass &&
                        verdict_of("non_equivalence") == Verdict::Pass;
  for (std::size_t a = 0; a < d; ++a)
    run.nupbr_certified = run.nupbr_certified &&
                          verdict_of("deflated_supermartingale_asset" + std::to_string(a + 1)) == Verdict::Pass;

  // plot data
  auto& pl = run.plots;
  pl.probe_times = probes;
  for (std::size_t k = 0; k < k_probes; ++k) {
    std::vector<double> pw(n);
    for (std::size_t i = 0; i < n; ++i) pw[i] = weight[i] * y_probe[k][i];
    pl.q_mean.push_back(estimate_mean(y_probe[k]).mean);
    pl.p_mean.push_back(estimate_mean(pw).mean);
  }
  {
    double sum = 0.0, sumsq = 0.0;
    std::size_t next = std::min<std::size_t>(1000, n);
    for (std::size_t i = 0; i < n; ++i) {
      const double v = weight[i] > 0.0 ? weight[i] / y_T[i] : 0.0;
      sum += v;
      sumsq += v * v;
      if (i + 1 == next || i + 1 == n) {
        const double m = sum / static_cast<double>(i + 1);
        const double var = i > 0 ? (sumsq - (i + 1) * m * m) / static_cast<double>(i) : 0.0;
        pl.gap_n.push_back(i + 1);
        pl.gap_mean.push_back(m);
        pl.gap_se.push_back(std::sqrt(std::max(var, 0.0) / static_cast<double>(i + 1)));
        if (i + 1 == n) break;
        next = std::min(n, next * 10);
      }
    }
  }
  pl.times = default_probe_times(T, opt.plot_points);
  const std::size_t n_traj = std::min(opt.sample_paths, n);
  for (std::size_t i = 0; i < n_traj; ++i) {
    const ModelOutput out = simulate(cfg, i);
    Trajectory tr{i, out.weight.w, {}, {}};
    std::optional<ValueProcessRecord> hedge;
    if (const auto* g = out.y_grid()) hedge = integrate_delta_hedge(*g, cfg.horizon);
    for (double t : pl.times) {
      tr.y.push_back(std::visit([&](const auto& p) { return value_at(p, t); }, out.y_path));
      if (has_strategy) {
        tr.v.push_back(value_process(strat, out, t).terminal_value);
      } else if (hedge) {
        const auto& g = *out.y_grid();
        auto it = std::upper_bound(g.times.begin(), g.times.end(), t);
        tr.v.push_back(hedge->values[static_cast<std::size_t>(it - g.times.begin()) - 1].value);
      }
    }
    pl.trajectories.push_back(std::move(tr));
  }

  // csv rows
  const std::size_t n_rows = std::min(opt.csv_rows, n);
  for (std::size_t i = 0; i < n_rows; ++i) {
    const ModelOutput out = simulate(cfg, i);
    double v0h = std::numeric_limits<double>::quiet_NaN();
    if (has_strategy) v0h = gain[i];
    else if (const auto* g = out.y_grid()) v0h = integrate_delta_hedge(*g, cfg.horizon).gain();
    run.rows.push_back({i, y_T[i], weight[i], v0h, stop_reason_of(out)});
  }
  return run;
}

}  // namespace nupbr
