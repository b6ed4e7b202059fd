#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "core_types.hpp"
#include "model_zoo.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace nupbr {

struct ValuePoint {
  double time;
  double value;
};

/// Value process x + int H dS sampled at every breakpoint. Event times appear
/// twice: left limit first, then the post-jump value.
struct ValueProcessRecord {
  double x = 0.0;
  std::vector<ValuePoint> values;
  double terminal_value = 0.0;
  double running_minimum = 0.0;
  // Components of terminal_value - x.
  double drift_integral = 0.0;
  double jump_term = 0.0;
  bool used_quadrature = false;

  double gain() const { return terminal_value - x; }  // V^{0,H}(T)
};

// ---------------------------------------------------------------------------
// First-jump Poisson superreplication

/// Holding in asset 1: exp(-(1 - lambda t)/F_max) / F_min up to rho ^ tau, then 0.
inline double example3_integrand(double t, double lambda, const JumpLaw& law, bool stopped) {
  if (stopped) return 0.0;
  return std::exp(-(1.0 - lambda * t) / law.f_max) / law.f_min;
}

/// int_a^b example3_integrand(t) dt on an unstopped stretch.
inline double example3_primitive(double a, double b, double lambda, const JumpLaw& law) {
  return law.f_max / (lambda * law.f_min) *
         (std::exp(-(1.0 - lambda * b) / law.f_max) - std::exp(-(1.0 - lambda * a) / law.f_max));
}

inline double example3_capital_formula(const JumpLaw& law) {
  return law.f_max / law.f_min * (1.0 - std::exp(-1.0 / law.f_max));
}

/// Capital (F_max / F_min)(1 - exp(-1/F_max)) needed by the first-jump strategy.
inline double example3_initial_capital(const JumpLaw& law) {
  law.validate();
  const double x = example3_capital_formula(law);
  if (!(x < 1.0))
    throw ConfigError("initial capital x = " + std::to_string(x) +
                          " >= 1: the indicator claim cannot be superreplicated below 1 with this law",
                      "jump_law");
  return x;
}

inline StrategySpec example3_strategy(double lambda, const JumpLaw& law, std::size_t d = 1) {
  StrategySpec s;
  s.x = example3_initial_capital(law);
  s.alpha = s.x;
  s.d = d;
  s.integrand = [lambda, law](std::size_t asset, double t, bool stopped) {
    return asset == 0 ? example3_integrand(t, lambda, law, stopped) : 0.0;
  };
  s.primitive = [lambda, law](std::size_t asset, double a, double b, bool stopped) -> std::optional<double> {
    if (asset != 0 || stopped) return 0.0;
    return example3_primitive(a, b, lambda, law);
  };
  return s;
}

inline StrategySpec zero_strategy(double x, std::size_t d = 1) {
  StrategySpec s;
  s.x = x;
  s.alpha = 0.0;
  s.d = d;
  s.integrand = [](std::size_t, double, bool) { return 0.0; };
  s.primitive = [](std::size_t, double, double, bool) -> std::optional<double> { return 0.0; };
  return s;
}

namespace detail {

inline double integrate_drift(const StrategySpec& s, std::size_t asset, double a, double b, bool stopped,
                              bool& used_quadrature) {
  if (b <= a) return 0.0;
  if (s.primitive)
    if (auto v = s.primitive(asset, a, b, stopped)) return *v;
  used_quadrature = true;
  auto f = [&](double t) { return s.integrand(asset, t, stopped); };
  return boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, 15, 1e-10);
}

}  // namespace detail

/// Integrates V = x + sum_i int H_i dS_i exactly over event paths up to
/// `t_end`: closed-form drift integrals between breakpoints plus H(t_k) dS at
/// each jump. Holdings switch to their stopped form strictly after the stop
/// time of asset 1. Integrands without a primitive fall back to adaptive
/// Gauss-Kronrod quadrature and the record is flagged.
inline ValueProcessRecord integrate_value_process_jump(std::span<const EventPath> assets, const StrategySpec& s,
                                                       std::optional<double> t_end = std::nullopt) {
  if (assets.empty()) throw std::invalid_argument("integrate_value_process_jump: no asset paths");
  const double T = assets.front().horizon;
  const double end = t_end.value_or(T);
  if (!(end >= 0.0 && end <= T)) throw DomainError("integrate_value_process_jump: t_end outside [0, T]");
  const double y_stop = assets.front().stop_time;

  ValueProcessRecord rec;
  rec.x = s.x;

  struct Mark {
    double time;
    std::size_t asset;
    double jump;  // 0 for pure breakpoints
    bool is_jump;
  };
  std::vector<Mark> marks;
  for (std::size_t i = 0; i < assets.size() && i < s.d; ++i) {
    for (const auto& e : assets[i].events)
      if (e.time <= std::min(end, assets[i].active_until())) marks.push_back({e.time, i, e.jump, true});
    if (assets[i].active_until() < end) marks.push_back({assets[i].active_until(), i, 0.0, false});
  }
  if (y_stop < end) marks.push_back({y_stop, 0, 0.0, false});
  marks.push_back({end, 0, 0.0, false});
  std::stable_sort(marks.begin(), marks.end(), [](const Mark& a, const Mark& b) { return a.time < b.time; });

  double v = s.x;
  double last = 0.0;
  rec.values.push_back({0.0, v});
  for (const auto& m : marks) {
    if (m.time > last) {
      const bool stopped = last >= y_stop;  // the whole stretch (last, m.time] lies beyond the stop
      double d = 0.0;
      for (std::size_t i = 0; i < assets.size() && i < s.d; ++i) {
        const double hi = std::min(m.time, assets[i].active_until());
        if (hi <= last || assets[i].drift_rate == 0.0) continue;
        d += assets[i].drift_rate * detail::integrate_drift(s, i, last, hi, stopped, rec.used_quadrature);
      }
      v += d;
      rec.drift_integral += d;
      rec.values.push_back({m.time, v});
      last = m.time;
    }
    if (m.is_jump) {
      const double j = s.integrand(m.asset, m.time, m.time > y_stop) * m.jump;
      v += j;
      rec.jump_term += j;
      rec.values.push_back({m.time, v});
    }
  }
  rec.terminal_value = v;
  rec.running_minimum = s.x;
  for (const auto& p : rec.values) rec.running_minimum = std::min(rec.running_minimum, p.value);
  return rec;
}

inline ValueProcessRecord integrate_value_process_jump(const EventPath& path, const StrategySpec& s,
                                                       std::optional<double> t_end = std::nullopt) {
  return integrate_value_process_jump(std::span<const EventPath>(&path, 1), s, t_end);
}

/// Holds `units` of a single asset from time 0: V = x + units (S(t) - S(0)).
/// Records left limits at the jump of a claim-price path.
inline ValueProcessRecord integrate_buy_and_hold(const AssetPath& asset, double units, double x) {
  ValueProcessRecord rec;
  rec.x = x;
  const double s0 = value_at(asset, 0.0);
  auto push = [&](double t, double s) { rec.values.push_back({t, x + units * (s - s0)}); };
  if (const auto* sp = std::get_if<SurvivalPricePath>(&asset)) {
    const double T = sp->base.horizon;
    push(0.0, s0);
    const double stop = sp->base.active_until();
    if (stop < T || sp->base.stop_reason != StopReason::HorizonEnd) {
      push(stop, 1.0 - std::exp(-(1.0 - sp->lambda * stop)));
      push(stop, sp->value_at(stop));
    }
    push(T, sp->value_at(T));
  } else if (const auto* g = std::get_if<GridPath>(&asset)) {
    for (std::size_t i = 0; i < g->times.size(); ++i) push(g->times[i], g->values[i]);
  } else {
    const auto& e = std::get<EventPath>(asset);
    push(0.0, s0);
    for (const auto& ev : e.events) {
      push(ev.time, reconstruct_value(e, ev.time) - ev.jump);
      push(ev.time, reconstruct_value(e, ev.time));
    }
    push(e.active_until(), reconstruct_value(e, e.active_until()));
    push(e.horizon, terminal_value(e));
  }
  rec.terminal_value = rec.values.back().value;
  rec.running_minimum = x;
  for (const auto& p : rec.values) rec.running_minimum = std::min(rec.running_minimum, p.value);
  rec.drift_integral = 0.0;
  rec.jump_term = rec.terminal_value - x;
  return rec;
}

// ---------------------------------------------------------------------------
// Brownian delta hedge

/// d/dy of the survival probability 2 Phi(y / sqrt(T - t)) - 1.
inline double example4_delta_hedge(double t, double y, const TimeHorizon& h) {
  if (!(t < h.T)) throw DomainError("example4_delta_hedge: t must be before T");
  if (y <= 0.0) return 0.0;
  const double s = std::sqrt(h.T - t);
  return 2.0 * normal_pdf(y / s) / s;
}

inline double brownian_hedge_capital(const TimeHorizon& h) { return brownian_survival_probability(1.0, h.T); }

/// Discretely rebalanced delta hedge along a grid path.
inline ValueProcessRecord integrate_delta_hedge(const GridPath& g, const TimeHorizon& h) {
  ValueProcessRecord rec;
  rec.x = brownian_hedge_capital(h);
  double v = rec.x;
  rec.values.push_back({g.times[0], v});
  for (std::size_t i = 1; i < g.values.size(); ++i) {
    const double hold = example4_delta_hedge(g.times[i - 1], g.values[i - 1], h);
    v += hold * (g.values[i] - g.values[i - 1]);
    rec.values.push_back({g.times[i], v});
  }
  rec.terminal_value = v;
  rec.running_minimum = rec.x;
  for (const auto& p : rec.values) rec.running_minimum = std::min(rec.running_minimum, p.value);
  rec.jump_term = v - rec.x;
  return rec;
}

struct HedgeOutcome {
  double terminal_value;
  double claim;  // 1{Y(T) > 0}
  double error() const { return terminal_value - claim; }
};

/// Simulates a path of the stopped Brownian model and hedges it on the fly.
inline HedgeOutcome simulate_delta_hedge(const TimeHorizon& h, PathStream& rng, bool bridge = true) {
  const double dt = h.dt();
  double v = brownian_hedge_capital(h);
  double prev = 1.0;
  double hold = 0.0;
  walk_stopped_brownian(h, rng, bridge, [&](std::size_t i, double y) {
    if (i > 0) v += hold * (y - prev);
    const double t = static_cast<double>(i) * dt;
    hold = (i < h.steps() && y > 0.0) ? example4_delta_hedge(t, y, h) : 0.0;
    prev = y;
  });
  return {v, prev > 0.0 ? 1.0 : 0.0};
}

struct HedgeConvergence {
  std::vector<std::size_t> steps;
  std::vector<double> rms;
  std::vector<double> ratios;  // rms[k] / rms[k+1]
  std::size_t n_paths = 0;
  double ratio_lo = 2.5;
  double ratio_hi = 4.5;

  bool decreasing() const {
    for (std::size_t k = 1; k < rms.size(); ++k)
      if (!(rms[k] < rms[k - 1])) return false;
    return true;
  }
  bool order_half() const {
    for (double r : ratios)
      if (!(r >= ratio_lo && r <= ratio_hi)) return false;
    return true;
  }
  bool pass() const { return decreasing() && order_half(); }
};

/// Terminal errors of delta hedges rebalanced every `stride[k]` fine steps,
/// all along one Brownian path simulated on the finest grid `fine`.
/// inv_root[i] = 1 / sqrt(T - t_i); the delta at (t_i, y) is shared by every
/// grid that rebalances at index i.
inline std::vector<double> nested_hedge_errors(const TimeHorizon& fine, std::span<const std::size_t> strides,
                                               PathStream& rng, std::span<const double> inv_root, double x) {
  const std::size_t n = fine.steps();
  const double c = 2.0 / std::sqrt(2.0 * std::numbers::pi);
  std::vector<double> v(strides.size(), x), hold(strides.size(), 0.0), prev(strides.size(), 1.0);
  double last = 1.0;
  walk_stopped_brownian(fine, rng, true, [&](std::size_t i, double y) {
    double delta = 0.0;
    bool computed = false;
    for (std::size_t k = 0; k < strides.size(); ++k) {
      if (i % strides[k] != 0) continue;
      if (i > 0) v[k] += hold[k] * (y - prev[k]);
      if (!computed) {
        if (i < n && y > 0.0) {
          const double z = y * inv_root[i];
          delta = c * std::exp(-0.5 * z * z) * inv_root[i];
        }
        computed = true;
      }
      hold[k] = delta;
      prev[k] = y;
    }
    last = y;
  });
  const double claim = last > 0.0 ? 1.0 : 0.0;
  for (auto& e : v) e -= claim;
  return v;
}

inline std::vector<double> nested_hedge_errors(const TimeHorizon& fine, std::span<const std::size_t> strides,
                                               PathStream& rng) {
  const std::size_t n = fine.steps();
  const double dt = fine.dt();
  const double x = brownian_hedge_capital(fine);
  std::vector<double> inv_root(n);
  for (std::size_t i = 0; i < n; ++i) inv_root[i] = 1.0 / std::sqrt(fine.T - static_cast<double>(i) * dt);
  return nested_hedge_errors(fine, strides, rng, inv_root, x);
}

/// RMS terminal replication error of the delta hedge rebalanced on grids of
/// the given step counts. All grids hedge the same Brownian paths, simulated
/// on the finest grid (every step count must divide the largest one).
inline HedgeConvergence delta_hedge_convergence(double T, std::vector<std::size_t> steps, std::size_t n_paths,
                                                std::uint64_t seed, unsigned workers = 0) {
  if (steps.empty()) throw std::invalid_argument("delta_hedge_convergence: no grids");
  const std::size_t finest = *std::max_element(steps.begin(), steps.end());
  std::vector<std::size_t> strides;
  for (std::size_t s : steps) {
    if (s == 0 || finest % s != 0)
      throw std::invalid_argument("delta_hedge_convergence: step counts must divide the finest grid");
    strides.push_back(finest / s);
  }
  const TimeHorizon fine{T, finest + 1};
  const double x = brownian_hedge_capital(fine);
  std::vector<double> inv_root(finest);
  for (std::size_t i = 0; i < finest; ++i) inv_root[i] = 1.0 / std::sqrt(T - static_cast<double>(i) * fine.dt());
  std::vector<std::vector<double>> sq(steps.size(), std::vector<double>(n_paths));
  parallel_for(n_paths, workers, [&](std::size_t i) {
    PathStream rng(seed, i, 1000u);
    const auto err = nested_hedge_errors(fine, strides, rng, inv_root, x);
    for (std::size_t k = 0; k < err.size(); ++k) sq[k][i] = err[k] * err[k];
  });
  HedgeConvergence out;
  out.steps = steps;
  out.n_paths = n_paths;
  for (const auto& s : sq) out.rms.push_back(std::sqrt(estimate_mean(s).mean));
  for (std::size_t k = 0; k + 1 < out.rms.size(); ++k) out.ratios.push_back(out.rms[k] / out.rms[k + 1]);
  return out;
}

// ---------------------------------------------------------------------------
// Admissibility and pricing

struct AdmissibilityVerdict {
  bool pass;
  double min_gain;  // inf_t V^{0,H}(t)
};

inline AdmissibilityVerdict check_admissibility(const ValueProcessRecord& r, double alpha) {
  const double min_gain = r.running_minimum - r.x;
  return {min_gain >= -alpha - 1e-9, min_gain};
}

/// Superreplication price of 1{Y(T) > 0} when the market is complete, where
/// it reduces to the Q-expectation of the claim.
inline double superreplication_price_complete(const MarketConfig& cfg) {
  cfg.validate();
  if (!cfg.compensated) throw ConfigError("uncompensated control model is not a Q-martingale market", "compensated");
  const ModelKind y = cfg.y_model();
  if (y == ModelKind::CompoundPoisson) {
    const auto& law = *cfg.jump_law;
    if (law.atoms.size() > 1)
      throw ConfigError(
          "jump sizes with more than one atom break martingale representation; closed-form price unavailable, "
          "use the Monte Carlo lower bound and the first-jump strategy capital as upper bound",
          "jump_law");
  }
  if (is_jump_model(y)) return 1.0 - std::exp(-1.0);  // Q(rho < 1/lambda)
  return brownian_hedge_capital(cfg.horizon);
}

}  // namespace nupbr
