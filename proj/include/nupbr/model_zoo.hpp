#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "core_types.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace nupbr {

/// Price process of the claim 1{Y(T) > 0} under Q for a first-jump Poisson Y:
/// 1 - exp(-(1 - lambda t)) while Y runs, then the revealed indicator.
struct SurvivalPricePath {
  EventPath base;
  double lambda = 1.0;

  double value_at(double t) const {
    if (!(t >= 0.0 && t <= base.horizon)) throw DomainError("SurvivalPricePath::value_at: t outside [0, T]");
    if (t >= base.stop_time) return base.stop_reason == StopReason::Jumped ? 1.0 : 0.0;
    return 1.0 - std::exp(-(1.0 - lambda * t));
  }
};

using YPath = std::variant<EventPath, GridPath>;
using AssetPath = std::variant<EventPath, GridPath, SurvivalPricePath>;

inline double value_at(const EventPath& p, double t) { return reconstruct_value(p, t); }
inline double value_at(const GridPath& p, double t) { return p.value_at(t); }
inline double value_at(const SurvivalPricePath& p, double t) { return p.value_at(t); }
template <class... Ts>
double value_at(const std::variant<Ts...>& p, double t) {
  return std::visit([t](const auto& q) { return value_at(q, t); }, p);
}

struct ModelOutput {
  YPath y_path;
  std::vector<AssetPath> s_paths;
  PathWeight weight;

  double y_terminal() const { return weight.w; }
  const EventPath* y_events() const { return std::get_if<EventPath>(&y_path); }
  const GridPath* y_grid() const { return std::get_if<GridPath>(&y_path); }
};

// ---------------------------------------------------------------------------
// Jump models

/// First-jump (compound) Poisson path from given draws: drift -lambda from 1,
/// zero reached at tau = 1/lambda; a jump of `size` at rho < tau stops the
/// path. With `compensated == false` the drift is removed and the path runs to
/// T unless it jumps.
inline EventPath first_jump_path(double lambda, double T, double rho, double size = 1.0,
                                 bool compensated = true) {
  EventPath p;
  p.y0 = 1.0;
  p.horizon = T;
  if (!compensated) {
    p.drift_rate = 0.0;
    if (rho <= T) {
      p.events.push_back({rho, size});
      p.stop_time = rho;
      p.stop_reason = StopReason::Jumped;
    }
    return p;
  }
  p.drift_rate = -lambda;
  const double tau = 1.0 / lambda;
  if (rho < tau) {
    p.events.push_back({rho, size});
    p.stop_time = rho;
    p.stop_reason = StopReason::Jumped;
  } else {
    p.stop_time = tau;
    p.stop_reason = StopReason::HitZero;
  }
  return p;
}

inline void require_lambda(double lambda, const TimeHorizon& h) {
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive", "lambda");
  if (lambda * h.T < 1.0 - 1e-12)
    throw ConfigError("lambda >= 1/T required, otherwise Y may not reach zero before T", "lambda");
}

inline ModelOutput wrap_jump_output(EventPath p) {
  const double w = terminal_value(p);
  ModelOutput out{p, {}, PathWeight{w}};
  out.s_paths.emplace_back(std::move(p));
  return out;
}

inline ModelOutput simulate_compensated_poisson(double lambda, const TimeHorizon& h, PathStream& rng,
                                                bool compensated = true) {
  require_lambda(lambda, h);
  const double rho = rng.exponential(lambda);
  return wrap_jump_output(first_jump_path(lambda, h.T, rho, 1.0, compensated));
}

/// Draw order: jump time, then a uniform for the jump size. A degenerate law at
/// 1 therefore reproduces simulate_compensated_poisson path by path.
inline ModelOutput simulate_compound_poisson(double lambda, const JumpLaw& law, const TimeHorizon& h,
                                             PathStream& rng, bool compensated = true) {
  require_lambda(lambda, h);
  law.validate();
  const double rho = rng.exponential(lambda);
  const double size = law.quantile(rng.uniform());
  return wrap_jump_output(first_jump_path(lambda, h.T, rho, size, compensated));
}

// ---------------------------------------------------------------------------
// Brownian model

struct BrownianWalk {
  bool hit_zero = false;
  std::size_t hit_index = 0;  // first grid index with value 0
  std::optional<double> hit_time;
};

/// Walks 1 + B on the grid, killing at zero. A step ending at y_next <= 0 is a
/// hit; a step between positive values is a hit with the Brownian-bridge
/// crossing probability exp(-2 y y_next / dt). The hit time is placed at the
/// midpoint of the interval and the value is 0 from its right end onward.
///
/// Conditioned on the grid values this samples the killed transition exactly,
/// so Y at grid times has the law of the continuously stopped process.
///
/// visit(i, y) is called for every grid index i = 0..steps.
template <class Visit>
BrownianWalk walk_stopped_brownian(const TimeHorizon& h, PathStream& rng, bool bridge, Visit&& visit) {
  const std::size_t n = h.steps();
  const double dt = h.dt();
  const double sdt = std::sqrt(dt);
  BrownianWalk walk;
  double y = 1.0;
  visit(std::size_t{0}, y);
  std::size_t i = 1;
  for (; i <= n; ++i) {
    const double y_next = y + sdt * rng.normal();
    bool hit = y_next <= 0.0;
    if (!hit && bridge) {
      const double a = 2.0 * y * y_next / dt;
      // exp(-40) is below the smallest uniform the stream can return.
      if (a < 40.0) hit = rng.uniform() < std::exp(-a);
    }
    if (hit) {
      walk.hit_zero = true;
      walk.hit_index = i;
      walk.hit_time = (static_cast<double>(i) - 0.5) * dt;
      break;
    }
    y = y_next;
    visit(i, y);
  }
  for (; i <= n; ++i) visit(i, 0.0);
  return walk;
}

inline std::vector<double> grid_times(const TimeHorizon& h) {
  std::vector<double> t(h.grid_points);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = h.T * static_cast<double>(i) / static_cast<double>(h.steps());
  t.back() = h.T;
  return t;
}

inline GridPath stopped_brownian_path(const TimeHorizon& h, PathStream& rng, bool bridge = true) {
  h.validate();
  GridPath g;
  g.times = grid_times(h);
  g.values.resize(h.grid_points);
  const auto walk = walk_stopped_brownian(h, rng, bridge, [&](std::size_t i, double y) { g.values[i] = y; });
  g.hit_zero = walk.hit_zero;
  g.hit_time = walk.hit_time;
  return g;
}

inline ModelOutput simulate_stopped_brownian(const TimeHorizon& h, PathStream& rng, bool bridge = true) {
  GridPath g = stopped_brownian_path(h, rng, bridge);
  const double w = g.terminal();
  ModelOutput out{g, {}, PathWeight{w}};
  out.s_paths.emplace_back(std::move(g));
  return out;
}

/// Q-probability that 1 + B, started at y at time t, stays positive until T.
inline double brownian_survival_probability(double y, double remaining) {
  if (y <= 0.0) return 0.0;
  if (remaining <= 0.0) return 1.0;
  return 2.0 * normal_cdf(y / std::sqrt(remaining)) - 1.0;
}

// ---------------------------------------------------------------------------
// Claim-price asset

/// Replaces asset 1 by the Q-price process of 1{Y(T) > 0}, computed in closed
/// form from the base Y path. Other assets are carried over.
inline ModelOutput simulate_cond_expectation_asset(const ModelOutput& base, ModelKind base_kind, double lambda,
                                                   const TimeHorizon& h) {
  ModelOutput out = base;
  if (is_jump_model(base_kind)) {
    const EventPath* y = base.y_events();
    if (!y) throw ConfigError("cond_expectation: jump base model must produce an event path", "base_model");
    if (y->drift_rate != -lambda)
      throw ConfigError("cond_expectation: base path must be compensated", "compensated");
    out.s_paths.at(0) = SurvivalPricePath{*y, lambda};
    return out;
  }
  if (base_kind == ModelKind::StoppedBrownian) {
    const GridPath* y = base.y_grid();
    if (!y) throw ConfigError("cond_expectation: Brownian base must produce a grid path", "base_model");
    GridPath s = *y;
    for (std::size_t i = 0; i < s.values.size(); ++i)
      s.values[i] = brownian_survival_probability(y->values[i], h.T - s.times[i]);
    out.s_paths.at(0) = std::move(s);
    return out;
  }
  throw ConfigError("cond_expectation: unsupported base model", "base_model");
}

// ---------------------------------------------------------------------------
// Dispatch

inline ModelOutput simulate_y_model(ModelKind kind, const MarketConfig& cfg, PathStream& rng) {
  switch (kind) {
    case ModelKind::CompensatedPoisson:
      return simulate_compensated_poisson(cfg.lambda, cfg.horizon, rng, cfg.compensated);
    case ModelKind::CompoundPoisson:
      return simulate_compound_poisson(cfg.lambda, cfg.effective_law(), cfg.horizon, rng, cfg.compensated);
    case ModelKind::StoppedBrownian:
      return simulate_stopped_brownian(cfg.horizon, rng);
    case ModelKind::CondExpectation:
      break;
  }
  throw ConfigError("not a Y model", "model");
}

/// Path `index` of the configured market under Q. Assets 2..d are independent
/// copies of the Y model on their own substreams.
inline ModelOutput simulate(const MarketConfig& cfg, std::uint64_t index) {
  PathStream rng(cfg.seed, index, Substream::Y);
  ModelOutput out = simulate_y_model(cfg.y_model(), cfg, rng);
  if (cfg.model == ModelKind::CondExpectation)
    out = simulate_cond_expectation_asset(out, cfg.base_model, cfg.lambda, cfg.horizon);
  for (std::size_t i = 1; i < cfg.d; ++i) {
    PathStream extra(cfg.seed, index, static_cast<std::uint32_t>(Substream::ExtraAsset) + static_cast<std::uint32_t>(i));
    ModelOutput copy = simulate_y_model(cfg.y_model(), cfg, extra);
    out.s_paths.push_back(std::move(copy.s_paths.front()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Zero-hitting admission check

struct A0Verdict {
  bool pass = false;
  std::string violated;  // empty on pass
  Estimate zero_hit;     // Q(Y(T) = 0)
  std::size_t jump_at_hit = 0;
};

/// Evaluates the three clauses: Q(Y(T)=0) > 0 and < 1 at the interval level,
/// and no zero hit coincides with a jump.
inline A0Verdict evaluate_assumption_A0(std::span<const double> zero_indicator, std::size_t jump_at_hit,
                                        double confidence = 0.99) {
  A0Verdict v;
  v.zero_hit = estimate_mean(zero_indicator, confidence);
  v.zero_hit.lower_clamp = 0.0;
  v.zero_hit.upper_clamp = 1.0;
  v.jump_at_hit = jump_at_hit;
  if (!(v.zero_hit.lower() > 0.0))
    v.violated = "Q(Y(T) = 0) > 0 not established: interval lower bound is 0";
  else if (jump_at_hit > 0)
    v.violated = std::to_string(jump_at_hit) + " paths reach zero by a jump";
  else if (!(v.zero_hit.upper() < 1.0))
    v.violated = "Q(Y(T) = 0) < 1 not established";
  v.pass = v.violated.empty();
  return v;
}

/// True when a path reaches zero other than continuously.
inline bool reaches_zero_by_jump(const ModelOutput& out) {
  if (const auto* e = out.y_events()) {
    if (e->stop_reason == StopReason::HitZero) return check_invariants(*e).has_value();
    // an event path at zero without a continuous hit must have jumped there
    return terminal_value(*e) == 0.0;
  }
  const auto* g = out.y_grid();
  if (g->hit_zero) return !g->hit_time.has_value();
  return g->terminal() == 0.0;
}

inline A0Verdict check_assumption_A0(const MarketConfig& cfg, std::size_t n_probe, unsigned workers = 0,
                                     double confidence = 0.99) {
  cfg.validate();
  std::vector<double> zero(n_probe);
  std::vector<unsigned char> bad(n_probe);
  parallel_for(n_probe, workers, [&](std::size_t i) {
    const ModelOutput out = simulate(cfg, i);
    zero[i] = out.y_terminal() == 0.0 ? 1.0 : 0.0;
    bad[i] = reaches_zero_by_jump(out) ? 1 : 0;
  });
  std::size_t jumps = 0;
  for (auto b : bad) jumps += b;
  return evaluate_assumption_A0(zero, jumps, confidence);
}

}  // namespace nupbr
