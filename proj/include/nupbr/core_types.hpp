#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "stats.hpp"

namespace nupbr {

inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct TimeHorizon {
  double T = 1.0;
  std::size_t grid_points = 1001;  // grid times including 0 and T

  std::size_t steps() const { return grid_points - 1; }
  double dt() const { return T / static_cast<double>(steps()); }

  void validate() const {
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T must be positive and finite", "T");
    if (grid_points < 2) throw ConfigError("grid_points must be at least 2", "grid_points");
  }
};

/// Finitely supported jump-size law with mean one.
struct JumpLaw {
  struct Atom {
    double size;
    double probability;
  };

  std::vector<Atom> atoms;
  double f_min = 1.0;
  double f_max = 1.0;

  /// Support bounds taken from the smallest and largest atom.
  static JumpLaw from_atoms(std::vector<Atom> atoms) {
    JumpLaw law{std::move(atoms), 0.0, 0.0};
    if (!law.atoms.empty()) {
      auto [lo, hi] = std::minmax_element(law.atoms.begin(), law.atoms.end(),
                                          [](const Atom& a, const Atom& b) { return a.size < b.size; });
      law.f_min = lo->size;
      law.f_max = hi->size;
    }
    return law;
  }

  static JumpLaw degenerate() { return from_atoms({{1.0, 1.0}}); }

  double mean() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.size * a.probability;
    return m;
  }

  void validate() const {
    if (atoms.empty()) throw ConfigError("jump law needs at least one atom", "jump_law.atoms");
    if (!(f_min > 0.0)) throw ConfigError("f_min must be strictly positive", "jump_law.f_min");
    if (!(f_min <= 1.0 && 1.0 <= f_max))
      throw ConfigError("support bounds must satisfy 0 < f_min <= 1 <= f_max", "jump_law");
    double total = 0.0;
    for (const auto& a : atoms) {
      if (!(a.probability > 0.0 && a.probability <= 1.0))
        throw ConfigError("atom probabilities must lie in (0,1]", "jump_law.atoms");
      if (a.size < f_min || a.size > f_max)
        throw ConfigError("atom sizes must lie in [f_min, f_max]", "jump_law.atoms");
      total += a.probability;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw ConfigError("atom probabilities must sum to 1 (got " + std::to_string(total) + ")",
                        "jump_law.atoms");
    if (std::abs(mean() - 1.0) > 1e-12)
      throw ConfigError("jump law must have expectation 1 (got " + std::to_string(mean()) + ")",
                        "jump_law.atoms");
  }

  /// Inverse-CDF draw from a uniform u in [0,1).
  double quantile(double u) const {
    double acc = 0.0;
    for (const auto& a : atoms) {
      acc += a.probability;
      if (u < acc) return a.size;
    }
    return atoms.back().size;
  }
};

enum class StopReason { HitZero, Jumped, HorizonEnd };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::HitZero: return "hit_zero";
    case StopReason::Jumped: return "jumped";
    case StopReason::HorizonEnd: return "horizon_end";
  }
  return "?";
}

struct JumpEvent {
  double time;
  double jump;
};

/// Exact piecewise-linear trajectory: linear drift between events, stopped at
/// `stop_time` (kNever when the path runs to the horizon).
struct EventPath {
  double y0 = 1.0;
  double drift_rate = 0.0;
  std::vector<JumpEvent> events;
  double stop_time = kNever;
  StopReason stop_reason = StopReason::HorizonEnd;
  double horizon = 1.0;

  double active_until() const { return std::min(stop_time, horizon); }
  bool jumped() const { return stop_reason == StopReason::Jumped; }
  /// First jump time, kNever if none.
  double first_jump() const { return events.empty() ? kNever : events.front().time; }
};

inline double reconstruct_value(const EventPath& path, double t) {
  if (!(t >= 0.0 && t <= path.horizon))
    throw DomainError("reconstruct_value: t = " + std::to_string(t) + " outside [0, T]");
  if (path.stop_reason == StopReason::HitZero && t >= path.stop_time) return 0.0;
  const double s = std::min(t, path.stop_time);
  double v = path.y0 + path.drift_rate * s;
  for (const auto& e : path.events) {
    if (e.time > s) break;
    v += e.jump;
  }
  return std::max(v, 0.0);
}

inline double terminal_value(const EventPath& path) { return reconstruct_value(path, path.horizon); }

/// Returns a description of the first violated EventPath invariant, if any.
inline std::optional<std::string> check_invariants(const EventPath& p) {
  if (!std::is_sorted(p.events.begin(), p.events.end(),
                      [](const JumpEvent& a, const JumpEvent& b) { return a.time < b.time; }))
    return "events not ordered";
  for (const auto& e : p.events) {
    if (e.time < 0.0 || e.time > p.horizon) return "event outside [0, T]";
    if (e.time > p.stop_time) return "event after stop time";
  }
  if (p.stop_reason != StopReason::HorizonEnd && !(p.stop_time >= 0.0 && p.stop_time <= p.horizon))
    return "stop time outside [0, T]";
  if (p.stop_reason == StopReason::HitZero) {
    const double pre = p.y0 + p.drift_rate * p.stop_time;
    double jumps = 0.0;
    for (const auto& e : p.events) {
      if (e.time == p.stop_time) return "jump at the zero-hitting time";
      jumps += e.jump;
    }
    if (std::abs(pre + jumps) > 1e-12) return "drift does not reach zero at the hitting time";
  }
  // Between events the value is linear, so checking the left limits at events,
  // the event values themselves and the end point covers the infimum.
  const double end = p.active_until();
  double v = p.y0;
  double last = 0.0;
  for (const auto& e : p.events) {
    v += p.drift_rate * (e.time - last);
    if (v < -1e-12) return "negative value before an event";
    v += e.jump;
    if (v < -1e-12) return "negative value after an event";
    last = e.time;
  }
  v += p.drift_rate * (end - last);
  if (v < -1e-12) return "negative value at stop";
  return std::nullopt;
}

/// Discretised trajectory on a uniform grid.
struct GridPath {
  std::vector<double> times;
  std::vector<double> values;
  bool hit_zero = false;
  std::optional<double> hit_time;

  /// Value at the last grid time <= t.
  double value_at(double t) const {
    if (times.empty() || t < times.front() || t > times.back())
      throw DomainError("GridPath::value_at: t outside the grid");
    auto it = std::upper_bound(times.begin(), times.end(), t);
    return values[static_cast<std::size_t>(it - times.begin()) - 1];
  }
  double terminal() const { return values.back(); }
};

/// Radon-Nikodym weight dP/dQ = Y(T) of a Q-path.
struct PathWeight {
  double w = 0.0;
};

enum class ModelKind { CondExpectation, CompensatedPoisson, CompoundPoisson, StoppedBrownian };

inline std::string_view to_string(ModelKind m) {
  switch (m) {
    case ModelKind::CondExpectation: return "cond_expectation";
    case ModelKind::CompensatedPoisson: return "compensated_poisson";
    case ModelKind::CompoundPoisson: return "compound_poisson";
    case ModelKind::StoppedBrownian: return "stopped_brownian";
  }
  return "?";
}

inline std::optional<ModelKind> model_from_string(std::string_view s) {
  for (auto m : {ModelKind::CondExpectation, ModelKind::CompensatedPoisson, ModelKind::CompoundPoisson,
                 ModelKind::StoppedBrownian})
    if (to_string(m) == s) return m;
  return std::nullopt;
}

inline bool is_jump_model(ModelKind m) {
  return m == ModelKind::CompensatedPoisson || m == ModelKind::CompoundPoisson;
}

struct MarketConfig {
  ModelKind model = ModelKind::CompensatedPoisson;
  // Y-model underneath the claim-price asset when model == CondExpectation.
  ModelKind base_model = ModelKind::CompensatedPoisson;
  double lambda = 1.0;
  std::optional<JumpLaw> jump_law;
  TimeHorizon horizon;
  std::size_t n_paths = 100000;
  std::uint64_t seed = 0;
  std::size_t d = 1;
  // false removes the compensator drift; only used as a negative control.
  bool compensated = true;

  ModelKind y_model() const { return model == ModelKind::CondExpectation ? base_model : model; }

  JumpLaw effective_law() const {
    if (y_model() == ModelKind::CompoundPoisson && jump_law) return *jump_law;
    return JumpLaw::degenerate();
  }

  void validate() const {
    horizon.validate();
    if (n_paths == 0) throw ConfigError("n_paths must be positive", "n_paths");
    if (d == 0) throw ConfigError("d must be positive", "d");
    if (model == ModelKind::CondExpectation && base_model == ModelKind::CondExpectation)
      throw ConfigError("cond_expectation needs a jump or Brownian base model", "base_model");
    if (is_jump_model(y_model())) {
      if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ConfigError("lambda must be positive", "lambda");
      if (lambda * horizon.T < 1.0 - 1e-12)
        throw ConfigError("lambda >= 1/T required so that the compensator can reach zero before T (got lambda = " +
                              std::to_string(lambda) + ", T = " + std::to_string(horizon.T) + ")",
                          "lambda");
    }
    if (y_model() == ModelKind::CompoundPoisson) {
      if (!jump_law) throw ConfigError("compound_poisson requires a jump law", "jump_law");
      jump_law->validate();
    }
  }
};

/// Closed-form predictable integrand. `stopped` is true strictly after the
/// stop time of the first asset's path, so the holding at t uses only
/// information from before t.
using Integrand = std::function<double(std::size_t asset, double t, bool stopped)>;

struct StrategySpec {
  Integrand integrand;
  // Optional closed form of int_a^b H_asset(t) dt over a stretch with a fixed
  // stopping state; nullopt (or an empty function) selects quadrature.
  std::function<std::optional<double>(std::size_t asset, double a, double b, bool stopped)> primitive;
  double x = 0.0;
  double alpha = 0.0;
  std::size_t d = 1;

  std::vector<double> holdings(double t, bool stopped) const {
    std::vector<double> h(d, 0.0);
    if (integrand)
      for (std::size_t i = 0; i < d; ++i) h[i] = integrand(i, t, stopped);
    return h;
  }
};

}  // namespace nupbr
