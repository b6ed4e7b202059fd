#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "core_types.hpp"
#include "model_zoo.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace nupbr {

/// Functional values f(path) paired with the weights Y(T) of their Q-paths.
struct WeightedSample {
  std::vector<double> functional_values;
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
};

/// E^P[f] = E^Q[Y(T) f] estimated by the plain mean of w_i f_i. Weights have
/// known Q-mean 1, so no renormalisation is applied. Paths with w_i = 0 do not
/// contribute even if f_i is not finite there.
///
/// P is carried by {w > 0}; a functional that takes one value c on every
/// positive-weight path is P-a.s. equal to c and is returned exactly with zero
/// standard error.
inline Estimate p_expectation(const WeightedSample& s, double confidence = 0.99) {
  if (s.weights.empty()) throw std::invalid_argument("p_expectation: empty sample");
  if (s.functional_values.size() != s.weights.size())
    throw std::invalid_argument("p_expectation: values and weights differ in length");
  std::optional<double> constant;
  bool is_constant = true;
  for (std::size_t i = 0; i < s.size() && is_constant; ++i) {
    if (s.weights[i] < 0.0) throw std::invalid_argument("p_expectation: negative weight");
    if (s.weights[i] == 0.0) continue;
    if (!constant) constant = s.functional_values[i];
    else if (s.functional_values[i] != *constant) is_constant = false;
  }
  if (is_constant && constant) return Estimate{*constant, 0.0, s.size(), confidence};
  std::vector<double> prod(s.size());
  for (std::size_t i = 0; i < prod.size(); ++i)
    prod[i] = s.weights[i] == 0.0 ? 0.0 : s.weights[i] * s.functional_values[i];
  return estimate_mean(prod, confidence);
}

/// P-probability of an event given its indicator on each Q-path.
inline Estimate p_probability(std::span<const double> indicator, std::span<const double> weights,
                              double confidence = 0.99) {
  WeightedSample s{{indicator.begin(), indicator.end()}, {weights.begin(), weights.end()}};
  for (double v : s.functional_values)
    if (v != 0.0 && v != 1.0) throw std::invalid_argument("p_probability: indicator must be 0 or 1");
  Estimate e = p_expectation(s, confidence);
  e.lower_clamp = 0.0;
  e.upper_clamp = 1.0;
  return e;
}

/// Almost-sure bound on Y(T) for first-jump Poisson models: 1 - lambda rho + size <= 1 + f_max.
inline double terminal_bound(const MarketConfig& cfg) { return 1.0 + cfg.effective_law().f_max; }

struct DirectPSample {
  std::vector<ModelOutput> paths;
  std::size_t proposals = 0;

  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(paths.size()) / static_cast<double>(proposals);
  }
};

/// Draws n paths from P directly: Q-proposals accepted with probability
/// Y(T) / (1 + f_max). Proposal k uses stream (seed, k) with its own
/// acceptance substream, and accepted proposals are kept in index order, so
/// the sample does not depend on the worker count.
///
/// `stream_offset` shifts proposal indices so the sample can be made
/// independent of a Q-sample drawn with the same seed.
inline DirectPSample sample_under_p_direct(const MarketConfig& cfg, std::size_t n, unsigned workers = 0,
                                           std::uint64_t stream_offset = std::uint64_t{1} << 40) {
  cfg.validate();
  if (!is_jump_model(cfg.model) || !cfg.compensated)
    throw ConfigError("direct P sampling is available for compensated jump models only", "model");
  const double bound = terminal_bound(cfg);
  DirectPSample out;
  out.paths.reserve(n);
  std::size_t next = 0;
  while (out.paths.size() < n) {
    const std::size_t remaining = n - out.paths.size();
    const std::size_t batch = std::max<std::size_t>(1024, remaining * 2 + remaining / 4);
    std::vector<ModelOutput> proposals(batch);
    std::vector<unsigned char> accept(batch);
    parallel_for(batch, workers, [&](std::size_t j) {
      const std::uint64_t k = stream_offset + next + j;
      proposals[j] = simulate(cfg, k);
      PathStream u(cfg.seed, k, Substream::Accept);
      accept[j] = u.uniform() * bound < proposals[j].y_terminal() ? 1 : 0;
    });
    for (std::size_t j = 0; j < batch && out.paths.size() < n; ++j) {
      ++out.proposals;
      if (accept[j]) out.paths.push_back(std::move(proposals[j]));
    }
    next += batch;
  }
  return out;
}

}  // namespace nupbr
