#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "core_types.hpp"
#include "errors.hpp"
#include "verifiers.hpp"

namespace nupbr {

/// Everything needed to reproduce one experiment.
struct ExperimentConfig {
  MarketConfig market;
  std::string output_dir = "nupbr_out";
  std::vector<std::string> report_formats{"json", "csv", "svg"};
  double confidence = 0.99;
  std::vector<double> probe_times;
  std::size_t hedge_paths = 200000;
  std::vector<std::size_t> hedge_steps{100, 1000, 10000};

  CertificationOptions certification_options(unsigned workers = 0) const {
    CertificationOptions o;
    o.confidence = confidence;
    o.probe_times = probe_times;
    o.workers = workers;
    o.hedge_paths = hedge_paths;
    o.hedge_steps = hedge_steps;
    return o;
  }

  bool wants(const std::string& format) const {
    return std::find(report_formats.begin(), report_formats.end(), format) != report_formats.end();
  }

  void validate() const {
    market.validate();
    if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must lie in (0,1)", "confidence");
    for (std::size_t k = 0; k < probe_times.size(); ++k) {
      if (!(probe_times[k] >= 0.0 && probe_times[k] <= market.horizon.T))
        throw ConfigError("probe times must lie in [0, T]", "probe_times[" + std::to_string(k) + "]");
      if (k > 0 && !(probe_times[k] > probe_times[k - 1]))
        throw ConfigError("probe times must be sorted and distinct", "probe_times[" + std::to_string(k) + "]");
    }
    for (const auto& f : report_formats)
      if (f != "json" && f != "csv" && f != "svg")
        throw ConfigError("unknown report format '" + f + "' (json, csv, svg)", "output.formats");
    if (hedge_paths == 0) throw ConfigError("hedge.paths must be positive", "hedge.paths");
    if (hedge_steps.size() < 2) throw ConfigError("hedge.steps needs at least two grids", "hedge.steps");
  }
};

namespace detail {

inline std::string join_key(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void reject_unknown(const YAML::Node& node, const std::set<std::string>& allowed, const std::string& prefix) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key))
      throw ConfigError("unknown key (line " + std::to_string(kv.first.Mark().line + 1) + ")", join_key(prefix, key));
  }
}

template <class T>
T read(const YAML::Node& node, const std::string& key_path) {
  try {
    return node.as<T>();
  } catch (const YAML::BadConversion&) {
    throw ConfigError("wrong value type (line " + std::to_string(node.Mark().line + 1) + ", column " +
                          std::to_string(node.Mark().column + 1) + ")",
                      key_path);
  }
}

template <class T>
void read_if(const YAML::Node& parent, const std::string& key, const std::string& prefix, T& out) {
  if (const auto n = parent[key]) out = read<T>(n, join_key(prefix, key));
}

inline void require_map(const YAML::Node& n, const std::string& key) {
  if (!n.IsMap()) throw ConfigError("expected a section of key: value entries", key);
}

inline void require_sequence(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence()) throw ConfigError("expected an array", key);
}

inline JumpLaw parse_jump_law(const YAML::Node& n) {
  require_map(n, "jump_law");
  reject_unknown(n, {"atoms", "f_min", "f_max"}, "jump_law");
  const auto atoms = n["atoms"];
  if (!atoms) throw ConfigError("missing required key", "jump_law.atoms");
  require_sequence(atoms, "jump_law.atoms");
  std::vector<JumpLaw::Atom> list;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const std::string key = "jump_law.atoms[" + std::to_string(i) + "]";
    const auto a = atoms[i];
    if (a.IsSequence() && a.size() == 2) {
      list.push_back({read<double>(a[0], key + "[0]"), read<double>(a[1], key + "[1]")});
    } else if (a.IsMap()) {
      reject_unknown(a, {"size", "probability"}, key);
      if (!a["size"] || !a["probability"]) throw ConfigError("atom needs size and probability", key);
      list.push_back({read<double>(a["size"], key + ".size"), read<double>(a["probability"], key + ".probability")});
    } else {
      throw ConfigError("atom must be [size, probability] or {size, probability}", key);
    }
  }
  JumpLaw law = JumpLaw::from_atoms(std::move(list));
  read_if(n, "f_min", "jump_law", law.f_min);
  read_if(n, "f_max", "jump_law", law.f_max);
  return law;
}

}  // namespace detail

/// Parses the YAML experiment format:
///
///   model: compound_poisson        # compensated_poisson | compound_poisson |
///                                  # stopped_brownian | cond_expectation
///   base_model: compensated_poisson  # cond_expectation only
///   lambda: 1.0
///   T: 1.0
///   grid_points: 1001              # Brownian grid incl. both end points
///   n_paths: 100000
///   seed: 42
///   d: 1
///   compensated: true              # false: negative control
///   confidence: 0.99
///   probe_times: [0.0, 0.5, 1.0]   # default: 10 points on [0, T]
///   jump_law:
///     atoms: [[0.9, 0.5], [1.1, 0.5]]
///   hedge: {paths: 200000, steps: [100, 1000, 10000]}
///   output: {dir: out, formats: [json, csv, svg]}
///
/// Throws SyntaxError for malformed text and ConfigError (with the key path)
/// for invalid content.
inline ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw SyntaxError(e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsMap()) throw SyntaxError("top level must be a section of key: value entries", 1, 1);
  detail::reject_unknown(root,
                         {"model", "base_model", "lambda", "T", "grid_points", "n_paths", "seed", "d", "compensated",
                          "confidence", "probe_times", "jump_law", "hedge", "output"},
                         "");

  ExperimentConfig cfg;
  auto& m = cfg.market;
  for (const char* key : {"model", "T", "n_paths", "seed"})
    if (!root[key]) throw ConfigError("missing required key", key);

  const auto model_name = detail::read<std::string>(root["model"], "model");
  const auto model = model_from_string(model_name);
  if (!model) throw ConfigError("unknown model '" + model_name + "'", "model");
  m.model = *model;
  if (const auto b = root["base_model"]) {
    const auto name = detail::read<std::string>(b, "base_model");
    const auto base = model_from_string(name);
    if (!base) throw ConfigError("unknown model '" + name + "'", "base_model");
    m.base_model = *base;
  }
  if (is_jump_model(m.y_model()) && !root["lambda"]) throw ConfigError("missing required key", "lambda");
  detail::read_if(root, "lambda", "", m.lambda);
  detail::read_if(root, "T", "", m.horizon.T);
  detail::read_if(root, "grid_points", "", m.horizon.grid_points);
  detail::read_if(root, "n_paths", "", m.n_paths);
  detail::read_if(root, "seed", "", m.seed);
  detail::read_if(root, "d", "", m.d);
  detail::read_if(root, "compensated", "", m.compensated);
  detail::read_if(root, "confidence", "", cfg.confidence);
  if (const auto p = root["probe_times"]) {
    detail::require_sequence(p, "probe_times");
    cfg.probe_times = detail::read<std::vector<double>>(p, "probe_times");
  }
  if (const auto j = root["jump_law"]) m.jump_law = detail::parse_jump_law(j);
  if (const auto h = root["hedge"]) {
    detail::require_map(h, "hedge");
    detail::reject_unknown(h, {"paths", "steps"}, "hedge");
    detail::read_if(h, "paths", "hedge", cfg.hedge_paths);
    detail::read_if(h, "steps", "hedge", cfg.hedge_steps);
  }
  if (const auto o = root["output"]) {
    detail::require_map(o, "output");
    detail::reject_unknown(o, {"dir", "formats"}, "output");
    detail::read_if(o, "dir", "output", cfg.output_dir);
    detail::read_if(o, "formats", "output", cfg.report_formats);
  }
  if (cfg.probe_times.empty()) cfg.probe_times = default_probe_times(m.horizon.T);
  cfg.validate();
  return cfg;
}

}  // namespace nupbr
