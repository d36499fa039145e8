// Experiment configuration: JSON in, validated typed spec out. Invalid
// configs are rejected with the full list of offending fields.
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trapwalk/errors.hpp"

namespace trapwalk {

enum class ChainKind { kLazyLine, kDriftLine, kSimpleWalkZd, kDriftTree, kTreeWithChains };
enum class FieldKind { kZero, kConstantOnSet, kRadial, kChainEnd, kTable };
enum class PredKind { kBlob, kShellParity, kBall, kAll, kNone };

struct PredicateSpec {
  PredKind kind = PredKind::kAll;
  int n_max = 8;                  // blob
  int parity = 0;                 // shell-parity
  std::vector<int32_t> center;    // ball
  double radius = 1.0;            // ball
};

struct FieldSpec {
  FieldKind kind = FieldKind::kZero;
  double c_in = 0.3;
  double c_out = 0.0;
  double beta = 2.0;
  double cap = 0.5;
  double shift = 0.0;
  PredicateSpec pred;
  std::map<int64_t, double> table;  // line-state tables only
};

struct ChainSpec {
  ChainKind kind = ChainKind::kLazyLine;
  int dim = 3;
};

/// One experiment run. Start states are chain-specific: integer for the
/// line chains, coordinate array for the lattice walk, root for trees.
struct ExperimentConfig {
  ChainSpec chain;
  FieldSpec field;
  std::optional<int64_t> x0_line;
  std::optional<std::vector<int32_t>> x0_lattice;

  std::vector<std::string> modes = {"quenched", "annealed"};
  std::vector<std::string> estimators = {"direct", "exponential"};
  std::vector<int64_t> horizons = {1000, 10000};
  std::vector<double> radii = {10.0};
  uint64_t n_samples = 10000;
  uint64_t seed = 1;
  double alpha = 0.5;
  double reg_c = 2.0;
  double reg_c_prime = 6.0;
  uint64_t regularity_pairs = 4000;
  double z = 4.0;  // confidence half-width multiplier, mean +/- z*SE
  unsigned workers = 4;
  std::string ordering = "norm-asc";  // criterion sum ordering
  std::string out_dir = "out";
};

namespace detail {

inline const std::map<std::string, ChainKind>& chain_kind_names() {
  static const std::map<std::string, ChainKind> m = {
      {"lazy-line", ChainKind::kLazyLine},
      {"drift-line", ChainKind::kDriftLine},
      {"simple-walk-zd", ChainKind::kSimpleWalkZd},
      {"drift-tree", ChainKind::kDriftTree},
      {"tree-with-chains", ChainKind::kTreeWithChains}};
  return m;
}

inline const std::map<std::string, FieldKind>& field_kind_names() {
  static const std::map<std::string, FieldKind> m = {
      {"zero", FieldKind::kZero},
      {"constant-on-set", FieldKind::kConstantOnSet},
      {"radial", FieldKind::kRadial},
      {"chain-end", FieldKind::kChainEnd},
      {"table", FieldKind::kTable}};
  return m;
}

inline const std::map<std::string, PredKind>& pred_kind_names() {
  static const std::map<std::string, PredKind> m = {
      {"blob", PredKind::kBlob},
      {"shell-parity", PredKind::kShellParity},
      {"ball", PredKind::kBall},
      {"all", PredKind::kAll},
      {"none", PredKind::kNone}};
  return m;
}

}  // namespace detail

/// Parses and validates a config document. Collects every offence before
/// throwing, so the error lists all bad fields at once.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  std::vector<std::string> bad;

  auto fail = [&](const std::string& field) { bad.push_back(field); };

  if (j.contains("chain")) {
    const auto& c = j.at("chain");
    const std::string kind = c.value("kind", "lazy-line");
    auto it = detail::chain_kind_names().find(kind);
    if (it == detail::chain_kind_names().end())
      fail("chain.kind");
    else
      cfg.chain.kind = it->second;
    cfg.chain.dim = c.value("dim", 3);
    if (cfg.chain.dim < 1 || cfg.chain.dim > 8) fail("chain.dim");
  }

  if (j.contains("field")) {
    const auto& f = j.at("field");
    const std::string kind = f.value("kind", "zero");
    auto it = detail::field_kind_names().find(kind);
    if (it == detail::field_kind_names().end())
      fail("field.kind");
    else
      cfg.field.kind = it->second;
    cfg.field.c_in = f.value("c_in", cfg.field.c_in);
    cfg.field.c_out = f.value("c_out", cfg.field.c_out);
    cfg.field.beta = f.value("beta", cfg.field.beta);
    cfg.field.cap = f.value("cap", cfg.field.cap);
    cfg.field.shift = f.value("shift", cfg.field.shift);
    if (!(cfg.field.c_in >= 0 && cfg.field.c_in < 1)) fail("field.c_in");
    if (!(cfg.field.c_out >= 0 && cfg.field.c_out < 1)) fail("field.c_out");
    if (!(cfg.field.cap >= 0 && cfg.field.cap < 1)) fail("field.cap");
    if (!(cfg.field.beta > 0)) fail("field.beta");
    if (!(cfg.field.shift >= 0)) fail("field.shift");
    if (f.contains("predicate")) {
      const auto& p = f.at("predicate");
      const std::string pk = p.value("kind", "all");
      auto pit = detail::pred_kind_names().find(pk);
      if (pit == detail::pred_kind_names().end())
        fail("field.predicate.kind");
      else
        cfg.field.pred.kind = pit->second;
      cfg.field.pred.n_max = p.value("n_max", 8);
      cfg.field.pred.parity = p.value("parity", 0);
      cfg.field.pred.radius = p.value("radius", 1.0);
      if (p.contains("center"))
        cfg.field.pred.center = p.at("center").get<std::vector<int32_t>>();
      if (cfg.field.pred.n_max < 1 || cfg.field.pred.n_max > 30)
        fail("field.predicate.n_max");
      if (cfg.field.pred.parity != 0 && cfg.field.pred.parity != 1)
        fail("field.predicate.parity");
      if (!(cfg.field.pred.radius >= 0)) fail("field.predicate.radius");
    }
    if (f.contains("table")) {
      for (const auto& [key, value] : f.at("table").items()) {
        const double qv = value.get<double>();
        int64_t state = 0;
        bool key_ok = !key.empty();
        if (key_ok) {
          try {
            size_t used = 0;
            state = std::stoll(key, &used);
            key_ok = used == key.size();
          } catch (const std::exception&) {
            key_ok = false;
          }
        }
        if (!key_ok || !(qv >= 0 && qv < 1)) {
          fail("field.table[" + key + "]");
          continue;
        }
        cfg.field.table[state] = qv;
      }
    }
  }

  if (j.contains("x0")) {
    const auto& x = j.at("x0");
    if (x.is_number_integer())
      cfg.x0_line = x.get<int64_t>();
    else if (x.is_array())
      cfg.x0_lattice = x.get<std::vector<int32_t>>();
    else if (!(x.is_string() && x.get<std::string>() == "root"))
      fail("x0");
  }

  if (j.contains("modes")) cfg.modes = j.at("modes").get<std::vector<std::string>>();
  if (cfg.modes.empty()) fail("modes");
  for (const auto& m : cfg.modes)
    if (m != "quenched" && m != "annealed") fail("modes");
  if (j.contains("estimators"))
    cfg.estimators = j.at("estimators").get<std::vector<std::string>>();
  if (cfg.estimators.empty()) fail("estimators");
  for (const auto& e : cfg.estimators)
    if (e != "direct" && e != "exponential") fail("estimators");

  if (j.contains("horizons"))
    cfg.horizons = j.at("horizons").get<std::vector<int64_t>>();
  if (cfg.horizons.empty()) fail("horizons");
  for (int64_t h : cfg.horizons)
    if (h < 0) fail("horizons");
  if (j.contains("radii")) cfg.radii = j.at("radii").get<std::vector<double>>();
  if (cfg.radii.empty()) fail("radii");
  for (double r : cfg.radii)
    if (!(r > 0)) fail("radii");

  cfg.n_samples = j.value("n_samples", cfg.n_samples);
  if (cfg.n_samples < 1) fail("n_samples");
  cfg.seed = j.value("seed", cfg.seed);
  cfg.alpha = j.value("alpha", cfg.alpha);
  if (!(cfg.alpha > 0 && cfg.alpha < 1)) fail("alpha");
  cfg.reg_c = j.value("C", cfg.reg_c);
  cfg.reg_c_prime = j.value("C_prime", cfg.reg_c_prime);
  if (!(cfg.reg_c > 1)) fail("C");
  if (!(cfg.reg_c_prime > 1)) fail("C_prime");
  cfg.regularity_pairs = j.value("regularity_pairs", cfg.regularity_pairs);
  cfg.z = j.value("z", cfg.z);
  if (!(cfg.z > 0)) fail("z");
  cfg.workers = j.value("workers", cfg.workers);
  if (cfg.workers < 1 || cfg.workers > 256) fail("workers");
  cfg.ordering = j.value("ordering", cfg.ordering);
  if (cfg.ordering != "norm-asc" && cfg.ordering != "greens-desc")
    fail("ordering");
  cfg.out_dir = j.value("out_dir", cfg.out_dir);

  if (!bad.empty()) {
    std::string msg = "invalid config fields:";
    for (const auto& b : bad) msg += " " + b;
    throw ConfigError(msg, bad);
  }
  return cfg;
}

}  // namespace trapwalk
