// Trap-probability fields q : S -> [0, 1) and the quenched/annealed trap
// decisions built on them. Quenched draws are frozen per realization;
// annealed draws are keyed by (seed, time, state) so every step is fresh.
// All draws are hash-derived: random access, no stored trap sets.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>

#include "trapwalk/chains.hpp"
#include "trapwalk/predicates.hpp"
#include "trapwalk/rng.hpp"
#include "trapwalk/states.hpp"

namespace trapwalk {

namespace detail {
inline void require_trap_prob(double q, const char* what) {
  if (!(q >= 0.0) || q >= 1.0)
    throw std::invalid_argument(std::string(what) +
                                " must lie in [0, 1), got " + std::to_string(q));
}
}  // namespace detail

/// q identically zero.
struct ZeroField {
  template <class State>
  double q(const State&) const { return 0.0; }
};

/// q = c_in on a member set, c_out elsewhere. c_out defaults to zero, which
/// is the constant-on-a-set field; a nonzero c_out gives two-level fields
/// such as the alternating-shell counterexample.
template <class Pred>
class ConstantOnSetField {
 public:
  ConstantOnSetField(Pred pred, double c_in, double c_out = 0.0)
      : pred_(std::move(pred)), c_in_(c_in), c_out_(c_out) {
    detail::require_trap_prob(c_in, "constant-on-set c_in");
    detail::require_trap_prob(c_out, "constant-on-set c_out");
  }

  template <class State>
  double q(const State& s) const {
    return pred_.contains(s) ? c_in_ : c_out_;
  }

  const Pred& pred() const { return pred_; }

 private:
  Pred pred_;
  double c_in_, c_out_;
};

/// Radial field q(x) = min(cap, (shift + |x|)^-beta). The cap keeps the
/// codomain inside [0, 1) near the origin; shift = 1 gives the
/// (1 + |x|)^-beta family.
class RadialField {
 public:
  RadialField(double beta, double cap, double shift = 0.0)
      : beta_(beta), cap_(cap), shift_(shift) {
    detail::require_trap_prob(cap, "radial cap");
    if (!(beta > 0)) throw std::invalid_argument("radial exponent must be positive");
    if (!(shift >= 0)) throw std::invalid_argument("radial shift must be nonnegative");
  }

  template <class State>
  double q(const State& s) const {
    const double r = shift_ + state_norm(s);
    if (r <= 0.0) return cap_;
    return std::min(cap_, std::pow(r, -beta_));
  }

 private:
  double beta_, cap_, shift_;
};

/// q = min(1/n, cap) at the terminal vertex of the length-n chain appended
/// at a generation-n tree vertex, zero elsewhere. The cap handles n = 1,
/// where 1/n would leave the codomain.
class ChainEndField {
 public:
  explicit ChainEndField(double cap = 0.5) : cap_(cap) {
    detail::require_trap_prob(cap, "chain-end cap");
  }

  double q(const TreeNode& t) const {
    const TreeVertexClass c = TreeWithChains::classify(t);
    if (c.kind != TreeVertexClass::kChainEnd) return 0.0;
    return std::min(cap_, 1.0 / static_cast<double>(c.n));
  }

 private:
  double cap_;
};

/// Explicit per-state table, zero off the table. Handy for the tiny
/// brute-forceable instances.
template <class State>
class TableField {
 public:
  explicit TableField(std::map<State, double> values)
      : values_(std::move(values)) {
    for (const auto& [s, v] : values_) detail::require_trap_prob(v, "table entry");
  }

  double q(const State& s) const {
    auto it = values_.find(s);
    return it == values_.end() ? 0.0 : it->second;
  }

 private:
  std::map<State, double> values_;
};

template <class F, class State>
concept TrapFieldFor = requires(const F& f, const State& s) {
  { f.q(s) } -> std::convertible_to<double>;
};

// ---------------------------------------------------------------------------
// Trap decisions
// ---------------------------------------------------------------------------

namespace detail {
inline constexpr uint64_t kQuenchedSalt = 0x7170656e63686564ULL;
inline constexpr uint64_t kAnnealedSalt = 0x616e6e65616c6564ULL;
}  // namespace detail

/// Stateless quenched decision: does `x` belong to the frozen trap set of
/// the realization with this seed? Pure in (seed, x).
template <class State, TrapFieldFor<State> Field>
bool quenched_draw(const Field& field, uint64_t realization_seed,
                   const State& x) {
  const double q = field.q(x);
  if (q <= 0.0) return false;
  const uint64_t key = rng::hash_combine(
      rng::hash_combine(detail::kQuenchedSalt, realization_seed), state_key(x));
  return rng::bernoulli_from_key(key, q);
}

/// One frozen trap assignment. Memoizes per-state statuses; draws are pure
/// in (seed, state), so the memo and quenched_draw always agree. Confine a
/// realization to a single worker.
template <class Chain, TrapFieldFor<typename Chain::State> Field>
class TrapRealization {
 public:
  using State = typename Chain::State;

  TrapRealization(const Field& field, uint64_t seed)
      : field_(&field), seed_(seed) {}

  uint64_t seed() const { return seed_; }

  bool status(const State& x) {
    auto [it, fresh] = memo_.try_emplace(x, false);
    if (fresh) it->second = quenched_draw(*field_, seed_, x);
    return it->second;
  }

 private:
  const Field* field_;
  uint64_t seed_;
  std::unordered_map<State, bool, StateHash<State>> memo_;
};

/// Annealed decision: is `x` a trap at time `t`? Distinct times are
/// independent draws; the full key (seed, t, x) is deterministic.
template <class State, TrapFieldFor<State> Field>
bool annealed_status(const Field& field, const State& x, int64_t t,
                     uint64_t master_seed) {
  const double q = field.q(x);
  if (q <= 0.0) return false;
  uint64_t key = rng::hash_combine(detail::kAnnealedSalt, master_seed);
  key = rng::hash_combine(key, static_cast<uint64_t>(t));
  key = rng::hash_combine(key, state_key(x));
  return rng::bernoulli_from_key(key, q);
}

}  // namespace trapwalk
