// The built-in chain families. Each chain exposes the same compile-time
// interface: a State type, enumerable transitions in canonical State order,
// a single seeded step, and a first-visit tracking strategy. Chains are
// immutable values and safe to share across workers.
#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "trapwalk/errors.hpp"
#include "trapwalk/rng.hpp"
#include "trapwalk/states.hpp"

namespace trapwalk {

/// How a chain's paths revisit states; picks the cheapest correct
/// first-visit tracker.
enum class FirstVisit {
  kNeverRevisits,   // every state on a path is new
  kMonotoneLine,    // nondecreasing line: new iff != previous state
  kGeneral,         // needs a visited-set
};

template <class C>
concept ChainFamily = requires(const C& c, const typename C::State& s,
                               rng::SplitMix64& g) {
  typename C::State;
  { c.is_valid(s) } -> std::convertible_to<bool>;
  { c.step(s, g) } -> std::same_as<typename C::State>;
  { C::kFirstVisit } -> std::convertible_to<FirstVisit>;
  { c.green_diag_bound() } -> std::same_as<std::optional<double>>;
};

// ---------------------------------------------------------------------------
// Line chains
// ---------------------------------------------------------------------------

/// Lazy forward chain on {2, 3, 4, ...}: p(n, n+1) = 1/n, p(n, n) = 1 - 1/n.
/// Its Green's diagonal g(n, n) = n is unbounded.
class LazyLine {
 public:
  using State = int64_t;
  static constexpr std::string_view kName = "lazy-line";
  static constexpr FirstVisit kFirstVisit = FirstVisit::kMonotoneLine;

  bool is_valid(State n) const { return n >= 2; }

  template <class F>
  void for_each_transition(State n, F&& f) const {
    require_valid(n);
    const double move = 1.0 / static_cast<double>(n);
    f(n, 1.0 - move);
    f(n + 1, move);
  }

  State step(State n, rng::SplitMix64& g) const {
    return g.next_u01() < 1.0 / static_cast<double>(n) ? n + 1 : n;
  }

  std::optional<double> green_diag_bound() const { return std::nullopt; }
  State default_start() const { return 2; }

 private:
  void require_valid(State n) const {
    if (!is_valid(n))
      throw EncodingError("lazy-line state must be an integer >= 2, got " +
                          std::to_string(n));
  }
};

/// Deterministic drift on {0, 1, 2, ...}: p(n, n+1) = 1. Paths never revisit
/// a state, so g(x, x) = 1 everywhere.
class DriftLine {
 public:
  using State = int64_t;
  static constexpr std::string_view kName = "drift-line";
  static constexpr FirstVisit kFirstVisit = FirstVisit::kNeverRevisits;

  bool is_valid(State n) const { return n >= 0; }

  template <class F>
  void for_each_transition(State n, F&& f) const {
    require_valid(n);
    f(n + 1, 1.0);
  }

  State step(State n, rng::SplitMix64&) const { return n + 1; }

  std::optional<double> green_diag_bound() const { return 1.0; }
  State default_start() const { return 0; }

 private:
  void require_valid(State n) const {
    if (!is_valid(n))
      throw EncodingError("drift-line state must be a nonnegative integer, got " +
                          std::to_string(n));
  }
};

// ---------------------------------------------------------------------------
// Lattice walk
// ---------------------------------------------------------------------------

/// Simple random walk on Z^d: each of the 2d unit neighbors with
/// probability 1/(2d).
class SimpleWalkZd {
 public:
  using State = LatticePoint;
  static constexpr std::string_view kName = "simple-walk-zd";
  static constexpr FirstVisit kFirstVisit = FirstVisit::kGeneral;

  explicit SimpleWalkZd(int dim) : dim_(dim) {
    if (dim < 1 || dim > kMaxLatticeDim)
      throw EncodingError("simple-walk dimension must be in [1, " +
                          std::to_string(kMaxLatticeDim) + "], got " +
                          std::to_string(dim));
  }

  int dim() const { return dim_; }

  bool is_valid(const State& p) const {
    for (int i = dim_; i < kMaxLatticeDim; ++i)
      if (p.c[static_cast<size_t>(i)] != 0) return false;
    return true;
  }

  template <class F>
  void for_each_transition(const State& p, F&& f) const {
    require_valid(p);
    std::vector<State> nbrs;
    nbrs.reserve(static_cast<size_t>(2 * dim_));
    for (int i = 0; i < dim_; ++i) {
      for (int32_t d : {-1, +1}) {
        State q = p;
        q.c[static_cast<size_t>(i)] += d;
        nbrs.push_back(q);
      }
    }
    std::sort(nbrs.begin(), nbrs.end());
    const double prob = 1.0 / static_cast<double>(2 * dim_);
    for (const State& q : nbrs) f(q, prob);
  }

  State step(const State& p, rng::SplitMix64& g) const {
    const uint64_t r = g.next_below(static_cast<uint64_t>(2 * dim_));
    State q = p;
    q.c[r >> 1] += (r & 1) ? 1 : -1;
    return q;
  }

  std::optional<double> green_diag_bound() const {
    // Watson's constant for d = 3 is 1.51639; 1.52 is a valid bound.
    if (dim_ == 3) return 1.52;
    return std::nullopt;
  }

  State default_start() const { return LatticePoint{}; }

 private:
  void require_valid(const State& p) const {
    if (!is_valid(p))
      throw EncodingError(
          "lattice point has nonzero coordinates beyond dimension " +
          std::to_string(dim_));
  }

  int dim_;
};

// ---------------------------------------------------------------------------
// Trees
// ---------------------------------------------------------------------------

/// Walk on the infinite rooted binary tree that always moves away from the
/// root, choosing either child with probability 1/2. Reducible on purpose;
/// g(root, v) = 2^-n at generation n.
class DriftTree {
 public:
  using State = TreeNode;
  static constexpr std::string_view kName = "drift-tree";
  static constexpr FirstVisit kFirstVisit = FirstVisit::kNeverRevisits;

  bool is_valid(const State& t) const {
    return t.chain_offset == 0 && t.path.size() == (t.depth + 63) / 64;
  }

  template <class F>
  void for_each_transition(const State& t, F&& f) const {
    require_valid(t);
    f(t.child(0), 0.5);
    f(t.child(1), 0.5);
  }

  State step(const State& t, rng::SplitMix64& g) const {
    return t.child(static_cast<uint32_t>(g.next() & 1ULL));
  }

  std::optional<double> green_diag_bound() const { return 1.0; }
  State default_start() const { return tree_root(); }

 private:
  void require_valid(const State& t) const {
    if (!is_valid(t))
      throw EncodingError("drift-tree state must be a tree vertex (no chain offset)");
  }
};

/// Classification of a TreeWithChains vertex.
struct TreeVertexClass {
  enum Kind { kTreeInterior, kChainInterior, kChainEnd } kind;
  uint32_t n = 0;  // generation of the host vertex, set for chain ends
};

/// Simple random walk on the rooted binary tree with a single chain of
/// length n appended at every generation-n vertex (n > 0). The terminal
/// chain vertices are where the ChainEnd trap field lives.
class TreeWithChains {
 public:
  using State = TreeNode;
  static constexpr std::string_view kName = "tree-with-chains";
  static constexpr FirstVisit kFirstVisit = FirstVisit::kGeneral;

  bool is_valid(const State& t) const {
    return t.chain_offset <= t.depth &&
           t.path.size() == (t.depth + 63) / 64;
  }

  static TreeVertexClass classify(const State& t) {
    if (t.chain_offset == 0) return {TreeVertexClass::kTreeInterior, 0};
    if (t.chain_offset < t.depth) return {TreeVertexClass::kChainInterior, 0};
    return {TreeVertexClass::kChainEnd, t.depth};
  }

  std::vector<State> neighbors(const State& t) const {
    require_valid(t);
    std::vector<State> out;
    if (t.chain_offset == 0) {
      if (t.depth == 0) {
        out = {t.child(0), t.child(1)};
      } else {
        out = {t.parent(), t.with_offset(1), t.child(0), t.child(1)};
      }
    } else if (t.chain_offset == t.depth) {  // chain end
      out = {t.with_offset(t.chain_offset - 1)};
    } else {
      out = {t.with_offset(t.chain_offset - 1),
             t.with_offset(t.chain_offset + 1)};
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  template <class F>
  void for_each_transition(const State& t, F&& f) const {
    const std::vector<State> nbrs = neighbors(t);
    const double prob = 1.0 / static_cast<double>(nbrs.size());
    for (const State& q : nbrs) f(q, prob);
  }

  State step(const State& t, rng::SplitMix64& g) const {
    // Mirrors neighbors() without materializing the sorted vector.
    if (t.chain_offset == 0) {
      if (t.depth == 0) return t.child(static_cast<uint32_t>(g.next() & 1ULL));
      switch (g.next_below(4)) {
        case 0: return t.parent();
        case 1: return t.with_offset(1);
        case 2: return t.child(0);
        default: return t.child(1);
      }
    }
    if (t.chain_offset == t.depth) return t.with_offset(t.chain_offset - 1);
    return (g.next() & 1ULL) ? t.with_offset(t.chain_offset + 1)
                             : t.with_offset(t.chain_offset - 1);
  }

  std::optional<double> green_diag_bound() const { return std::nullopt; }
  State default_start() const { return tree_root(); }

 private:
  void require_valid(const State& t) const {
    if (!is_valid(t))
      throw EncodingError("tree-with-chains state has chain offset beyond its host generation");
  }
};

static_assert(ChainFamily<LazyLine>);
static_assert(ChainFamily<DriftLine>);
static_assert(ChainFamily<SimpleWalkZd>);
static_assert(ChainFamily<DriftTree>);
static_assert(ChainFamily<TreeWithChains>);

// ---------------------------------------------------------------------------
// First-visit tracking
// ---------------------------------------------------------------------------

/// Tracks tau(X_i) = i flags along a path in order, starting at X_0.
template <class Chain>
class FirstVisitTracker {
 public:
  using State = typename Chain::State;

  bool observe(const State& s) {
    switch (Chain::kFirstVisit) {
      case FirstVisit::kNeverRevisits:
        return true;
      case FirstVisit::kMonotoneLine: {
        const bool fresh = !have_prev_ || !(s == prev_);
        prev_ = s;
        have_prev_ = true;
        return fresh;
      }
      case FirstVisit::kGeneral:
        return seen_.insert(s).second;
    }
    return true;  // unreachable
  }

 private:
  State prev_{};
  bool have_prev_ = false;
  std::unordered_set<State, StateHash<State>> seen_;
};

}  // namespace trapwalk
