// State encodings for the built-in chain families. Every state type is
// bijective on its reachable space, totally ordered (deterministic iteration
// and reproducible sums) and hashable through state_key().
#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "trapwalk/rng.hpp"

namespace trapwalk {

inline constexpr int kMaxLatticeDim = 8;

/// Point of Z^d, d <= kMaxLatticeDim. Unused coordinates stay zero so that
/// comparison and hashing over the full array are canonical.
struct LatticePoint {
  std::array<int32_t, kMaxLatticeDim> c{};

  friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
};

inline LatticePoint make_point(std::initializer_list<int32_t> coords) {
  LatticePoint p;
  int i = 0;
  for (int32_t v : coords) p.c[static_cast<size_t>(i++)] = v;
  return p;
}

/// Vertex of a rooted binary tree, or a vertex of the chain appended to it.
/// `path` holds one child-choice bit per generation (bit i of word i/64);
/// `chain_offset` k >= 1 addresses the k-th vertex of the chain hanging off
/// the tree vertex described by (depth, path).
struct TreeNode {
  uint32_t depth = 0;
  uint32_t chain_offset = 0;
  std::vector<uint64_t> path;

  bool bit(uint32_t i) const {
    return (path[i / 64] >> (i % 64)) & 1ULL;
  }

  TreeNode child(uint32_t b) const {
    TreeNode out = *this;
    if (out.depth % 64 == 0) out.path.push_back(0);
    if (b) out.path[out.depth / 64] |= (1ULL << (out.depth % 64));
    ++out.depth;
    return out;
  }

  TreeNode parent() const {
    TreeNode out = *this;
    --out.depth;
    out.path[out.depth / 64] &= ~(1ULL << (out.depth % 64));
    if (out.depth % 64 == 0) out.path.pop_back();
    return out;
  }

  TreeNode with_offset(uint32_t k) const {
    TreeNode out = *this;
    out.chain_offset = k;
    return out;
  }

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
  friend std::strong_ordering operator<=>(const TreeNode& a,
                                          const TreeNode& b) {
    if (auto c = a.depth <=> b.depth; c != 0) return c;
    if (auto c = a.path <=> b.path; c != 0) return c;
    return a.chain_offset <=> b.chain_offset;
  }
};

inline TreeNode tree_root() { return TreeNode{}; }

// ---- canonical 64-bit keys (trap draws, hash containers) ----

inline uint64_t state_key(int64_t n) {
  return rng::hash_combine(0x11c9dc5ULL, static_cast<uint64_t>(n));
}

inline uint64_t state_key(const LatticePoint& p) {
  uint64_t h = 0x2545f4914f6cdd1dULL;
  for (int32_t v : p.c)
    h = rng::hash_combine(h, static_cast<uint64_t>(static_cast<int64_t>(v)));
  return h;
}

inline uint64_t state_key(const TreeNode& t) {
  uint64_t h = rng::hash_combine(0x9e3779b9ULL, t.depth);
  h = rng::hash_combine(h, t.chain_offset);
  for (uint64_t w : t.path) h = rng::hash_combine(h, w);
  return h;
}

template <class State>
struct StateHash {
  size_t operator()(const State& s) const {
    return static_cast<size_t>(state_key(s));
  }
};

// ---- radial norms (radial trap fields, ByNormAscending ordering) ----

inline double state_norm(int64_t n) {
  return static_cast<double>(n < 0 ? -n : n);
}

inline double state_norm(const LatticePoint& p) {
  double s = 0;
  for (int32_t v : p.c) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

/// Graph distance from the root.
inline double state_norm(const TreeNode& t) {
  return static_cast<double>(t.depth) + t.chain_offset;
}

// ---- display ----

inline std::string format_state(int64_t n) { return std::to_string(n); }

inline std::string format_state(const LatticePoint& p, int dim = 3) {
  std::string out = "(";
  for (int i = 0; i < dim; ++i) {
    if (i) out += ',';
    out += std::to_string(p.c[static_cast<size_t>(i)]);
  }
  out += ')';
  return out;
}

inline std::string format_state(const TreeNode& t) {
  std::string out;
  out.reserve(t.depth + 8);
  for (uint32_t i = 0; i < t.depth; ++i) out += t.bit(i) ? '1' : '0';
  if (t.depth == 0) out += "root";
  if (t.chain_offset) {
    out += '+';
    out += std::to_string(t.chain_offset);
  }
  return out;
}

}  // namespace trapwalk
