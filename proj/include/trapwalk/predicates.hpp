// Set-membership predicates over chain states. Used as trap-field supports,
// hitting-probability targets and annulus-density sets. All are pure values.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "trapwalk/errors.hpp"
#include "trapwalk/states.hpp"

namespace trapwalk {

/// Union of lattice balls B((0,0,2^n), 2^(n/2)) for n = 1..n_max — the
/// transient-but-heavy target set in Z^3.
struct BlobSet {
  int n_max = 8;

  bool contains(const LatticePoint& p) const {
    for (int n = 1; n <= n_max; ++n) {
      const double cz = std::exp2(n);       // center (0, 0, 2^n)
      const double r = std::exp2(0.5 * n);  // radius 2^(n/2)
      double s = 0;
      for (int i = 0; i < kMaxLatticeDim; ++i) {
        double d = static_cast<double>(p.c[static_cast<size_t>(i)]);
        if (i == 2) d -= cz;
        s += d * d;
      }
      if (s <= r * r) return true;
    }
    return false;
  }

  /// Membership in the n-th ball alone.
  bool in_ball(const LatticePoint& p, int n) const {
    const double cz = std::exp2(n);
    const double r = std::exp2(0.5 * n);
    double s = 0;
    for (int i = 0; i < kMaxLatticeDim; ++i) {
      double d = static_cast<double>(p.c[static_cast<size_t>(i)]);
      if (i == 2) d -= cz;
      s += d * d;
    }
    return s <= r * r;
  }
};

/// Euclidean ball around an arbitrary center.
struct BallSet {
  LatticePoint center;
  double radius = 1.0;

  bool contains(const LatticePoint& p) const {
    double s = 0;
    for (size_t i = 0; i < kMaxLatticeDim; ++i) {
      const double d =
          static_cast<double>(p.c[i]) - static_cast<double>(center.c[i]);
      s += d * d;
    }
    return s <= radius * radius;
  }
};

/// States whose integer shell index floor(|x|) has the given parity.
struct ShellParitySet {
  int parity = 0;  // 0 = even shells, 1 = odd shells

  bool contains(const LatticePoint& p) const {
    const auto shell = static_cast<int64_t>(std::floor(state_norm(p)));
    return (shell & 1) == parity;
  }
};

template <class State>
struct ExplicitSet {
  std::set<State> members;
  bool contains(const State& s) const { return members.count(s) > 0; }
};

struct EverythingSet {
  template <class State>
  bool contains(const State&) const { return true; }
};

struct NothingSet {
  template <class State>
  bool contains(const State&) const { return false; }
};

/// Type-erased predicate for the config-driven layer; core operations take
/// the concrete predicate types directly.
template <class State>
struct NamedPredicate {
  std::string name;
  std::function<bool(const State&)> fn;

  bool contains(const State& s) const { return fn(s); }
};

}  // namespace trapwalk
