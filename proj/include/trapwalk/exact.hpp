// Exact computations on finite killed truncations: Green's functions by
// sweep solves, the annealed trapping fixed point with two-sided
// bracketing, superlevel sets, and a brute-force quenched oracle for tiny
// instances.
//
// Killing with boundary value 0 assumes no trapping outside the truncation
// (lower bracket for pi~); boundary value 1 assumes certain trapping
// outside (upper bracket). The gap between the two is the reported
// truncation error.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "trapwalk/chains.hpp"
#include "trapwalk/errors.hpp"
#include "trapwalk/traps.hpp"

namespace trapwalk {

enum class BoundaryMode { kKilledZero, kKilledOne };

inline const char* to_string(BoundaryMode m) {
  return m == BoundaryMode::kKilledZero ? "killed-zero" : "killed-one";
}

/// Finite interior state set in canonical order. Anything reachable in one
/// step from an interior state but absent from `states` is boundary and
/// carries the mode's killing value.
template <ChainFamily Chain>
struct Truncation {
  using State = typename Chain::State;

  std::vector<State> states;
  std::unordered_map<State, int32_t, StateHash<State>> index;
  BoundaryMode boundary_mode = BoundaryMode::kKilledZero;
  std::string provenance;

  bool contains(const State& s) const { return index.count(s) > 0; }

  int32_t index_of(const State& s) const {
    auto it = index.find(s);
    return it == index.end() ? -1 : it->second;
  }
};

template <ChainFamily Chain>
Truncation<Chain> make_truncation(std::vector<typename Chain::State> states,
                                  BoundaryMode mode, std::string provenance) {
  Truncation<Chain> t;
  std::sort(states.begin(), states.end());
  states.erase(std::unique(states.begin(), states.end()), states.end());
  t.states = std::move(states);
  t.index.reserve(t.states.size());
  for (size_t i = 0; i < t.states.size(); ++i)
    t.index.emplace(t.states[i], static_cast<int32_t>(i));
  t.boundary_mode = mode;
  t.provenance = std::move(provenance);
  return t;
}

/// Integer interval [lo, hi] for the line chains.
template <ChainFamily Chain>
  requires std::same_as<typename Chain::State, int64_t>
Truncation<Chain> make_range_truncation(const Chain&, int64_t lo, int64_t hi,
                                        BoundaryMode mode) {
  std::vector<int64_t> states;
  states.reserve(static_cast<size_t>(hi - lo + 1));
  for (int64_t n = lo; n <= hi; ++n) states.push_back(n);
  return make_truncation<Chain>(std::move(states), mode,
                                "range[" + std::to_string(lo) + "," +
                                    std::to_string(hi) + "]");
}

/// Euclidean ball of lattice points around `center`.
inline Truncation<SimpleWalkZd> make_ball_truncation(const SimpleWalkZd& chain,
                                                     const LatticePoint& center,
                                                     double radius,
                                                     BoundaryMode mode) {
  std::vector<LatticePoint> states;
  const auto r = static_cast<int32_t>(std::floor(radius));
  std::vector<int32_t> offset(static_cast<size_t>(chain.dim()), -r);
  const double r2 = radius * radius;
  while (true) {
    double s = 0;
    for (int32_t o : offset) s += static_cast<double>(o) * o;
    if (s <= r2) {
      LatticePoint p = center;
      for (int i = 0; i < chain.dim(); ++i) p.c[static_cast<size_t>(i)] += offset[static_cast<size_t>(i)];
      states.push_back(p);
    }
    int i = 0;
    for (; i < chain.dim(); ++i) {
      if (++offset[static_cast<size_t>(i)] <= r) break;
      offset[static_cast<size_t>(i)] = -r;
    }
    if (i == chain.dim()) break;
  }
  return make_truncation<SimpleWalkZd>(
      std::move(states), mode, "ball[r=" + std::to_string(radius) + "]");
}

namespace detail {
template <class Chain>
void collect_tree_vertices(std::vector<TreeNode>& out, const TreeNode& node,
                           uint32_t max_gen, bool with_chains) {
  out.push_back(node);
  if (with_chains)
    for (uint32_t k = 1; k <= node.depth; ++k) out.push_back(node.with_offset(k));
  if (node.depth < max_gen) {
    collect_tree_vertices<Chain>(out, node.child(0), max_gen, with_chains);
    collect_tree_vertices<Chain>(out, node.child(1), max_gen, with_chains);
  }
}
}  // namespace detail

/// Tree vertices of generation <= max_gen; for TreeWithChains the appended
/// chains of every included vertex come along in full.
template <ChainFamily Chain>
  requires std::same_as<typename Chain::State, TreeNode>
Truncation<Chain> make_generation_truncation(const Chain&, uint32_t max_gen,
                                             BoundaryMode mode) {
  std::vector<TreeNode> states;
  detail::collect_tree_vertices<Chain>(
      states, tree_root(), max_gen,
      std::same_as<Chain, TreeWithChains>);
  return make_truncation<Chain>(std::move(states), mode,
                                "generations[0," + std::to_string(max_gen) + "]");
}

/// Radius means interval length on the line chains, Euclidean radius on the
/// lattice and generation depth on trees.
template <ChainFamily Chain>
Truncation<Chain> make_radius_truncation(const Chain& chain, double radius,
                                         BoundaryMode mode) {
  using State = typename Chain::State;
  if constexpr (std::same_as<State, int64_t>) {
    const int64_t lo = chain.default_start();
    return make_range_truncation(chain, lo,
                                 lo + static_cast<int64_t>(std::llround(radius)),
                                 mode);
  } else if constexpr (std::same_as<State, LatticePoint>) {
    return make_ball_truncation(chain, LatticePoint{}, radius, mode);
  } else {
    return make_generation_truncation(
        chain, static_cast<uint32_t>(std::llround(radius)), mode);
  }
}

// ---------------------------------------------------------------------------
// Green's function on a killed truncation
// ---------------------------------------------------------------------------

/// g(source, .) restricted to a truncation; a componentwise lower bound on
/// the infinite-space Green's function, monotone nondecreasing in the
/// truncation.
template <ChainFamily Chain>
struct GreensMap {
  using State = typename Chain::State;

  State source{};
  std::vector<State> states;  // canonical order
  std::vector<double> values;
  std::string provenance;

  double at(const State& s) const {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    if (it == states.end() || !(*it == s)) return 0.0;  // killed outside
    return values[static_cast<size_t>(it - states.begin())];
  }

  double max_value() const {
    double m = 0;
    for (double v : values) m = std::max(m, v);
    return m;
  }

  double min_positive() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : values)
      if (v > 0) m = std::min(m, v);
    return m;
  }
};

/// Sweep-solver controls: sup-norm stop tolerance, the residual bound
/// verified after convergence, and the iteration cap.
struct SweepOptions {
  double tol = 1e-12;
  double residual_tol = 1e-10;
  uint64_t max_sweeps = 1'000'000;
};

namespace detail {

/// Incoming-edge view of a truncated kernel: for each interior target j,
/// the interior sources i != j with p(i, j), plus the self-loop and the
/// per-state mass leaking out of the truncation.
template <ChainFamily Chain>
struct TruncatedKernel {
  std::vector<std::vector<std::pair<int32_t, double>>> in_edges;
  std::vector<double> self_loop;
  std::vector<double> leak;  // outgoing mass to boundary, per source
  bool has_leak = false;

  explicit TruncatedKernel(const Chain& chain, const Truncation<Chain>& trunc) {
    const size_t n = trunc.states.size();
    in_edges.resize(n);
    self_loop.assign(n, 0.0);
    leak.assign(n, 0.0);
    for (size_t i = 0; i < n; ++i) {
      chain.for_each_transition(
          trunc.states[i], [&](const typename Chain::State& y, double p) {
            const int32_t j = trunc.index_of(y);
            if (j < 0) {
              leak[i] += p;
            } else if (static_cast<size_t>(j) == i) {
              self_loop[i] += p;
            } else {
              in_edges[static_cast<size_t>(j)].emplace_back(
                  static_cast<int32_t>(i), p);
            }
          });
      if (leak[i] > 0) has_leak = true;
    }
  }
};

}  // namespace detail

/// Solves g(x0, y) = delta_{x0,y} + sum_x g(x0, x) p(x, y) on the
/// truncation, mass killed at the boundary. Gauss-Seidel sweeps in
/// canonical state order with the self-loop solved exactly per state; for
/// slowly mixing systems the relaxation factor is tuned once from the
/// observed contraction rate.
template <ChainFamily Chain>
GreensMap<Chain> greens_exact(const Chain& chain, const Truncation<Chain>& trunc,
                              typename Chain::State x0,
                              SweepOptions opts = {}) {
  const int32_t src = trunc.index_of(x0);
  if (src < 0)
    throw std::invalid_argument("greens_exact: source state is not in the truncation");
  const detail::TruncatedKernel<Chain> kernel(chain, trunc);
  if (!kernel.has_leak)
    throw SolverError(
        "greens_exact: truncated chain is stochastic (killing removes no "
        "mass), the occupation system is singular");

  const size_t n = trunc.states.size();
  std::vector<double> u(n, 0.0);

  double omega = 1.0;
  double delta_at_tune = 0.0;
  double min_delta = std::numeric_limits<double>::infinity();
  int rising = 0;
  constexpr uint64_t kTuneSweep = 30;

  uint64_t sweep = 0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    double delta = 0.0;
    double umax = 0.0;
    for (size_t j = 0; j < n; ++j) {
      double inflow = (static_cast<size_t>(src) == j) ? 1.0 : 0.0;
      for (const auto& [i, p] : kernel.in_edges[j]) inflow += u[static_cast<size_t>(i)] * p;
      const double gs = inflow / (1.0 - kernel.self_loop[j]);
      const double next = u[j] + omega * (gs - u[j]);
      delta = std::max(delta, std::abs(next - u[j]));
      u[j] = next;
      umax = std::max(umax, std::abs(next));
    }
    const double scale = std::max(1.0, umax);
    if (delta <= opts.tol * scale) break;

    if (sweep == kTuneSweep - 10) delta_at_tune = delta;
    if (sweep == kTuneSweep && delta_at_tune > 0) {
      const double rho = std::pow(delta / delta_at_tune, 0.1);
      if (rho > 0.9 && rho < 1.0)
        omega = std::clamp(2.0 / (1.0 + std::sqrt(1.0 - rho)), 1.0, 1.97);
      min_delta = delta;  // fresh baseline; relaxation has its own transient
      rising = 0;
    }
    // Relaxation safeguard: fall back to plain sweeps on sustained growth.
    if (delta < min_delta) {
      min_delta = delta;
      rising = 0;
    } else if (omega > 1.0 && ++rising > 25) {
      omega = 1.0;
      rising = 0;
    }
  }
  if (sweep >= opts.max_sweeps)
    throw SolverError("greens_exact: sweep cap exceeded without convergence");

  // Residual verification against the defining recursion.
  double umax = 0.0;
  for (double v : u) umax = std::max(umax, std::abs(v));
  const double scale = std::max(1.0, umax);
  for (size_t j = 0; j < n; ++j) {
    double rhs = (static_cast<size_t>(src) == j) ? 1.0 : 0.0;
    for (const auto& [i, p] : kernel.in_edges[j]) rhs += u[static_cast<size_t>(i)] * p;
    rhs += u[j] * kernel.self_loop[j];
    if (std::abs(u[j] - rhs) > opts.residual_tol * scale)
      throw SolverError("greens_exact: residual check failed after convergence");
  }

  GreensMap<Chain> out;
  out.source = std::move(x0);
  out.states = trunc.states;
  out.values = std::move(u);
  out.provenance = trunc.provenance + " greens-killed";
  return out;
}

// ---------------------------------------------------------------------------
// Diagonal bound diagnostic
// ---------------------------------------------------------------------------

template <class State>
struct DiagBoundReport {
  std::vector<std::pair<State, double>> diagonals;  // canonical state order
  double max_diag = 0.0;
  std::optional<double> declared_bound;
  std::vector<State> exceeding;   // diagonals above the declared bound
  bool trending_unbounded = false;  // max/min ratio heuristic
};

/// Computes killed-truncation lower bounds for g(x, x) at the sampled
/// states. Chains like the lazy line, whose diagonal grows without bound,
/// get flagged when the sampled values spread by more than the trend ratio.
template <ChainFamily Chain>
DiagBoundReport<typename Chain::State> greens_diag_bound_check(
    const Chain& chain, const Truncation<Chain>& trunc,
    std::vector<typename Chain::State> sample_states,
    double trend_ratio = 2.0) {
  std::sort(sample_states.begin(), sample_states.end());
  sample_states.erase(std::unique(sample_states.begin(), sample_states.end()),
                      sample_states.end());

  DiagBoundReport<typename Chain::State> report;
  report.declared_bound = chain.green_diag_bound();
  double min_diag = std::numeric_limits<double>::infinity();
  for (const auto& s : sample_states) {
    const double d = greens_exact(chain, trunc, s).at(s);
    report.diagonals.emplace_back(s, d);
    report.max_diag = std::max(report.max_diag, d);
    min_diag = std::min(min_diag, d);
    if (report.declared_bound && d > *report.declared_bound)
      report.exceeding.push_back(s);
  }
  report.trending_unbounded =
      !report.diagonals.empty() && min_diag > 0 &&
      report.max_diag / min_diag >= trend_ratio;
  return report;
}

// ---------------------------------------------------------------------------
// Annealed fixed point (two-sided bracketing)
// ---------------------------------------------------------------------------

enum class Bracket { kLower, kUpper };

/// Converged values of pi~(x) = q(x) + (1 - q(x)) E_x pi~(X_1) on a
/// truncation, tagged with the bracket side its boundary mode certifies.
template <ChainFamily Chain>
struct PiMap {
  using State = typename Chain::State;

  std::vector<State> states;  // canonical order
  std::vector<double> values;
  Bracket bracket = Bracket::kLower;
  double boundary_value = 0.0;
  std::string provenance;

  double at(const State& s) const {
    auto it = std::lower_bound(states.begin(), states.end(), s);
    if (it == states.end() || !(*it == s)) return boundary_value;
    return values[static_cast<size_t>(it - states.begin())];
  }
};

/// Monotone sweep iteration of the one-step trapping identity from the
/// boundary-consistent constant start: KilledZero from 0 gives the lower
/// bracket, KilledOne from 1 the upper. Stops when the sup-norm sweep
/// change drops to `tol`.
template <ChainFamily Chain, TrapFieldFor<typename Chain::State> Field>
PiMap<Chain> pi_annealed_fixedpoint(const Chain& chain, const Field& field,
                                    const Truncation<Chain>& trunc,
                                    SweepOptions opts = {}) {
  const size_t n = trunc.states.size();
  const double bval = trunc.boundary_mode == BoundaryMode::kKilledZero ? 0.0 : 1.0;

  // Outgoing view: interior targets plus leaked mass, per source.
  std::vector<std::vector<std::pair<int32_t, double>>> out_edges(n);
  std::vector<double> self_loop(n, 0.0), leak(n, 0.0), q(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    q[i] = field.q(trunc.states[i]);
    chain.for_each_transition(trunc.states[i],
                              [&](const typename Chain::State& y, double p) {
                                const int32_t j = trunc.index_of(y);
                                if (j < 0)
                                  leak[i] += p;
                                else if (static_cast<size_t>(j) == i)
                                  self_loop[i] += p;
                                else
                                  out_edges[i].emplace_back(j, p);
                              });
  }

  std::vector<double> u(n, bval);
  uint64_t sweep = 0;
  double delta = 0.0;
  for (; sweep < opts.max_sweeps; ++sweep) {
    delta = 0.0;
    for (size_t i = 0; i < n; ++i) {
      double one_step = leak[i] * bval;
      for (const auto& [j, p] : out_edges[i]) one_step += p * u[static_cast<size_t>(j)];
      // Solve the self-loop exactly: u_i = q + (1-q)(p_self u_i + rest).
      // The clamp only trims float jitter; the exact iterates live in [0,1].
      const double next = std::clamp(
          (q[i] + (1.0 - q[i]) * one_step) / (1.0 - (1.0 - q[i]) * self_loop[i]),
          0.0, 1.0);
      delta = std::max(delta, std::abs(next - u[i]));
      u[i] = next;
    }
    if (delta <= opts.tol) {
      ++sweep;
      break;
    }
  }
  if (delta > opts.tol)
    throw SolverError(
        "pi_annealed_fixedpoint: sweep cap exceeded, last sweep change " +
        std::to_string(delta));

  // Residual verification of the fixed-point identity at every interior state.
  for (size_t i = 0; i < n; ++i) {
    double one_step = leak[i] * bval + self_loop[i] * u[i];
    for (const auto& [j, p] : out_edges[i]) one_step += p * u[static_cast<size_t>(j)];
    const double residual = std::abs(u[i] - q[i] - (1.0 - q[i]) * one_step);
    if (residual > opts.residual_tol)
      throw SolverError("pi_annealed_fixedpoint: residual " +
                        std::to_string(residual) + " above tolerance");
  }

  PiMap<Chain> out;
  out.states = trunc.states;
  out.values = std::move(u);
  out.bracket = trunc.boundary_mode == BoundaryMode::kKilledZero
                    ? Bracket::kLower
                    : Bracket::kUpper;
  out.boundary_value = bval;
  out.provenance = trunc.provenance + " " + to_string(trunc.boundary_mode);
  return out;
}

/// Both brackets on the same interior set.
template <ChainFamily Chain, TrapFieldFor<typename Chain::State> Field>
std::pair<PiMap<Chain>, PiMap<Chain>> pi_annealed_bracket(
    const Chain& chain, const Field& field,
    std::vector<typename Chain::State> states, std::string provenance,
    SweepOptions opts = {}) {
  auto lower_trunc = make_truncation<Chain>(states, BoundaryMode::kKilledZero,
                                            provenance);
  auto upper_trunc = make_truncation<Chain>(std::move(states),
                                            BoundaryMode::kKilledOne,
                                            std::move(provenance));
  return {pi_annealed_fixedpoint(chain, field, lower_trunc, opts),
          pi_annealed_fixedpoint(chain, field, upper_trunc, opts)};
}

/// Sup-norm residual of the one-step trapping identity
/// pi~(x) = q(x) + (1 - q(x)) E_x pi~(X_1) over a converged PiMap.
template <ChainFamily Chain, TrapFieldFor<typename Chain::State> Field>
double pi_identity_residual(const Chain& chain, const Field& field,
                         const PiMap<Chain>& pi) {
  double worst = 0.0;
  for (size_t i = 0; i < pi.states.size(); ++i) {
    double one_step = 0.0;
    chain.for_each_transition(pi.states[i],
                              [&](const typename Chain::State& y, double p) {
                                one_step += p * pi.at(y);
                              });
    const double qv = field.q(pi.states[i]);
    worst = std::max(
        worst, std::abs(pi.values[i] - qv - (1.0 - qv) * one_step));
  }
  return worst;
}

/// Exact superlevel set {x : pi~(x) >= a} of the stored values.
template <ChainFamily Chain>
std::vector<typename Chain::State> level_set(const PiMap<Chain>& pi, double a) {
  std::vector<typename Chain::State> out;
  for (size_t i = 0; i < pi.states.size(); ++i)
    if (pi.values[i] >= a) out.push_back(pi.states[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force quenched oracle
// ---------------------------------------------------------------------------

/// Exact quenched trapping probability at desk scale: enumerates every trap
/// configuration on the q-support of `states`, weights it by its product
/// law, and evaluates the horizon-truncated hitting probability by forward
/// dynamic programming over the reachable set. Ground truth for the
/// quenched Monte Carlo estimators.
template <ChainFamily Chain, TrapFieldFor<typename Chain::State> Field>
double pi_quenched_bruteforce(const Chain& chain, const Field& field,
                              typename Chain::State x0,
                              const std::vector<typename Chain::State>& states,
                              int64_t horizon, size_t max_reach = 200'000) {
  if (states.size() > 20)
    throw std::invalid_argument(
        "pi_quenched_bruteforce: state set too large (" +
        std::to_string(states.size()) + " > 20)");

  using State = typename Chain::State;
  std::vector<State> support;
  std::vector<double> support_q;
  for (const State& s : states) {
    const double qs = field.q(s);
    if (qs > 0.0) {
      support.push_back(s);
      support_q.push_back(qs);
    }
  }

  // Reachable set within `horizon` steps; paths cannot leave it.
  std::vector<State> reach{x0};
  std::unordered_map<State, int32_t, StateHash<State>> reach_index;
  reach_index.emplace(x0, 0);
  size_t frontier_begin = 0;
  for (int64_t depth = 0; depth < horizon; ++depth) {
    const size_t frontier_end = reach.size();
    if (frontier_begin == frontier_end) break;
    for (size_t i = frontier_begin; i < frontier_end; ++i) {
      const State s = reach[i];
      chain.for_each_transition(s, [&](const State& y, double) {
        if (reach_index.emplace(y, static_cast<int32_t>(reach.size())).second)
          reach.push_back(y);
      });
      if (reach.size() > max_reach)
        throw std::invalid_argument(
            "pi_quenched_bruteforce: reachable set exceeds cap");
    }
    frontier_begin = frontier_end;
  }

  // Sparse row transitions once.
  const size_t m = reach.size();
  std::vector<std::vector<std::pair<int32_t, double>>> rows(m);
  for (size_t i = 0; i < m; ++i)
    chain.for_each_transition(reach[i], [&](const State& y, double p) {
      auto it = reach_index.find(y);
      // Targets beyond the reachable set are only enterable after the
      // horizon; drop them (the DP never gets there in time).
      if (it != reach_index.end()) rows[i].emplace_back(it->second, p);
    });

  std::vector<int32_t> support_at(m, -1);
  for (size_t k = 0; k < support.size(); ++k) {
    auto it = reach_index.find(support[k]);
    if (it != reach_index.end()) support_at[static_cast<size_t>(it->second)] = static_cast<int32_t>(k);
  }

  double trapping = 0.0;
  std::vector<double> a(m), b(m);
  for (uint64_t mask = 0; mask < (1ULL << support.size()); ++mask) {
    double weight = 1.0;
    for (size_t k = 0; k < support.size(); ++k)
      weight *= (mask >> k) & 1 ? support_q[k] : 1.0 - support_q[k];
    if (weight == 0.0) continue;

    auto is_trap = [&](size_t i) {
      return support_at[i] >= 0 && ((mask >> support_at[i]) & 1);
    };

    std::fill(a.begin(), a.end(), 0.0);
    a[0] = is_trap(0) ? 0.0 : 1.0;
    double survival = a[0];
    for (int64_t t = 1; t <= horizon && survival > 0.0; ++t) {
      std::fill(b.begin(), b.end(), 0.0);
      for (size_t i = 0; i < m; ++i) {
        if (a[i] == 0.0) continue;
        for (const auto& [j, p] : rows[i]) b[static_cast<size_t>(j)] += a[i] * p;
      }
      survival = 0.0;
      for (size_t i = 0; i < m; ++i) {
        if (is_trap(i)) b[i] = 0.0;
        survival += b[i];
      }
      a.swap(b);
    }
    trapping += weight * (1.0 - survival);
  }
  return trapping;
}

}  // namespace trapwalk
