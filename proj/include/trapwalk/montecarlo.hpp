// Monte Carlo estimators: path functionals, survival probabilities under
// quenched and annealed traps, Green's function visit counts, hitting
// probabilities and set occupation times.
//
// Estimators are parallel over samples. Per-sample streams derive from
// (master seed, sample index), worker blocks are contiguous and partial
// moments are reduced in worker order, so a run is bit-reproducible for a
// fixed (seed, worker count).
#pragma once

#include <cmath>
#include <cstdint>
#include <exception>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "trapwalk/chains.hpp"
#include "trapwalk/paths.hpp"
#include "trapwalk/rng.hpp"
#include "trapwalk/traps.hpp"

namespace trapwalk {

inline constexpr unsigned kDefaultWorkers = 4;

/// Point estimate with provenance. std_error is the sample standard
/// deviation over sqrt(n_samples).
struct EstimateResult {
  double mean = 0.0;
  double std_error = 0.0;
  uint64_t n_samples = 0;
  int64_t horizon = 0;
  uint64_t master_seed = 0;
};

/// The four path functionals at a fixed horizon. exp(-r_quenched) is the
/// conditional no-trapping probability of the quenched problem given the
/// path; exp(-r_annealed) the annealed one. s_* are the plain trap-mass
/// sums with q in place of -log(1 - q).
struct PathFunctionals {
  double r_quenched = 0.0;   // sum of -log(1 - q(X_i)) over first visits
  double r_annealed = 0.0;   // same sum over every step
  double s_quenched = 0.0;   // sum of q(X_i) over first visits
  double s_annealed = 0.0;   // sum of q(X_i) over every step
};

template <ChainFamily Chain, TrapFieldFor<typename Chain::State> Field>
PathFunctionals path_functionals(const PathSample<Chain>& path,
                                 const Field& field) {
  PathFunctionals out;
  for (size_t i = 0; i < path.states.size(); ++i) {
    const double q = field.q(path.states[i]);
    const double nl = -std::log1p(-q);
    out.r_annealed += nl;
    out.s_annealed += q;
    if (path.first_visit[i]) {
      out.r_quenched += nl;
      out.s_quenched += q;
    }
  }
  return out;
}

enum class TrapMode { kQuenched, kAnnealed };
enum class SurvivalEstimator { kDirect, kExponential };

// ---------------------------------------------------------------------------
// Parallel sample runner
// ---------------------------------------------------------------------------

namespace detail {

struct MomentAccum {
  double sum = 0.0;
  double sumsq = 0.0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
  }
  void merge(const MomentAccum& o) {
    sum += o.sum;
    sumsq += o.sumsq;
  }
};

inline EstimateResult to_estimate(const MomentAccum& a, uint64_t n,
                                  int64_t horizon, uint64_t seed) {
  EstimateResult r;
  r.n_samples = n;
  r.horizon = horizon;
  r.master_seed = seed;
  r.mean = a.sum / static_cast<double>(n);
  if (n > 1) {
    const double var =
        std::max(0.0, (a.sumsq - a.sum * a.sum / static_cast<double>(n)) /
                          static_cast<double>(n - 1));
    r.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return r;
}

/// Runs fill(i, slots) for every sample index, accumulating `width` moment
/// slots. Contiguous blocks per worker; reduction in worker-index order.
template <class Fill>
std::vector<MomentAccum> run_samples(uint64_t n_samples, size_t width,
                                     unsigned n_workers, Fill&& fill) {
  if (n_samples == 0)
    throw std::invalid_argument("n_samples must be at least 1");
  const unsigned workers = static_cast<unsigned>(
      std::min<uint64_t>(n_workers == 0 ? 1 : n_workers, n_samples));

  std::vector<std::vector<MomentAccum>> partial(
      workers, std::vector<MomentAccum>(width));
  std::vector<std::exception_ptr> errors(workers);

  auto body = [&](unsigned w) {
    const uint64_t lo = n_samples * w / workers;
    const uint64_t hi = n_samples * (w + 1) / workers;
    std::vector<double> slots(width);
    try {
      for (uint64_t i = lo; i < hi; ++i) {
        std::fill(slots.begin(), slots.end(), 0.0);
        fill(i, std::span<double>(slots));
        for (size_t k = 0; k < width; ++k) partial[w][k].add(slots[k]);
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };

  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<MomentAccum> total(width);
  for (unsigned w = 0; w < workers; ++w)
    for (size_t k = 0; k < width; ++k) total[k].merge(partial[w][k]);
  return total;
}

inline constexpr uint64_t kPathStreamSalt = 0x70617468ULL;
inline constexpr uint64_t kRealizationSalt = 0x667265657a65ULL;
inline constexpr uint64_t kAnnealedRunSalt = 0x6672657368ULL;

inline uint64_t sample_realization_seed(uint64_t master, uint64_t i) {
  return rng::hash_combine(rng::hash_combine(kRealizationSalt, master), i);
}

inline uint64_t sample_annealed_seed(uint64_t master, uint64_t i) {
  return rng::hash_combine(rng::hash_combine(kAnnealedRunSalt, master), i);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Survival
// ---------------------------------------------------------------------------

/// Estimates P(no trapping up to `horizon`) from `x0`.
///
/// Direct: samples the path plus trap statuses (one frozen realization per
/// sample in quenched mode, fresh per-step draws in annealed mode) and
/// records the survival indicator. Exponential: samples the path alone and
/// records exp(-R_h) (quenched) or exp(-R~_h) (annealed). Both are unbiased
/// for the same quantity; the exponential estimator has lower variance.
template <ChainFamily Chain, TrapFieldFor<typename Chain::State> Field>
EstimateResult estimate_survival(const Chain& chain, const Field& field,
                                 typename Chain::State x0, TrapMode mode,
                                 SurvivalEstimator estimator, int64_t horizon,
                                 uint64_t n_samples, uint64_t seed,
                                 unsigned n_workers = kDefaultWorkers) {
  auto fill = [&](uint64_t i, std::span<double> out) {
    rng::SplitMix64 g = rng::stream_for(seed, i, detail::kPathStreamSalt);
    if (estimator == SurvivalEstimator::kDirect) {
      double survived = 1.0;
      if (mode == TrapMode::kQuenched) {
        const uint64_t rseed = detail::sample_realization_seed(seed, i);
        walk(chain, x0, horizon, g,
             [&](int64_t, const typename Chain::State& x) {
               if (quenched_draw(field, rseed, x)) {
                 survived = 0.0;
                 return false;
               }
               return true;
             });
      } else {
        const uint64_t aseed = detail::sample_annealed_seed(seed, i);
        walk(chain, x0, horizon, g,
             [&](int64_t t, const typename Chain::State& x) {
               if (annealed_status(field, x, t, aseed)) {
                 survived = 0.0;
                 return false;
               }
               return true;
             });
      }
      out[0] = survived;
    } else {
      double exponent = 0.0;
      if (mode == TrapMode::kQuenched) {
        walk_first_visit(chain, x0, horizon, g,
                         [&](int64_t, const typename Chain::State& x,
                             bool fresh) {
                           if (fresh) exponent += -std::log1p(-field.q(x));
                           return true;
                         });
      } else {
        walk(chain, x0, horizon, g,
             [&](int64_t, const typename Chain::State& x) {
               exponent += -std::log1p(-field.q(x));
               return true;
             });
      }
      out[0] = std::exp(-exponent);
    }
  };
  const auto acc = detail::run_samples(n_samples, 1, n_workers, fill);
  return detail::to_estimate(acc[0], n_samples, horizon, seed);
}

// ---------------------------------------------------------------------------
// Green's function, hitting, occupation
// ---------------------------------------------------------------------------

/// Mean visit count to `y` up to `horizon`, started at `x0`. Monotone
/// nondecreasing in the horizon in expectation.
template <ChainFamily Chain>
EstimateResult estimate_greens(const Chain& chain, typename Chain::State x0,
                               typename Chain::State y, int64_t horizon,
                               uint64_t n_samples, uint64_t seed,
                               unsigned n_workers = kDefaultWorkers) {
  auto fill = [&](uint64_t i, std::span<double> out) {
    rng::SplitMix64 g = rng::stream_for(seed, i, detail::kPathStreamSalt);
    double visits = 0.0;
    walk(chain, x0, horizon, g, [&](int64_t, const typename Chain::State& x) {
      if (x == y) visits += 1.0;
      return true;
    });
    out[0] = visits;
  };
  const auto acc = detail::run_samples(n_samples, 1, n_workers, fill);
  return detail::to_estimate(acc[0], n_samples, horizon, seed);
}

/// Fraction of paths that enter the set by `horizon` — a lower bound in
/// expectation on the true hitting probability.
template <ChainFamily Chain, class Pred>
EstimateResult estimate_hitting_probability(const Chain& chain,
                                            typename Chain::State x0,
                                            const Pred& target,
                                            int64_t horizon,
                                            uint64_t n_samples, uint64_t seed,
                                            unsigned n_workers = kDefaultWorkers) {
  auto fill = [&](uint64_t i, std::span<double> out) {
    rng::SplitMix64 g = rng::stream_for(seed, i, detail::kPathStreamSalt);
    double hit = 0.0;
    walk(chain, x0, horizon, g, [&](int64_t, const typename Chain::State& x) {
      if (target.contains(x)) {
        hit = 1.0;
        return false;
      }
      return true;
    });
    out[0] = hit;
  };
  const auto acc = detail::run_samples(n_samples, 1, n_workers, fill);
  return detail::to_estimate(acc[0], n_samples, horizon, seed);
}

/// Expected occupation time of each set up to `horizon`; the k-th result is
/// a Monte Carlo estimate of sum over x in set_k of g(x0, x) truncated at
/// the horizon. One path sweep serves all sets.
template <ChainFamily Chain, class Pred>
std::vector<EstimateResult> estimate_set_occupation(
    const Chain& chain, typename Chain::State x0,
    const std::vector<Pred>& sets, int64_t horizon, uint64_t n_samples,
    uint64_t seed, unsigned n_workers = kDefaultWorkers) {
  const size_t width = sets.size();
  auto fill = [&](uint64_t i, std::span<double> out) {
    rng::SplitMix64 g = rng::stream_for(seed, i, detail::kPathStreamSalt);
    walk(chain, x0, horizon, g, [&](int64_t, const typename Chain::State& x) {
      for (size_t k = 0; k < out.size(); ++k)
        if (sets[k].contains(x)) out[k] += 1.0;
      return true;
    });
  };
  const auto acc = detail::run_samples(n_samples, width, n_workers, fill);
  std::vector<EstimateResult> results;
  results.reserve(width);
  for (const auto& a : acc)
    results.push_back(detail::to_estimate(a, n_samples, horizon, seed));
  return results;
}

}  // namespace trapwalk
