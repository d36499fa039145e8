// Green's-function annulus geometry, annulus-density diagnostics, criterion
// partial sums with growth classification, and the radial regularity check.
// Everything here is a pure function over an immutable GreensMap.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "trapwalk/exact.hpp"
#include "trapwalk/rng.hpp"
#include "trapwalk/traps.hpp"

namespace trapwalk {

/// H_alpha(L, x0) restricted to the truncation the Green's map was built
/// on. Closed convention [alpha L, L] matches the defining inequality;
/// half-open (alpha L, L] makes geometric ladders disjoint.
enum class AnnulusConvention { kClosed, kHalfOpen };

template <class State>
struct Annulus {
  double level = 0.0;  // L
  double alpha = 0.0;
  std::vector<State> members;  // canonical order
  // Truncated Green's values are lower bounds, so membership at levels
  // near the smallest positive value is unreliable.
  bool edge_contaminated = false;
};

template <ChainFamily Chain>
Annulus<typename Chain::State> build_annulus(
    const GreensMap<Chain>& greens, double level, double alpha,
    AnnulusConvention convention = AnnulusConvention::kClosed) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("annulus ratio alpha must lie in (0, 1)");
  Annulus<typename Chain::State> out;
  out.level = level;
  out.alpha = alpha;
  const double lo = alpha * level;
  for (size_t i = 0; i < greens.states.size(); ++i) {
    const double g = greens.values[i];
    const bool in = convention == AnnulusConvention::kClosed
                        ? (g >= lo && g <= level)
                        : (g > lo && g <= level);
    if (in) out.members.push_back(greens.states[i]);
  }
  const double floor = greens.min_positive();
  out.edge_contaminated = std::isfinite(floor) && level <= 4.0 * floor;
  return out;
}

/// Half-open annuli at levels L_k = (max g) * alpha^k, descending until the
/// smallest positive value is covered. Together they partition the states
/// with positive truncated Green's value.
template <ChainFamily Chain>
std::vector<Annulus<typename Chain::State>> annulus_ladder(
    const GreensMap<Chain>& greens, double alpha) {
  std::vector<Annulus<typename Chain::State>> out;
  const double top = greens.max_value();
  const double floor = greens.min_positive();
  if (!(top > 0.0)) return out;
  double level = top;
  while (true) {
    out.push_back(build_annulus(greens, level, alpha,
                                AnnulusConvention::kHalfOpen));
    if (level * alpha < floor) break;  // lower edge dropped below every value
    level *= alpha;
  }
  return out;
}

/// |annulus ∩ A| / |annulus|.
template <class State, class Pred>
double annulus_density(const Annulus<State>& annulus, const Pred& set) {
  if (annulus.members.empty())
    throw std::domain_error("annulus density undefined: annulus is empty");
  size_t inside = 0;
  for (const State& s : annulus.members)
    if (set.contains(s)) ++inside;
  return static_cast<double>(inside) /
         static_cast<double>(annulus.members.size());
}

// ---------------------------------------------------------------------------
// Criterion partial sums
// ---------------------------------------------------------------------------

enum class SumOrdering { kByGreensDescending, kByNormAscending };
enum class GrowthClass { kBoundedTrend, kLogGrowth, kPowerGrowth };

inline const char* to_string(GrowthClass g) {
  switch (g) {
    case GrowthClass::kBoundedTrend: return "bounded-trend";
    case GrowthClass::kLogGrowth: return "log-growth";
    case GrowthClass::kPowerGrowth: return "power-growth";
  }
  return "?";
}

/// Cumulative sums of g(x0, x) q(x) in a deterministic order, plus a growth
/// diagnosis fitted to the second half of the series. Divergence of the
/// infinite sum is never asserted; this is finite evidence only.
struct CriterionSeries {
  SumOrdering ordering = SumOrdering::kByGreensDescending;
  std::vector<double> partial_sums;  // nondecreasing
  size_t terms_counted = 0;
  GrowthClass growth = GrowthClass::kBoundedTrend;
  double log_slope = 0.0;    // b in S_k ~ a + b ln k
  double power_exponent = 0.0;  // p in S_k ~ c k^p
};

namespace detail {

struct LinFit {
  double slope = 0.0, intercept = 0.0;
};

inline LinFit least_squares(const std::vector<double>& xs,
                            const std::vector<double>& ys) {
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  LinFit f;
  if (denom != 0) {
    f.slope = (n * sxy - sx * sy) / denom;
    f.intercept = (sy - f.slope * sx) / n;
  }
  return f;
}

inline void classify_growth(CriterionSeries& series) {
  const auto& s = series.partial_sums;
  const size_t k = s.size();
  if (k < 8 || s.back() <= 0.0) {
    series.growth = GrowthClass::kBoundedTrend;
    return;
  }
  const size_t half = k / 2;
  if ((s.back() - s[half]) < 0.02 * s.back()) {
    series.growth = GrowthClass::kBoundedTrend;
    return;
  }
  std::vector<double> lnk, val, lnval;
  for (size_t i = half; i < k; ++i) {
    if (s[i] <= 0.0) continue;
    lnk.push_back(std::log(static_cast<double>(i + 1)));
    val.push_back(s[i]);
    lnval.push_back(std::log(s[i]));
  }
  const LinFit logfit = least_squares(lnk, val);     // S ~ a + b ln k
  const LinFit powfit = least_squares(lnk, lnval);   // ln S ~ c + p ln k
  series.log_slope = logfit.slope;
  series.power_exponent = powfit.slope;
  double log_rss = 0, pow_rss = 0;
  for (size_t i = 0; i < lnk.size(); ++i) {
    const double log_pred = logfit.intercept + logfit.slope * lnk[i];
    const double pow_pred = std::exp(powfit.intercept + powfit.slope * lnk[i]);
    log_rss += (log_pred - val[i]) * (log_pred - val[i]);
    pow_rss += (pow_pred - val[i]) * (pow_pred - val[i]);
  }
  series.growth = pow_rss < log_rss ? GrowthClass::kPowerGrowth
                                    : GrowthClass::kLogGrowth;
}

}  // namespace detail

template <ChainFamily Chain, TrapFieldFor<typename Chain::State> Field>
CriterionSeries criterion_partial_sums(const GreensMap<Chain>& greens,
                                       const Field& field,
                                       SumOrdering ordering) {
  const size_t n = greens.states.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  if (ordering == SumOrdering::kByGreensDescending) {
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (greens.values[a] != greens.values[b])
        return greens.values[a] > greens.values[b];
      return greens.states[a] < greens.states[b];
    });
  } else {
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      const double na = state_norm(greens.states[a]);
      const double nb = state_norm(greens.states[b]);
      if (na != nb) return na < nb;
      return greens.states[a] < greens.states[b];
    });
  }

  CriterionSeries series;
  series.ordering = ordering;
  series.partial_sums.reserve(n);
  // Kahan compensation keeps the final sum independent of the ordering.
  double running = 0.0, carry = 0.0;
  for (size_t i : order) {
    const double term = greens.values[i] * field.q(greens.states[i]) - carry;
    const double next = running + term;
    carry = (next - running) - term;
    running = next;
    series.partial_sums.push_back(running);
  }
  series.terms_counted = n;
  detail::classify_growth(series);
  return series;
}

// ---------------------------------------------------------------------------
// Regularity check
// ---------------------------------------------------------------------------

template <class State>
struct RegularityViolation {
  State x{}, y{};
  double gx = 0, gy = 0, qx = 0, qy = 0;
};

template <class State>
struct RegularityReport {
  std::vector<RegularityViolation<State>> violations;
  size_t pairs_checked = 0;
  size_t premise_pairs = 0;  // pairs whose Green's values are C-comparable
  // Smallest C' that would make every premise pair pass; infinity when a
  // premise pair mixes zero and nonzero q.
  double min_required_cprime = 1.0;
  bool pass = true;
};

/// Scans state pairs: wherever g(x0, x) and g(x0, y) agree within factor C,
/// q(x) and q(y) must agree within factor C'. Every offending pair is
/// listed; an empty list is a pass. Only states with positive truncated
/// Green's value participate (zeros are truncation artifacts).
template <ChainFamily Chain, TrapFieldFor<typename Chain::State> Field>
RegularityReport<typename Chain::State> regularity_check(
    const GreensMap<Chain>& greens, const Field& field, double big_c,
    double big_c_prime, uint64_t sample_pairs, uint64_t seed) {
  if (!(big_c > 1.0) || !(big_c_prime > 1.0))
    throw std::invalid_argument("regularity constants C and C' must exceed 1");

  std::vector<size_t> positive;
  for (size_t i = 0; i < greens.states.size(); ++i)
    if (greens.values[i] > 0.0) positive.push_back(i);

  RegularityReport<typename Chain::State> report;
  if (positive.size() < 2) return report;

  rng::SplitMix64 g = rng::stream_for(seed, 0, 0x726567ULL);
  const double inf = std::numeric_limits<double>::infinity();
  for (uint64_t k = 0; k < sample_pairs; ++k) {
    const size_t i = positive[g.next_below(positive.size())];
    const size_t j = positive[g.next_below(positive.size())];
    if (i == j) continue;
    ++report.pairs_checked;
    const double gx = greens.values[i], gy = greens.values[j];
    if (!(gy >= gx / big_c && gy <= gx * big_c)) continue;
    ++report.premise_pairs;
    const double qx = field.q(greens.states[i]);
    const double qy = field.q(greens.states[j]);
    double ratio;
    if (qx == 0.0 && qy == 0.0)
      ratio = 1.0;
    else if (qx == 0.0 || qy == 0.0)
      ratio = inf;
    else
      ratio = std::max(qx / qy, qy / qx);
    report.min_required_cprime = std::max(report.min_required_cprime, ratio);
    if (ratio > big_c_prime) {
      report.violations.push_back({greens.states[i], greens.states[j], gx, gy,
                                   qx, qy});
    }
  }
  report.pass = report.violations.empty();
  return report;
}

}  // namespace trapwalk
