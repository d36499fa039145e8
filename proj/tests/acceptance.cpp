// Acceptance suite. Each test prints one [PASS]/[FAIL] line; the library's
// finite-horizon estimates are held against independent oracles: telescoping
// products, per-site sojourn products, exact transfer-matrix recursions,
// brute-force enumeration and cross-method agreement.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "trapwalk/annuli.hpp"
#include "trapwalk/exact.hpp"
#include "trapwalk/montecarlo.hpp"
#include "trapwalk/predicates.hpp"
#include "test_support.hpp"

using namespace trapwalk;
using testsupport::within_z;

namespace {

class Criterion {
 public:
  Criterion(int number, std::string name, double budget_seconds)
      : number_(number), name_(std::move(name)),
        budget_seconds_(budget_seconds),
        t0_(std::chrono::steady_clock::now()) {}

  void check(bool cond, const char* what) {
    CHECK(cond);
    if (!cond) {
      ok_ = false;
      failed_ += std::string(" [") + what + "]";
    }
  }

  ~Criterion() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_)
            .count();
    if (std::uncaught_exceptions() == 0) {
      check(secs <= budget_seconds_, "runtime budget");
    } else {
      ok_ = false;
      failed_ += " [exception]";
    }
    std::printf("[%s] criterion %d: %s (%.1fs, budget %.0fs)%s\n",
                ok_ ? "PASS" : "FAIL", number_, name_.c_str(), secs,
                budget_seconds_, failed_.c_str());
    std::fflush(stdout);
  }

 private:
  int number_;
  std::string name_;
  double budget_seconds_;
  std::chrono::steady_clock::time_point t0_;
  bool ok_ = true;
  std::string failed_;
};

constexpr unsigned kWorkers = 2;

/// Telescoping partial product prod_{n=2}^{N} (1 - 1/n^2) = (N+1)/(2N),
/// evaluated by explicit multiplication.
double quenched_product(int64_t n_hi) {
  double p = 1.0;
  for (int64_t n = 2; n <= n_hi; ++n)
    p *= 1.0 - 1.0 / (static_cast<double>(n) * n);
  return p;
}

/// Per-site annealed survival factor on the lazy line (geometric sojourn).
double site_survival(int64_t n, double q) {
  const double stay = (1.0 - q) * (1.0 - 1.0 / static_cast<double>(n));
  return ((1.0 - q) / static_cast<double>(n)) / (1.0 - stay);
}

double annealed_product(int64_t n_hi) {
  double p = 1.0;
  for (int64_t n = 2; n <= n_hi; ++n)
    p *= site_survival(n, 1.0 / (static_cast<double>(n) * n));
  return p;
}

/// Exact finite-horizon annealed survival on the lazy line with
/// q(n) = 1/n^2, by the transfer recursion over (site, time). Fully
/// independent of the Monte Carlo path.
double annealed_survival_dp(int64_t horizon) {
  const auto band = static_cast<size_t>(
      64 + 4.0 * std::sqrt(2.0 * static_cast<double>(horizon)));
  auto q = [](size_t n) {
    return 1.0 / (static_cast<double>(n) * static_cast<double>(n));
  };
  std::vector<double> a(band + 2, 0.0), b(band + 2, 0.0);
  a[2] = 1.0 - q(2);
  size_t frontier = 2;
  for (int64_t t = 0; t < horizon; ++t) {
    const size_t hi = std::min(frontier + 1, band);
    for (size_t n = 2; n <= hi; ++n) {
      const double dn = static_cast<double>(n);
      double mass = a[n] * (1.0 - 1.0 / dn);
      if (n > 2) mass += a[n - 1] / (dn - 1.0);
      b[n] = mass * (1.0 - q(n));
    }
    for (size_t n = 2; n <= hi; ++n) a[n] = b[n];
    if (frontier < band - 1) ++frontier;
  }
  double survival = 0.0;
  for (size_t n = 2; n <= band; ++n) survival += a[n];
  return survival;
}

struct ReachStats {
  double mean = 0.0;
  double product_mean = 0.0;  // mean over paths of the telescoping product
  double product_se = 0.0;
};

ReachStats pilot_reach(int64_t horizon, uint64_t n_paths, uint64_t seed) {
  LazyLine chain;
  ReachStats out;
  double psum = 0, psumsq = 0;
  for (uint64_t i = 0; i < n_paths; ++i) {
    rng::SplitMix64 g = rng::stream_for(seed, i, 0x70696c6fULL);
    int64_t x = 2;
    for (int64_t t = 0; t < horizon; ++t) x = chain.step(x, g);
    out.mean += static_cast<double>(x);
    const double prod = quenched_product(x);
    psum += prod;
    psumsq += prod * prod;
  }
  const double n = static_cast<double>(n_paths);
  out.mean /= n;
  out.product_mean = psum / n;
  out.product_se =
      std::sqrt(std::max(0.0, (psumsq - psum * psum / n) / (n - 1)) / n);
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

TEST_CASE("criterion 1: example 2, quenched side") {
  Criterion crit(1, "lazy line quenched survival matches the telescoping product", 120);
  LazyLine chain;
  RadialField field(2.0, 0.5);  // q(n) = 1/n^2
  const int64_t h = 100000;
  const uint64_t n = 10000;

  const ReachStats reach = pilot_reach(h, 2000, 4242);
  const double oracle = reach.product_mean;

  const auto direct = estimate_survival(chain, field, 2, TrapMode::kQuenched,
                                        SurvivalEstimator::kDirect, h, n,
                                        20260809, kWorkers);
  const auto expo = estimate_survival(chain, field, 2, TrapMode::kQuenched,
                                      SurvivalEstimator::kExponential, h, n,
                                      20260809, kWorkers);

  crit.check(within_z(direct.mean, oracle, direct.std_error, reach.product_se),
             "direct within 4se of partial product");
  crit.check(within_z(expo.mean, oracle, expo.std_error, reach.product_se),
             "exponential within 4se of partial product");
  crit.check(std::abs(expo.mean - 0.5) <= 0.01, "within 0.01 of the limit 1/2");
}

TEST_CASE("criterion 2: example 2, annealed side") {
  Criterion crit(2, "lazy line annealed trapping: brackets and MC vs oracles", 120);
  LazyLine chain;
  RadialField field(2.0, 0.5);

  // Smallest N with annealed survival product below 0.1.
  int64_t n_star = 0;
  double product = 1.0;
  for (int64_t n_hi = 2; n_hi <= 500; ++n_hi) {
    product *= site_survival(n_hi, field.q(n_hi));
    if (product < 0.1) {
      n_star = n_hi;
      break;
    }
  }
  crit.check(n_star > 0, "per-site product drops through 0.1");

  // Fixed-point brackets decrease through 0.1 by N*.
  double prev_upper = 1.0;
  bool monotone = true;
  double survival_at_star = 1.0;
  for (int64_t n_hi : {n_star / 2, n_star, 2 * n_star}) {
    auto trunc = make_range_truncation(chain, 2, n_hi, BoundaryMode::kKilledZero);
    auto [lower, upper] =
        pi_annealed_bracket(chain, field, trunc.states, trunc.provenance);
    const double survival_upper = 1.0 - lower.at(2);
    monotone = monotone && survival_upper <= prev_upper + 1e-12;
    prev_upper = survival_upper;
    if (n_hi == n_star) {
      survival_at_star = survival_upper;
      crit.check(std::abs(survival_upper - annealed_product(n_hi)) <= 1e-9,
                 "solver reproduces the per-site product to 1e-9");
      crit.check(1.0 - upper.at(2) <= survival_upper,
                 "bracket sides ordered");
    }
  }
  crit.check(monotone, "bracket survival decreases with N");
  crit.check(survival_at_star < 0.1, "survival below 0.1 at N*");

  // MC annealed estimates vs the exact transfer recursion at each horizon.
  for (int64_t h : {1000, 10000, 100000}) {
    const double dp = annealed_survival_dp(h);
    const auto mc = estimate_survival(chain, field, 2, TrapMode::kAnnealed,
                                      SurvivalEstimator::kExponential, h,
                                      10000, 20260810, kWorkers);
    crit.check(within_z(mc.mean, dp, mc.std_error),
               "annealed MC within 4se of the exact recursion");
  }
}

TEST_CASE("criterion 3: bounded-Green chain, quenched equals annealed") {
  Criterion crit(3, "drift line: quenched and annealed coincide pathwise", 60);
  DriftLine chain;
  ConstantOnSetField<EverythingSet> const_field(EverythingSet{}, 0.2);
  TableField<int64_t> table_field({{0, 0.1}, {1, 0.2}, {3, 0.3}});

  // Pathwise functional equality (never a revisit, so R = R~ exactly).
  bool pathwise = true;
  for (uint64_t seed = 0; seed < 500; ++seed) {
    const auto path = sample_path(chain, 0, 1000, seed);
    const auto pf1 = path_functionals(path, const_field);
    const auto pf2 = path_functionals(path, table_field);
    pathwise = pathwise && pf1.r_quenched == pf1.r_annealed &&
               pf1.s_quenched == pf1.s_annealed &&
               pf2.r_quenched == pf2.r_annealed &&
               pf2.s_quenched == pf2.s_annealed;
  }
  crit.check(pathwise, "R equals R~ on every sampled path");

  for (int64_t h : {10, 100, 1000}) {
    const auto qe = estimate_survival(chain, const_field, 0, TrapMode::kQuenched,
                                      SurvivalEstimator::kExponential, h, 4000,
                                      31, kWorkers);
    const auto ae = estimate_survival(chain, const_field, 0, TrapMode::kAnnealed,
                                      SurvivalEstimator::kExponential, h, 4000,
                                      31, kWorkers);
    crit.check(qe.mean == ae.mean, "exponential estimators identical");

    const auto qd = estimate_survival(chain, const_field, 0, TrapMode::kQuenched,
                                      SurvivalEstimator::kDirect, h, 20000, 32,
                                      kWorkers);
    const auto ad = estimate_survival(chain, const_field, 0, TrapMode::kAnnealed,
                                      SurvivalEstimator::kDirect, h, 20000, 33,
                                      kWorkers);
    crit.check(testsupport::agree(qd, ad), "direct estimators agree at 4se");
  }
}

TEST_CASE("criterion 4: brute-force oracle equivalence") {
  Criterion crit(4, "brute force, direct MC and exponential MC agree pairwise", 60);

  // Instance 1: hand-derived value on the drift line.
  {
    DriftLine chain;
    TableField<int64_t> field({{0, 0.1}, {1, 0.2}, {3, 0.3}});
    const double bf = pi_quenched_bruteforce(chain, field, 0, {0, 1, 2, 3, 4}, 10);
    crit.check(std::abs(bf - 0.496) <= 1e-12, "enumeration reproduces 0.496");

    const auto d = estimate_survival(chain, field, 0, TrapMode::kQuenched,
                                     SurvivalEstimator::kDirect, 10, 100000,
                                     41, kWorkers);
    const auto e = estimate_survival(chain, field, 0, TrapMode::kQuenched,
                                     SurvivalEstimator::kExponential, 10,
                                     100000, 42, kWorkers);
    crit.check(within_z(1.0 - d.mean, bf, d.std_error), "direct vs brute force");
    // The exponential estimator is deterministic on this chain (se = 0);
    // the epsilon covers product-vs-enumeration rounding only.
    crit.check(within_z(1.0 - e.mean, bf, e.std_error, 1e-12),
               "exponential vs brute force");
    crit.check(testsupport::agree(d, e), "direct vs exponential");
  }

  // Instance 2: lazy line with a five-site table.
  {
    LazyLine chain;
    TableField<int64_t> field({{2, 0.3}, {3, 0.25}, {4, 0.2}, {5, 0.15}, {6, 0.1}});
    const int64_t h = 400;
    const double bf = pi_quenched_bruteforce(chain, field, 2, {2, 3, 4, 5, 6}, h);
    const auto d = estimate_survival(chain, field, 2, TrapMode::kQuenched,
                                     SurvivalEstimator::kDirect, h, 100000, 43,
                                     kWorkers);
    const auto e = estimate_survival(chain, field, 2, TrapMode::kQuenched,
                                     SurvivalEstimator::kExponential, h, 100000,
                                     44, kWorkers);
    crit.check(within_z(1.0 - d.mean, bf, d.std_error), "lazy: direct vs bf");
    crit.check(within_z(1.0 - e.mean, bf, e.std_error, 1e-12),
               "lazy: exponential vs bf");
    crit.check(testsupport::agree(d, e), "lazy: direct vs exponential");
  }

  // Instance 3: one-dimensional walk, recurrent, horizon-matched.
  {
    SimpleWalkZd chain(1);
    const auto at = [](int32_t v) { return make_point({v}); };
    TableField<LatticePoint> field(
        {{at(-1), 0.3}, {at(0), 0.15}, {at(2), 0.25}});
    const int64_t h = 30;
    const double bf = pi_quenched_bruteforce(
        chain, field, at(0), {at(-1), at(0), at(1), at(2)}, h);
    const auto d = estimate_survival(chain, field, at(0), TrapMode::kQuenched,
                                     SurvivalEstimator::kDirect, h, 100000, 45,
                                     kWorkers);
    const auto e = estimate_survival(chain, field, at(0), TrapMode::kQuenched,
                                     SurvivalEstimator::kExponential, h, 100000,
                                     46, kWorkers);
    crit.check(within_z(1.0 - d.mean, bf, d.std_error), "Z1: direct vs bf");
    crit.check(within_z(1.0 - e.mean, bf, e.std_error), "Z1: exponential vs bf");
    crit.check(testsupport::agree(d, e), "Z1: direct vs exponential");
  }
}

TEST_CASE("criterion 5: Green's function cross-validation") {
  Criterion crit(5, "killed solves vs MC on Z3, closed form on the lazy line", 300);
  SimpleWalkZd z3(3);
  const LatticePoint origin{};

  auto t10 = make_ball_truncation(z3, origin, 10, BoundaryMode::kKilledZero);
  auto t15 = make_ball_truncation(z3, origin, 15, BoundaryMode::kKilledZero);
  const double g10 = greens_exact(z3, t10, origin).at(origin);
  const double g15 = greens_exact(z3, t15, origin).at(origin);
  crit.check(g10 > 0 && g15 >= g10, "killed diagonals monotone in the radius");

  const auto mc = estimate_greens(z3, origin, origin, 10000, 100000, 51, kWorkers);
  // Combined relative tolerance: each route carries 1 percent, plus the MC
  // noise allowance. The biases have opposite signs (spatial vs temporal
  // truncation), so the band is genuinely needed.
  const double tol = 0.01 * (mc.mean + g15) + 4.0 * mc.std_error;
  crit.check(std::abs(mc.mean - g15) <= tol, "Z3 diagonal: exact vs MC");

  LazyLine lazy;
  auto lt = make_range_truncation(lazy, 2, 60, BoundaryMode::kKilledZero);
  auto lg = greens_exact(lazy, lt, int64_t{2});
  for (int64_t n_target : {2, 5, 10}) {
    crit.check(std::abs(lg.at(n_target) - static_cast<double>(n_target)) <=
                   0.01 * static_cast<double>(n_target),
               "lazy line g(2,n) = n within 1 percent");
  }
}

TEST_CASE("criterion 6: fixed-point correctness, property-based") {
  Criterion crit(6, "residuals, bracket ordering and gap shrinkage", 120);

  auto run_family = [&](const auto& chain, const auto& field, const auto& x0,
                        std::vector<double> radii) {
    double prev_gap = 2.0;
    bool shrank = false;
    for (double r : radii) {
      auto trunc = make_radius_truncation(chain, r, BoundaryMode::kKilledZero);
      auto [lower, upper] =
          pi_annealed_bracket(chain, field, trunc.states, trunc.provenance);
      bool ordered = true;
      for (size_t i = 0; i < lower.values.size(); ++i)
        ordered = ordered && lower.values[i] <= upper.values[i] + 1e-12;
      crit.check(ordered, "lower bracket below upper bracket");
      crit.check(pi_identity_residual(chain, field, lower) <= 1e-10,
                 "lower residual at 1e-10");
      crit.check(pi_identity_residual(chain, field, upper) <= 1e-10,
                 "upper residual at 1e-10");
      const double gap = upper.at(x0) - lower.at(x0);
      crit.check(gap <= prev_gap + 1e-12, "gap monotone over radii");
      if (gap < prev_gap - 1e-12) shrank = true;
      prev_gap = gap;
    }
    crit.check(shrank, "gap strictly shrinks somewhere");
  };

  run_family(LazyLine{}, RadialField(2.0, 0.5), int64_t{2}, {20, 40, 80});
  run_family(DriftLine{}, ConstantOnSetField<EverythingSet>(EverythingSet{}, 0.15),
             int64_t{0}, {10, 20, 30});
  run_family(SimpleWalkZd{3}, ConstantOnSetField<BlobSet>(BlobSet{3}, 0.3),
             LatticePoint{}, {6, 8, 10});
}

namespace {

/// Membership in one blob ball, with a cheap axis reject for the hot loop.
struct BlobBall {
  double cz, r, r2;
  explicit BlobBall(int n)
      : cz(std::exp2(n)), r(std::exp2(0.5 * n)), r2(r * r) {}
  bool contains(const LatticePoint& p) const {
    const double dz = static_cast<double>(p.c[2]) - cz;
    if (dz > r || dz < -r) return false;
    const double dx = p.c[0], dy = p.c[1];
    return dx * dx + dy * dy + dz * dz <= r2;
  }
};

}  // namespace

TEST_CASE("criterion 7: example 1 evidence suite") {
  Criterion crit(7, "blob transience and growing per-ball criterion sums", 600);
  SimpleWalkZd z3(3);
  const LatticePoint origin{};
  const BlobSet blob{6};

  // (a) hitting probability strictly below one.
  const auto hit = estimate_hitting_probability(z3, origin, blob, 100000,
                                                40000, 71, kWorkers);
  std::printf("    blob hitting: %.4f (se %.4f)\n", hit.mean, hit.std_error);
  crit.check(1.0 - hit.mean > 4.0 * hit.std_error,
             "hitting estimate below one by more than 4se");

  // (b) per-ball contributions c * sum_{ball n} g(0, x) via occupation
  // times; with c constant the comparisons reduce to the occupations.
  std::vector<BlobBall> balls;
  for (int n = 1; n <= 6; ++n) balls.emplace_back(n);
  const auto occ = estimate_set_occupation(z3, origin, balls, 100000, 20000,
                                           72, kWorkers);
  std::printf("    per-ball sums:");
  for (const auto& o : occ) std::printf(" %.3f(se %.3f)", o.mean, o.std_error);
  std::printf("  ratio 6/1 = %.3f\n", occ[5].mean / occ[0].mean);
  bool increasing = true;
  for (size_t k = 0; k + 1 < occ.size(); ++k)
    increasing = increasing && occ[k + 1].mean > occ[k].mean;
  crit.check(increasing, "per-ball contributions strictly increasing");
  crit.check(occ[5].mean > 4.0 * occ[0].mean, "ball-6 over ball-1 ratio above 4");
}

TEST_CASE("criterion 8: annulus suite") {
  Criterion crit(8, "annulus partitions, drift-tree levels, regularity", 120);

  // Half-open geometric ladders partition the positive-Green set.
  auto check_partition = [&](const auto& chain, const auto& trunc,
                             const auto& x0, const char* what) {
    auto g = greens_exact(chain, trunc, x0);
    size_t positive = 0;
    for (double v : g.values)
      if (v > 0) ++positive;
    std::set<typename std::decay_t<decltype(trunc)>::State> seen;
    bool disjoint = true;
    for (const auto& ann : annulus_ladder(g, 0.5))
      for (const auto& s : ann.members)
        disjoint = disjoint && seen.insert(s).second;
    crit.check(disjoint, what);
    crit.check(seen.size() == positive, what);
  };
  SimpleWalkZd z3(3);
  check_partition(z3, make_ball_truncation(z3, LatticePoint{}, 8,
                                           BoundaryMode::kKilledZero),
                  LatticePoint{}, "Z3 ladder partitions");
  DriftTree dt;
  check_partition(dt, make_generation_truncation(dt, 12, BoundaryMode::kKilledZero),
                  tree_root(), "drift-tree ladder partitions");

  // Drift-tree annuli at alpha = 1/2 are exact generation pairs.
  {
    auto trunc = make_generation_truncation(dt, 12, BoundaryMode::kKilledZero);
    auto g = greens_exact(dt, trunc, tree_root());
    for (uint32_t n : {2u, 5u}) {
      const auto ann = build_annulus(g, std::exp2(-static_cast<double>(n)), 0.5,
                                     AnnulusConvention::kClosed);
      bool exact = ann.members.size() == (1ULL << n) + (1ULL << (n + 1));
      for (const auto& v : ann.members)
        exact = exact && (v.depth == n || v.depth == n + 1);
      crit.check(exact, "annulus equals two generations");
    }
  }

  // Regularity: radial passes, alternating shells fail.
  {
    auto trunc = make_ball_truncation(z3, LatticePoint{}, 10,
                                      BoundaryMode::kKilledZero);
    auto g = greens_exact(z3, trunc, LatticePoint{});
    RadialField radial(2.0, 0.5, 1.0);
    const auto good = regularity_check(g, radial, 2.0, 6.0, 4000, 81);
    crit.check(good.premise_pairs > 0 && good.pass, "radial field passes");

    ConstantOnSetField<ShellParitySet> alternating(ShellParitySet{0}, 0.5, 1e-6);
    const auto bad = regularity_check(g, alternating, 2.0, 6.0, 4000, 81);
    crit.check(!bad.pass && !bad.violations.empty(),
               "alternating shells produce violations");
  }
}
