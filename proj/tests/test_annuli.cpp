#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "trapwalk/annuli.hpp"
#include "trapwalk/predicates.hpp"
#include "test_support.hpp"

using namespace trapwalk;

TEST_CASE("annulus filtering: empty above the maximum, full ray at g = 1") {
  DriftLine chain;
  auto trunc = make_range_truncation(chain, 0, 25, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, int64_t{0});

  const auto empty = build_annulus(g, 3.0, 0.5);
  CHECK(empty.members.empty());

  const auto ray = build_annulus(g, 1.0, 0.5);
  CHECK(ray.members.size() == trunc.states.size());

  CHECK_THROWS_AS(build_annulus(g, 1.0, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(build_annulus(g, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("drift tree annuli are exact generation pairs") {
  DriftTree chain;
  auto trunc = make_generation_truncation(chain, 12, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, tree_root());

  for (uint32_t n : {2u, 5u}) {
    // g = 2^-k at generation k, so [L/2, L] with L = 2^-n picks
    // generations n and n+1 exactly.
    const auto ann = build_annulus(g, std::exp2(-static_cast<double>(n)), 0.5,
                                   AnnulusConvention::kClosed);
    const size_t expected = (1ULL << n) + (1ULL << (n + 1));
    REQUIRE(ann.members.size() == expected);
    for (const auto& v : ann.members)
      REQUIRE((v.depth == n || v.depth == n + 1));
  }
}

TEST_CASE("annulus density: trivial predicates and the empty error") {
  DriftLine chain;
  auto trunc = make_range_truncation(chain, 0, 25, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, int64_t{0});
  const auto ray = build_annulus(g, 1.0, 0.5);
  CHECK(annulus_density(ray, EverythingSet{}) == 1.0);
  CHECK(annulus_density(ray, NothingSet{}) == 0.0);

  const auto empty = build_annulus(g, 3.0, 0.5);
  CHECK_THROWS_AS(annulus_density(empty, EverythingSet{}), std::domain_error);
}

namespace {

template <ChainFamily Chain>
void check_partition(const Chain& chain, const Truncation<Chain>& trunc,
                     const typename Chain::State& x0) {
  auto g = greens_exact(chain, trunc, x0);
  const auto ladder = annulus_ladder(g, 0.5);

  size_t positive = 0;
  for (double v : g.values)
    if (v > 0) ++positive;

  size_t covered = 0;
  std::set<typename Chain::State> seen;
  for (const auto& ann : ladder) {
    for (const auto& s : ann.members) {
      REQUIRE(seen.insert(s).second);  // disjoint
      ++covered;
    }
  }
  REQUIRE(covered == positive);  // exact coverage
}

}  // namespace

TEST_CASE("half-open geometric annuli partition the positive-Green set") {
  SimpleWalkZd z3(3);
  check_partition(z3, make_ball_truncation(z3, LatticePoint{}, 8,
                                           BoundaryMode::kKilledZero),
                  LatticePoint{});
  DriftTree dt;
  check_partition(dt, make_generation_truncation(dt, 11, BoundaryMode::kKilledZero),
                  tree_root());
}

TEST_CASE("annulus densities stay within [0,1] and blob densities stay below 1") {
  SimpleWalkZd chain(3);
  auto trunc = make_ball_truncation(chain, LatticePoint{}, 10, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, LatticePoint{});
  const BlobSet blob{6};
  double max_clean_density = 0.0;
  size_t evaluated = 0;
  for (const auto& ann : annulus_ladder(g, 0.5)) {
    if (ann.members.empty()) continue;
    const double d = annulus_density(ann, blob);
    REQUIRE(d >= 0.0);
    REQUIRE(d <= 1.0);
    if (!ann.edge_contaminated) {
      max_clean_density = std::max(max_clean_density, d);
      ++evaluated;
    }
  }
  REQUIRE(evaluated > 0);
  CHECK(max_clean_density < 1.0);
}

TEST_CASE("criterion sums: zero field stays at zero") {
  LazyLine chain;
  auto trunc = make_range_truncation(chain, 2, 50, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, int64_t{2});
  const auto series = criterion_partial_sums(g, ZeroField{}, SumOrdering::kByNormAscending);
  for (double s : series.partial_sums) REQUIRE(s == 0.0);
  CHECK(series.growth == GrowthClass::kBoundedTrend);
}

TEST_CASE("criterion sums: lazy line harmonic growth") {
  LazyLine chain;
  const int64_t n_hi = 300;
  auto trunc = make_range_truncation(chain, 2, n_hi, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, int64_t{2});
  RadialField field(2.0, 0.5);  // q(n) = 1/n^2, so terms are 1/n
  const auto series =
      criterion_partial_sums(g, field, SumOrdering::kByNormAscending);

  // Harmonic oracle: S_k = H_{k+1} - 1.
  double harmonic = 0;
  for (size_t k = 0; k < series.partial_sums.size(); ++k) {
    harmonic += 1.0 / static_cast<double>(k + 2);
    REQUIRE(series.partial_sums[k] == Catch::Approx(harmonic).epsilon(1e-9));
  }
  CHECK(series.growth == GrowthClass::kLogGrowth);
  CHECK(series.log_slope == Catch::Approx(1.0).margin(0.1));

  // Partial sums are nondecreasing by construction.
  for (size_t k = 1; k < series.partial_sums.size(); ++k)
    REQUIRE(series.partial_sums[k] >= series.partial_sums[k - 1]);
}

TEST_CASE("criterion sums: polynomial terms classify as power growth") {
  LazyLine chain;
  auto trunc = make_range_truncation(chain, 2, 400, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, int64_t{2});
  RadialField field(0.5, 0.5);  // q(n) = n^(-1/2), terms ~ sqrt(n)
  const auto series =
      criterion_partial_sums(g, field, SumOrdering::kByNormAscending);
  CHECK(series.growth == GrowthClass::kPowerGrowth);
  CHECK(series.power_exponent == Catch::Approx(1.5).margin(0.15));
}

TEST_CASE("criterion final sums are ordering-invariant") {
  SimpleWalkZd chain(3);
  auto trunc = make_ball_truncation(chain, LatticePoint{}, 8, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, LatticePoint{});
  RadialField field(2.0, 0.5, 1.0);
  const auto by_norm = criterion_partial_sums(g, field, SumOrdering::kByNormAscending);
  const auto by_g = criterion_partial_sums(g, field, SumOrdering::kByGreensDescending);
  REQUIRE(std::abs(by_norm.partial_sums.back() - by_g.partial_sums.back()) <= 1e-12);
}

TEST_CASE("blob per-ball contributions: cross-validated route agreement") {
  // Measured structure of sum_{ball n} g(0, x): ball 1 sits against the
  // origin where g is O(1), so its sum (~4.4) exceeds ball 2 (~3.9); from
  // ball 2 onward the sums grow along the ~ 2^(n/2) trend. Both routes
  // must reproduce that shape.
  SimpleWalkZd chain(3);
  const LatticePoint origin{};
  const BlobSet blob{3};

  auto trunc = make_ball_truncation(chain, origin, 22, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, origin);
  std::vector<double> exact_sums;
  for (int n = 1; n <= 3; ++n) {
    double sum = 0.0;
    for (size_t i = 0; i < g.states.size(); ++i)
      if (blob.in_ball(g.states[i], n)) sum += g.values[i];
    exact_sums.push_back(sum);
  }

  struct Ball {
    BlobSet blob;
    int n;
    bool contains(const LatticePoint& p) const { return blob.in_ball(p, n); }
  };
  std::vector<Ball> balls{{blob, 1}, {blob, 2}, {blob, 3}};
  const auto occ = estimate_set_occupation(chain, origin, balls, 10000, 10000, 2718);

  // Ball 1 beats ball 2 on both routes; growth resumes at ball 3.
  REQUIRE(exact_sums[0] > exact_sums[1]);
  REQUIRE(occ[0].mean > occ[1].mean);
  REQUIRE(occ[2].mean > occ[1].mean);
  // Killed sums are lower bounds of the horizon-limited occupations here
  // (spatial suppression at radius 22 far exceeds the temporal tail).
  for (int n = 0; n < 3; ++n)
    CHECK(exact_sums[static_cast<size_t>(n)] <=
          occ[static_cast<size_t>(n)].mean + 4 * occ[static_cast<size_t>(n)].std_error);
}

TEST_CASE("regularity: constant fields pass with ratio one") {
  SimpleWalkZd chain(3);
  auto trunc = make_ball_truncation(chain, LatticePoint{}, 8, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, LatticePoint{});
  ConstantOnSetField<EverythingSet> field(EverythingSet{}, 0.3);
  for (double c : {1.5, 2.0, 4.0}) {
    const auto report = regularity_check(g, field, c, 1.5, 3000, 11);
    REQUIRE(report.premise_pairs > 0);
    CHECK(report.pass);
    CHECK(report.min_required_cprime == 1.0);
  }
  CHECK_THROWS_AS(regularity_check(g, field, 1.0, 2.0, 100, 1),
                  std::invalid_argument);
}

TEST_CASE("regularity: radial field passes, alternating shells fail") {
  SimpleWalkZd chain(3);
  auto trunc = make_ball_truncation(chain, LatticePoint{}, 10, BoundaryMode::kKilledZero);
  auto g = greens_exact(chain, trunc, LatticePoint{});

  RadialField radial(2.0, 0.5, 1.0);  // q(x) = min(1/2, (1+|x|)^-2)
  const auto good = regularity_check(g, radial, 2.0, 6.0, 4000, 5);
  REQUIRE(good.premise_pairs > 0);
  CHECK(good.pass);
  CHECK(good.min_required_cprime > 1.0);
  CHECK(good.min_required_cprime <= 6.0);

  // 0.5 on even shells vs 1e-6 on odd shells: neighboring radii share
  // Green's values but their q ratio explodes.
  ConstantOnSetField<ShellParitySet> alternating(ShellParitySet{0}, 0.5, 1e-6);
  const auto bad = regularity_check(g, alternating, 2.0, 6.0, 4000, 5);
  CHECK_FALSE(bad.pass);
  CHECK_FALSE(bad.violations.empty());
  CHECK(bad.min_required_cprime > 1e4);
}
