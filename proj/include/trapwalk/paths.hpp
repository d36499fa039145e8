// Seeded path sampling with first-visit bookkeeping.
#pragma once

#include <cstdint>
#include <vector>

#include "trapwalk/chains.hpp"
#include "trapwalk/rng.hpp"

namespace trapwalk {

/// A sampled trajectory X_0..X_horizon plus tau(X_i) = i flags.
template <class Chain>
struct PathSample {
  std::vector<typename Chain::State> states;
  std::vector<uint8_t> first_visit;
  uint64_t seed = 0;
};

/// Streams a path through `visit(t, state, first)` without storing it.
/// Stops early when the visitor returns false.
template <ChainFamily Chain, class Visitor>
void walk_first_visit(const Chain& chain, typename Chain::State x0,
                      int64_t horizon, rng::SplitMix64& g, Visitor&& visit) {
  FirstVisitTracker<Chain> tracker;
  typename Chain::State x = std::move(x0);
  if (!visit(int64_t{0}, x, tracker.observe(x))) return;
  for (int64_t t = 1; t <= horizon; ++t) {
    x = chain.step(x, g);
    if (!visit(t, x, tracker.observe(x))) return;
  }
}

/// Same, without the first-visit tracker (occupation counts, hitting times).
template <ChainFamily Chain, class Visitor>
void walk(const Chain& chain, typename Chain::State x0, int64_t horizon,
          rng::SplitMix64& g, Visitor&& visit) {
  typename Chain::State x = std::move(x0);
  if (!visit(int64_t{0}, x)) return;
  for (int64_t t = 1; t <= horizon; ++t) {
    x = chain.step(x, g);
    if (!visit(t, x)) return;
  }
}

/// Materializes a full path. Identical (chain, x0, horizon, seed) inputs
/// produce bit-identical samples.
template <ChainFamily Chain>
PathSample<Chain> sample_path(const Chain& chain, typename Chain::State x0,
                              int64_t horizon, uint64_t seed) {
  PathSample<Chain> out;
  out.seed = seed;
  out.states.reserve(static_cast<size_t>(horizon) + 1);
  out.first_visit.reserve(static_cast<size_t>(horizon) + 1);
  rng::SplitMix64 g = rng::stream_for(seed, 0);
  walk_first_visit(chain, std::move(x0), horizon, g,
                   [&](int64_t, const typename Chain::State& s, bool fresh) {
                     out.states.push_back(s);
                     out.first_visit.push_back(fresh ? 1 : 0);
                     return true;
                   });
  return out;
}

}  // namespace trapwalk
