// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

// Test-side reference implementations. Each one recomputes its quantity from
// the raw physical model (or by brute force) without calling the library
// routine under test.

#ifndef TTPRUNE_TESTS_ORACLES_HPP
#define TTPRUNE_TESTS_ORACLES_HPP

#include "ttprune/allocator.hpp"
#include "ttprune/data.hpp"
#include "ttprune/random.hpp"
#include "ttprune/tinynn.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

using ttprune::allocator::BoundConstants;
using ttprune::allocator::TierProfile;
using ttprune::netmodel::NetworkConfig;

/// Round latency of a tier representative with `kept_fc` surviving FC
/// weights (real-valued), from first principles.
double tier_latency(const TierProfile &tier, const NetworkConfig &cfg, double b, double kept_fc,
                    int epochs);

/// Smallest rho in [0, 1] meeting the deadline, by bisection on the latency
/// (60 halvings). +inf when even rho = 1 misses it.
double min_ratio_bisect(const TierProfile &tier, const NetworkConfig &cfg, double b, int epochs);

/// Same quantity from the rearranged deadline equation, clamped at 0; +inf
/// when infeasible. Cheap enough for grid search.
double min_ratio_direct(const TierProfile &tier, const NetworkConfig &cfg, double b, int epochs);

/// 1 - (m dT - W_conv x) / (x W_fc) with x the time per weight, no clamp.
double ratio_unclamped(const TierProfile &tier, const NetworkConfig &cfg, double b, int epochs);

/// Per-round objective 3 L D^2 / ((1 - 4 L delta) M) sum (S/D)^2 rho.
double objective(std::span<const TierProfile> tiers, const BoundConstants &c,
                 std::span<const double> rho);

struct GridResult {
  std::vector<double> b;
  double value = 0.0;
};

/// Exhaustive search over the simplex grid sum b <= 1 with the given step,
/// followed by successively finer grids (step / 10 each time) centred on the
/// incumbent until `final_step`. Each finer grid is re-centred until the
/// incumbent stops improving.
GridResult grid_search(std::span<const TierProfile> tiers, const NetworkConfig &cfg,
                       const BoundConstants &c, int epochs, double step = 1e-3,
                       double final_step = 1e-10);

/// Central finite-difference gradient of f at x with step h.
std::vector<double> finite_difference(const std::function<double(std::span<const double>)> &f,
                                      std::span<const double> x, double h);

/// Root of a continuous decreasing function g on [lo, hi] by bisection.
double bisect_decreasing(const std::function<double(double)> &g, double lo, double hi,
                         int iterations = 200);

/// Random tier at benchmark scale: distance 50..500 m, c 5e3..1.5e4, f 5 GHz,
/// 1..10 users, 50..150 samples per user.
TierProfile random_tier(ttprune::Rng &rng, int tier_index, const ttprune::pruning::LayerLayout &layout);

struct Instance {
  std::vector<TierProfile> tiers;
  NetworkConfig cfg;
  BoundConstants consts;
  int epochs = 5;
};

/// M random tiers (indices 1..M) sharing one layout, with dT drawn so that
/// the unpruned model misses the deadline at an equal split by a random
/// factor: some tiers must prune, most instances stay feasible.
Instance random_instance(ttprune::Rng &rng, int tier_count);

/// True when some split of the band lets every tier meet its deadline, by
/// the same grid the search uses.
bool feasible(const Instance &inst);

} // namespace oracle

#endif // TTPRUNE_TESTS_ORACLES_HPP
