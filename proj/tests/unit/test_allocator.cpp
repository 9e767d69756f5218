// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "oracles/oracles.hpp"
#include "ttprune/allocator.hpp"
#include "ttprune/errors.hpp"
#include "ttprune/random.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

using namespace ttprune;
using namespace ttprune::allocator;

namespace {

constexpr int kEpochs = 5;

TierProfile base_tier(int m = 1) {
  TierProfile t;
  t.tier_index = m;
  t.user_count = 4;
  t.band_sharers = 4;
  t.data_count = 400.0;
  t.avg_cycles_per_weight = 1e4;
  t.avg_cpu_freq_hz = 5e9;
  t.avg_gain = netmodel::path_gain(NetworkConfig{}, 300.0);
  t.layout = {500, 5000};
  return t;
}

/// dT at which the tier's unpruned latency at fraction b equals m dT.
double exact_delta_t(const TierProfile &t, double b) {
  NetworkConfig cfg;
  cfg.delta_t_s = 1.0;
  return oracle::tier_latency(t, cfg, b, static_cast<double>(t.layout.fc_weight_count), kEpochs) /
         t.tier_index;
}

} // namespace

TEST_CASE("min_pruning_ratio") {
  const auto tier = base_tier();
  NetworkConfig cfg;

  SUBCASE("slack deadline clamps to zero") {
    cfg.delta_t_s = 1e6;
    CHECK(min_pruning_ratio(tier, cfg, 0.5, kEpochs) == 0.0);
  }
  SUBCASE("unpruned model exactly on the deadline") {
    cfg.delta_t_s = exact_delta_t(tier, 0.5);
    CHECK(min_pruning_ratio(tier, cfg, 0.5, kEpochs) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("matches bisection on the deadline") {
    Rng rng(17);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
      auto inst = oracle::random_instance(rng, 1);
      const auto &t = inst.tiers[0];
      const double b = rng.uniform(0.05, 1.0);
      const double expect = oracle::min_ratio_bisect(t, inst.cfg, b, inst.epochs);
      if (!std::isfinite(expect)) {
        CHECK_THROWS_AS(min_pruning_ratio(t, inst.cfg, b, inst.epochs), InfeasibleError);
        continue;
      }
      CHECK(min_pruning_ratio(t, inst.cfg, b, inst.epochs) == doctest::Approx(expect).epsilon(1e-9));
      ++checked;
    }
    CHECK(checked > 100);
  }
  SUBCASE("non-positive bandwidth is rejected") {
    CHECK_THROWS_AS(min_pruning_ratio(tier, cfg, 0.0, kEpochs), std::invalid_argument);
  }
  SUBCASE("infeasible even at full pruning") {
    cfg.delta_t_s = 1e-9;
    try {
      min_pruning_ratio(tier, cfg, 0.5, kEpochs);
      FAIL("expected InfeasibleError");
    } catch (const InfeasibleError &e) {
      CHECK(e.tier_index() == 1);
      CHECK(e.latency_s() > cfg.delta_t_s);
    }
  }
}

TEST_CASE("objective") {
  BoundConstants c;
  c.tier_count = 2;
  const double pref = 3.0 * c.lipschitz * c.noise_scale * c.noise_scale /
                      ((1.0 - 4.0 * c.lipschitz * c.delta) * 2.0);
  CHECK(c.objective_prefactor() == doctest::Approx(pref));

  auto a = base_tier(1);
  auto b = base_tier(2);
  SUBCASE("zero ratios") {
    const std::vector<TierProfile> tiers{a, b};
    CHECK(objective(tiers, c, std::vector<double>{0.0, 0.0}) == 0.0);
  }
  SUBCASE("single unit tier") {
    c.tier_count = 1;
    a.user_count = 1;
    a.data_count = 1.0;
    const std::vector<TierProfile> tiers{a};
    CHECK(objective(tiers, c, std::vector<double>{0.5}) ==
          doctest::Approx(0.5 * c.objective_prefactor()));
  }
  SUBCASE("six to four user split") {
    a.user_count = 6;
    a.data_count = 600.0;
    b.user_count = 4;
    b.data_count = 350.0;
    const std::vector<TierProfile> tiers{a, b};
    const std::vector<double> rho{0.3, 0.7};
    const double expect = pref * ((6.0 / 600.0) * (6.0 / 600.0) * 0.3 +
                                  (4.0 / 350.0) * (4.0 / 350.0) * 0.7);
    CHECK(objective(tiers, c, rho) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(oracle::objective(tiers, c, rho) == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("ratio outside [0, 1]") {
    const std::vector<TierProfile> tiers{a};
    CHECK_THROWS_AS(objective(tiers, c, std::vector<double>{1.5}), std::invalid_argument);
  }
}

TEST_CASE("bandwidth closed form") {
  auto tier = base_tier();
  NetworkConfig cfg;
  cfg.delta_t_s = exact_delta_t(tier, 0.25);
  BoundConstants c;

  SUBCASE("vanishes for very large multipliers") {
    CHECK(bandwidth_closed_form(tier, cfg, c, 1e300, kEpochs) == 0.0);
  }
  SUBCASE("zero where the square root equals q W_fc") {
    // Solve Delta S^2 m dT q W B r / (D^2 lambda) = (q W)^2 for lambda.
    const double q = cfg.quant_bits;
    const double w = static_cast<double>(tier.layout.fc_weight_count);
    const double band = cfg.bandwidth_total_hz / static_cast<double>(tier.band_sharers);
    const double r = std::log2(1.0 + cfg.tx_power_w * tier.avg_gain /
                                         (cfg.noise_density_w_per_hz * cfg.bandwidth_total_hz));
    const double s = static_cast<double>(tier.user_count);
    const double lambda = c.objective_prefactor() * s * s * cfg.delta_t_s * q * w * band * r /
                          (tier.data_count * tier.data_count * q * w * q * w);
    CHECK(std::abs(bandwidth_closed_form_unclamped(tier, cfg, c, lambda, kEpochs)) < 1e-12);
    CHECK(bandwidth_closed_form(tier, cfg, c, lambda, kEpochs) == doctest::Approx(0.0));
  }
  SUBCASE("matches the stationarity root of the Lagrangian") {
    // Pick b0, derive lambda from d/db [w rho(b)] + lambda = 0 numerically,
    // then the closed form at that lambda must return b0.
    const double weight = c.objective_prefactor() * std::pow(tier.user_count / tier.data_count, 2);
    for (double b0 : {0.1, 0.3, 0.6, 0.9}) {
      auto f = [&](std::span<const double> x) {
        return weight * oracle::ratio_unclamped(tier, cfg, x[0], kEpochs);
      };
      const std::vector<double> at{b0};
      const double slope = oracle::finite_difference(f, at, 1e-6)[0];
      const double lambda = -slope;
      REQUIRE(lambda > 0.0);
      CHECK(bandwidth_closed_form(tier, cfg, c, lambda, kEpochs) ==
            doctest::Approx(b0).epsilon(1e-6));
      // And by root search on the stationarity condition itself.
      auto g = [&](double b) {
        const std::vector<double> x{b};
        return -oracle::finite_difference(f, x, 1e-7)[0] - lambda;
      };
      CHECK(oracle::bisect_decreasing(g, 1e-3, 1.0, 100) == doctest::Approx(b0).epsilon(1e-5));
    }
  }
  SUBCASE("lambda must be positive") {
    CHECK_THROWS_AS(bandwidth_closed_form(tier, cfg, c, 0.0, kEpochs), std::invalid_argument);
  }
  SUBCASE("allocated-noise mode is refused") {
    cfg.noise_mode = netmodel::NoiseMode::kDensityAllocated;
    CHECK_THROWS_AS(bandwidth_closed_form(tier, cfg, c, 1.0, kEpochs), ConfigError);
  }
}

TEST_CASE("solve_lambda") {
  BoundConstants c;

  SUBCASE("single tier receives the whole band") {
    const auto tier = base_tier();
    NetworkConfig cfg;
    cfg.delta_t_s = exact_delta_t(tier, 1.5);
    const std::vector<TierProfile> tiers{tier};
    const auto d = solve_lambda(tiers, cfg, c, kEpochs);
    REQUIRE(d.tiers.size() == 1);
    CHECK(d.tiers[0].bandwidth_fraction == doctest::Approx(1.0));
    CHECK(d.tiers[0].pruning_ratio ==
          doctest::Approx(final_pruning_ratio(tier, cfg, 1.0, kEpochs)));
    CHECK(d.tiers[0].pruning_ratio > 0.0);
  }
  SUBCASE("identical tiers split evenly") {
    auto a = base_tier(1);
    auto b = base_tier(1);
    NetworkConfig cfg;
    cfg.delta_t_s = exact_delta_t(a, 0.8);
    c.tier_count = 2;
    const std::vector<TierProfile> tiers{a, b};
    const auto d = solve_lambda(tiers, cfg, c, kEpochs);
    CHECK(d.tiers[0].bandwidth_fraction == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(d.tiers[1].bandwidth_fraction == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(d.lambda_star > 0.0);
  }
  SUBCASE("slack deadlines leave no pruning") {
    auto a = base_tier(1);
    auto b = base_tier(2);
    NetworkConfig cfg;
    cfg.delta_t_s = 10.0;
    c.tier_count = 2;
    const std::vector<TierProfile> tiers{a, b};
    const auto d = solve_lambda(tiers, cfg, c, kEpochs);
    CHECK(d.lambda_star == 0.0);
    CHECK(d.objective_value == 0.0);
    double sum = 0.0;
    for (const auto &t : d.tiers) {
      CHECK(t.pruning_ratio == 0.0);
      sum += t.bandwidth_fraction;
    }
    CHECK(sum <= 1.0 + 1e-12);
  }
  SUBCASE("randomized three-tier instances match grid search") {
    Rng rng(2024);
    int solved = 0;
    while (solved < 5) {
      auto inst = oracle::random_instance(rng, 3);
      if (!oracle::feasible(inst)) {
        continue;
      }
      const auto d = solve_lambda(inst.tiers, inst.cfg, inst.consts, inst.epochs);
      const auto grid = oracle::grid_search(inst.tiers, inst.cfg, inst.consts, inst.epochs);
      const double scale = std::max(std::abs(grid.value), 1e-300);
      CHECK(d.objective_value <= grid.value + 1e-6 * scale);
      CHECK(std::abs(d.objective_value - grid.value) <= 1e-6 * scale);
      ++solved;
    }
  }
  SUBCASE("budget and feasibility hold on random instances") {
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
      auto inst = oracle::random_instance(rng, 1 + static_cast<int>(rng.index(3)));
      if (!oracle::feasible(inst)) {
        CHECK_THROWS_AS(solve_lambda(inst.tiers, inst.cfg, inst.consts, inst.epochs),
                        InfeasibleError);
        continue;
      }
      const auto d = solve_lambda(inst.tiers, inst.cfg, inst.consts, inst.epochs);
      double sum = 0.0;
      for (std::size_t i = 0; i < d.tiers.size(); ++i) {
        const auto &a = d.tiers[i];
        sum += a.bandwidth_fraction;
        CHECK(a.pruning_ratio >= 0.0);
        CHECK(a.pruning_ratio <= 1.0);
        const double kept = (1.0 - a.pruning_ratio) *
                            static_cast<double>(inst.tiers[i].layout.fc_weight_count);
        const double lat =
            oracle::tier_latency(inst.tiers[i], inst.cfg, a.bandwidth_fraction, kept, inst.epochs);
        CHECK(lat <= inst.tiers[i].tier_index * inst.cfg.delta_t_s * (1.0 + 1e-9));
      }
      CHECK(sum <= 1.0 + 1e-12);
    }
  }
  SUBCASE("empty tier list") {
    CHECK_THROWS_AS(solve_lambda(std::vector<TierProfile>{}, NetworkConfig{}, c, kEpochs),
                    std::invalid_argument);
  }
  SUBCASE("over-subscribed budget is infeasible") {
    auto a = base_tier(1);
    NetworkConfig cfg;
    cfg.delta_t_s = 1e-9;
    const std::vector<TierProfile> tiers{a};
    CHECK_THROWS_AS(solve_lambda(tiers, cfg, c, kEpochs), InfeasibleError);
  }
}

TEST_CASE("final pruning ratio") {
  auto tier = base_tier();
  NetworkConfig cfg;

  SUBCASE("slack at the full band") {
    cfg.delta_t_s = 1e3;
    CHECK(final_pruning_ratio(tier, cfg, 1.0, kEpochs) == 0.0);
  }
  SUBCASE("equals the minimal ratio") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      auto inst = oracle::random_instance(rng, 1);
      const double b = rng.uniform(0.01, 1.0);
      const double expect = std::min(1.0, std::max(0.0, oracle::ratio_unclamped(
                                                            inst.tiers[0], inst.cfg, b, kEpochs)));
      CHECK(std::abs(final_pruning_ratio(inst.tiers[0], inst.cfg, b, kEpochs) - expect) <= 1e-9);
    }
  }
  SUBCASE("binding deadline holds with equality") {
    cfg.delta_t_s = exact_delta_t(tier, 0.3);
    const double rho = final_pruning_ratio(tier, cfg, 0.2, kEpochs);
    REQUIRE(rho > 0.0);
    const double kept = (1.0 - rho) * static_cast<double>(tier.layout.fc_weight_count);
    CHECK(oracle::tier_latency(tier, cfg, 0.2, kept, kEpochs) ==
          doctest::Approx(cfg.delta_t_s).epsilon(1e-9));
  }
  SUBCASE("zero bandwidth is rejected") {
    CHECK_THROWS_AS(final_pruning_ratio(tier, cfg, 0.0, kEpochs), std::invalid_argument);
  }
}

TEST_CASE("feasible box") {
  auto tier = base_tier();
  NetworkConfig cfg;
  cfg.delta_t_s = exact_delta_t(tier, 0.5);
  const auto box = feasible_box(tier, cfg, kEpochs);
  CHECK(box.upper == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(box.lower < box.upper);
  CHECK(min_pruning_ratio(tier, cfg, box.lower, kEpochs) == doctest::Approx(1.0).epsilon(1e-9));
  cfg.delta_t_s = 1e-9;
  CHECK_THROWS_AS(feasible_box(tier, cfg, kEpochs), InfeasibleError);
}

TEST_CASE("convexity") {
  BoundConstants c;
  SUBCASE("random tiers") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
      auto inst = oracle::random_instance(rng, 2);
      const auto report = verify_convexity(inst.tiers, inst.cfg, inst.consts, inst.epochs);
      CHECK(report.convex);
      for (const auto &t : report.tiers) {
        CHECK(t.min_second_difference >= -1e-9);
      }
    }
  }
  SUBCASE("flat limit of a very wide FC segment") {
    auto tier = base_tier();
    tier.layout.fc_weight_count = 1'000'000'000'000ULL;
    NetworkConfig cfg;
    cfg.delta_t_s = 1.0;
    const std::vector<TierProfile> tiers{tier};
    const auto report = verify_convexity(tiers, cfg, c, kEpochs, 500);
    CHECK(std::abs(report.tiers[0].min_second_difference) < 1e-6);
    CHECK(std::abs(report.tiers[0].max_second_difference) < 1e-6);
  }
  SUBCASE("canonical form with unit coefficients") {
    for (int i = 1; i < 100; ++i) {
      const double x = i / 100.0;
      CHECK(canonical_second_derivative(1, 1, 1, 1, x) > 0.0);
      const double h = 1e-4;
      const double fd = (canonical_term(1, 1, 1, 1, x + h) - 2.0 * canonical_term(1, 1, 1, 1, x) +
                         canonical_term(1, 1, 1, 1, x - h)) /
                        (h * h);
      CHECK(fd == doctest::Approx(canonical_second_derivative(1, 1, 1, 1, x)).epsilon(1e-4));
    }
  }
}

TEST_CASE("monotonicity in bandwidth and deadline") {
  Rng rng(64);
  for (int trial = 0; trial < 20; ++trial) {
    auto inst = oracle::random_instance(rng, 1);
    const auto &t = inst.tiers[0];
    double prev = pruning_ratio_unclamped(t, inst.cfg, 1e-3, kEpochs);
    for (int i = 2; i <= 1000; ++i) {
      const double cur = pruning_ratio_unclamped(t, inst.cfg, i / 1000.0, kEpochs);
      CHECK(cur <= prev);
      prev = cur;
    }
    auto cfg = inst.cfg;
    prev = pruning_ratio_unclamped(t, cfg, 0.5, kEpochs);
    for (int i = 1; i <= 100; ++i) {
      cfg.delta_t_s = inst.cfg.delta_t_s * (1.0 + i / 50.0);
      const double cur = pruning_ratio_unclamped(t, cfg, 0.5, kEpochs);
      CHECK(cur <= prev);
      prev = cur;
    }
  }
}

TEST_CASE("budget sum is non-increasing in lambda") {
  Rng rng(90);
  auto inst = oracle::random_instance(rng, 3);
  double prev = 1e300;
  for (int i = -40; i <= 40; ++i) {
    const double lambda = std::pow(10.0, i / 4.0);
    double sum = 0.0;
    for (const auto &t : inst.tiers) {
      sum += bandwidth_closed_form(t, inst.cfg, inst.consts, lambda, inst.epochs);
    }
    CHECK(sum <= prev);
    prev = sum;
  }
}

TEST_CASE("bound constants validation") {
  BoundConstants c;
  CHECK_NOTHROW(validate(c));
  c.delta = 0.25;
  CHECK_THROWS_AS(validate(c), ConfigError);
  c = BoundConstants{};
  c.lipschitz = 0.0;
  CHECK_THROWS_AS(validate(c), ConfigError);
}
