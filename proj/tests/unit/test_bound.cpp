// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "ttprune/bound.hpp"
#include "ttprune/errors.hpp"
#include "ttprune/random.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace ttprune;
using namespace ttprune::bound;
using allocator::BoundConstants;
using allocator::TierProfile;

namespace {

std::vector<TierProfile> two_tiers() {
  std::vector<TierProfile> t(2);
  t[0].tier_index = 1;
  t[0].user_count = 2;
  t[0].data_count = 2.0;
  t[1].tier_index = 2;
  t[1].user_count = 1;
  t[1].data_count = 1.0;
  return t;
}

BoundConstants zero_constants() {
  BoundConstants c;
  c.lipschitz = 1.0;
  c.delta = 0.1;
  c.epsilon = 1e-300;
  c.phi = 1e-300;
  c.noise_scale = 1.0;
  c.xi = 0.5;
  return c;
}

} // namespace

TEST_CASE("zero inputs give a zero bound") {
  const auto tiers = two_tiers();
  const auto r = evaluate_bound(zero_constants(), tiers, {{0.0, 0.0}}, 1, 0.0);
  CHECK(r.term_init == 0.0);
  CHECK(r.term_pruning == 0.0);
  CHECK(r.rhs_total == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pruning term is linear in the ratios") {
  const auto tiers = two_tiers();
  const auto c = zero_constants();
  const auto a = evaluate_bound(c, tiers, {{0.1, 0.2}, {0.0, 0.3}}, 2, 1.0);
  const auto b = evaluate_bound(c, tiers, {{0.2, 0.4}, {0.0, 0.6}}, 2, 1.0);
  CHECK(b.term_pruning == doctest::Approx(2.0 * a.term_pruning).epsilon(1e-14));
  CHECK(b.term_init == a.term_init);
}

TEST_CASE("terms against a hand-written reference") {
  const auto tiers = two_tiers();
  BoundConstants c;
  c.lipschitz = 2.0;
  c.delta = 0.05;
  c.epsilon = 1.0;
  c.phi = 0.5;
  c.noise_scale = 3.0;
  c.xi = 0.7;
  const std::vector<std::vector<double>> rho{{0.2, 0.0}, {0.5, 0.25}, {0.0, 1.0}};
  const auto r = evaluate_bound(c, tiers, rho, 3, 4.0);

  const double gap = 1.0 - 4.0 * 2.0 * 0.05;
  CHECK(r.omega1 == 2.0);
  // S = (2, 1): (1 * 0.25) + (4 * 0.25).
  CHECK(r.omega2 == doctest::Approx(1.25));
  CHECK(r.term_init == doctest::Approx(4.0 / gap));
  double sum = 0.0;
  for (const auto &row : rho) {
    sum += 1.0 * row[0] + 1.0 * row[1];
  }
  CHECK(r.term_pruning == doctest::Approx(0.7 * 3.0 * 2.0 * 9.0 / (gap * 2.0) * sum));
  CHECK(r.term_drift == doctest::Approx(3.0 * 0.7 * 2.0 / gap));
  const double mixed = 0.7 * 3.0 / (gap * 4.0) * (3.0 * 2.0 * 2.0 + 1.0 / (2.0 * 9.0) * 1.25);
  CHECK(r.term_mixed == doctest::Approx(mixed));
  CHECK(r.rhs_total ==
        doctest::Approx(r.term_init + r.term_pruning + r.term_drift + r.term_mixed));
}

TEST_CASE("pruning term agrees with the allocator objective") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<TierProfile> tiers(1 + rng.index(4));
    for (auto &t : tiers) {
      t.user_count = 1 + rng.index(6);
      t.data_count = rng.uniform(10.0, 500.0);
    }
    auto c = zero_constants();
    c.tier_count = static_cast<int>(tiers.size());
    std::vector<double> row(tiers.size());
    for (auto &v : row) {
      v = rng.uniform();
    }
    const auto r = evaluate_bound(c, tiers, {row}, 1, 0.0);
    CHECK(r.term_pruning ==
          doctest::Approx(c.xi * allocator::objective(tiers, c, row)).epsilon(1e-14));
  }
}

TEST_CASE("bound grows with rounds and ratios") {
  const auto tiers = two_tiers();
  BoundConstants c;
  const auto short_run = evaluate_bound(c, tiers, {{0.1, 0.1}}, 1, 1.0);
  const auto long_run = evaluate_bound(c, tiers, {{0.1, 0.1}, {0.1, 0.1}}, 2, 1.0);
  CHECK(long_run.rhs_total > short_run.rhs_total);
  const auto heavier = evaluate_bound(c, tiers, {{0.5, 0.1}}, 1, 1.0);
  CHECK(heavier.rhs_total > short_run.rhs_total);
}

TEST_CASE("invalid constants and shapes") {
  const auto tiers = two_tiers();
  BoundConstants c;
  c.lipschitz = 1.0;
  c.delta = 0.25;
  CHECK_THROWS_AS(evaluate_bound(c, tiers, {{0.0, 0.0}}, 1, 1.0), ConfigError);
  c.delta = 0.3;
  CHECK_THROWS_AS(evaluate_bound(c, tiers, {{0.0, 0.0}}, 1, 1.0), ConfigError);
  c = BoundConstants{};
  CHECK_THROWS_AS(evaluate_bound(c, tiers, {{0.0}}, 1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_bound(c, tiers, {{0.0, 0.0}}, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_bound(c, std::vector<TierProfile>{}, {}, 0, 1.0),
                  std::invalid_argument);
}

TEST_CASE("left-hand side") {
  BoundConstants c;
  c.xi = 0.5;
  c.lipschitz = 2.0;
  CHECK(bound_lhs(c, std::vector<double>{1.0, 3.0}) == doctest::Approx(0.25));
  CHECK(grad_norm_squared(std::vector<double>{3.0, 4.0}) == 25.0);
}

TEST_CASE("empirical gradient norm matches central differences") {
  tinynn::ModelSpec spec;
  spec.input_dim = 4;
  spec.hidden_dims = {5};
  spec.output_dim = 3;
  spec.conv_width = 3;
  Rng rng(29);
  data::LabeledDataset d;
  d.input_dim = 4;
  d.num_classes = 3;
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j < 4; ++j) {
      d.features.push_back(rng.uniform());
    }
    d.labels.push_back(i % 3);
  }
  auto w = tinynn::init_model(spec).values;
  for (auto &v : w) {
    v += 0.1 * rng.normal();
  }
  double fd_sq = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double h = 1e-6;
    const double orig = w[j];
    w[j] = orig + h;
    const double fp = tinynn::loss_and_accuracy(spec, w, d).loss;
    w[j] = orig - h;
    const double fm = tinynn::loss_and_accuracy(spec, w, d).loss;
    w[j] = orig;
    const double g = (fp - fm) / (2.0 * h);
    fd_sq += g * g;
  }
  CHECK(empirical_grad_norm(spec, w, d) == doctest::Approx(fd_sq).epsilon(1e-3));
  CHECK_THROWS_AS(empirical_grad_norm(spec, w, data::LabeledDataset{}), std::invalid_argument);
}
