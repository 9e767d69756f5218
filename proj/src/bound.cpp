// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "ttprune/bound.hpp"

#include "ttprune/errors.hpp"

#include <stdexcept>

namespace ttprune::bound {

BoundReport evaluate_bound(const allocator::BoundConstants &consts,
                           std::span<const allocator::TierProfile> tiers,
                           const std::vector<std::vector<double>> &rho_history, int rounds,
                           double f_init_gap) {
  if (tiers.empty()) {
    throw std::invalid_argument("evaluate_bound: no tiers");
  }
  auto c = consts;
  c.tier_count = static_cast<int>(tiers.size());
  allocator::validate(c);
  if (rounds < 0 || rho_history.size() != static_cast<std::size_t>(rounds)) {
    throw std::invalid_argument("evaluate_bound: need one ratio row per round");
  }
  for (const auto &row : rho_history) {
    if (row.size() != tiers.size()) {
      throw std::invalid_argument("evaluate_bound: need one ratio per tier in every round");
    }
  }

  const double m = static_cast<double>(tiers.size());
  const double k = static_cast<double>(rounds);
  const double gap = 1.0 - 4.0 * c.lipschitz * c.delta;
  const double eps2 = c.epsilon * c.epsilon;
  const double phi2 = c.phi * c.phi;

  BoundReport r;
  double total_data = 0.0;
  double s_sq_sum = 0.0;
  for (const auto &t : tiers) {
    const double s = static_cast<double>(t.user_count);
    r.omega1 += (s / t.data_count) * (s / t.data_count) * eps2;
    s_sq_sum += s * s;
    total_data += t.data_count;
  }
  for (const auto &t : tiers) {
    const double s = static_cast<double>(t.user_count);
    r.omega2 += (s_sq_sum - s * s) * phi2;
  }

  r.term_init = f_init_gap / gap;
  for (const auto &row : rho_history) {
    r.term_pruning += c.xi * allocator::objective(tiers, c, row);
  }
  r.term_drift = k * c.xi * c.lipschitz * eps2 / gap;
  r.term_mixed = c.xi * k / (gap * 2.0 * m) *
                 (3.0 * c.lipschitz * r.omega1 +
                  (m - 1.0) / (c.lipschitz * total_data * total_data) * r.omega2);
  r.rhs_total = r.term_init + r.term_pruning + r.term_drift + r.term_mixed;
  return r;
}

double bound_lhs(const allocator::BoundConstants &consts, std::span<const double> grad_norms_sq) {
  double sum = 0.0;
  for (double g : grad_norms_sq) {
    sum += g;
  }
  return consts.xi / (4.0 * consts.lipschitz) * sum;
}

double grad_norm_squared(std::span<const double> grad) {
  double sum = 0.0;
  for (double g : grad) {
    sum += g * g;
  }
  return sum;
}

double empirical_grad_norm(const tinynn::ModelSpec &spec, std::span<const double> weights,
                           const data::LabeledDataset &data) {
  if (data.size() == 0) {
    throw std::invalid_argument("empirical_grad_norm: empty dataset");
  }
  std::vector<double> grad(weights.size());
  tinynn::loss_and_gradient(spec, weights, data, grad);
  return grad_norm_squared(grad);
}

} // namespace ttprune::bound
