// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_BOUND_HPP
#define TTPRUNE_BOUND_HPP

#include "ttprune/allocator.hpp"
#include "ttprune/data.hpp"
#include "ttprune/tinynn.hpp"

#include <span>
#include <vector>

/// Convergence upper bound of pruned time-triggered FL, evaluated as a
/// relative diagnostic from user-supplied constants.
namespace ttprune::bound {

struct BoundReport {
  double rhs_total = 0.0;
  double term_init = 0.0;    // f_init_gap / (1 - 4 L delta)
  double term_pruning = 0.0; // xi 3 L D^2 / ((1 - 4 L delta) M) sum_k sum_m (S_m/D_m)^2 rho_km
  double term_drift = 0.0;   // K xi L eps^2 / (1 - 4 L delta)
  double term_mixed = 0.0;   // xi K / ((1 - 4 L delta) 2 M) (3 L Omega1 + (M-1)/(L D_tot^2) Omega2)
  double omega1 = 0.0;       // sum_m (S_m / D_m)^2 eps^2
  double omega2 = 0.0;       // sum_m sum_{j != m} S_j^2 phi^2
};

/// `rho_history[k][m]` is the ratio of tier m+1 in round k+1 (0 when the tier
/// did not upload). M is tiers.size(); consts.tier_count is ignored. D_tot in
/// the Omega2 coefficient is the total data count sum_m D_m. Throws
/// ConfigError when 1 - 4 L delta <= 0 or a constant is out of range, and
/// std::invalid_argument when the history is not K x M.
BoundReport evaluate_bound(const allocator::BoundConstants &consts,
                           std::span<const allocator::TierProfile> tiers,
                           const std::vector<std::vector<double>> &rho_history, int rounds,
                           double f_init_gap);

/// Left-hand side xi / (4 L) sum_k ||grad F(w_G^k)||^2.
double bound_lhs(const allocator::BoundConstants &consts, std::span<const double> grad_norms_sq);

double grad_norm_squared(std::span<const double> grad);

/// ||grad F(w)||^2 of the mean cross-entropy over `data`, frozen weights included.
double empirical_grad_norm(const tinynn::ModelSpec &spec, std::span<const double> weights,
                           const data::LabeledDataset &data);

} // namespace ttprune::bound

#endif // TTPRUNE_BOUND_HPP
