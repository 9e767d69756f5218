// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_ALLOCATOR_HPP
#define TTPRUNE_ALLOCATOR_HPP

#include "ttprune/netmodel.hpp"
#include "ttprune/pruning.hpp"

#include <cstddef>
#include <span>
#include <vector>

/// Joint pruning-ratio / bandwidth allocation for one global round.
///
/// Per participating tier m the deadline reads
///
///   (W_conv + (1 - rho) W_fc) * (zeta c / f + q / R(b)) <= m * dT,
///   R(b) = b * B_eff * log2(1 + p g / sigma^2),
///
/// so for a given bandwidth fraction b the smallest admissible ratio is
/// available in closed form. Substituting it into the per-round objective
/// Delta * sum_m (S_m / D_m)^2 rho_m leaves a separable convex problem in b
/// over the simplex sum_m b_m <= 1; its KKT stationarity condition gives b as
/// a function of the budget multiplier lambda, and lambda is located by
/// bisection on the budget residual.
///
/// B_eff is B / band_sharers: a tier's fraction is split evenly between the
/// devices uploading in it concurrently. With band_sharers = 1 every formula
/// reduces to the single-representative-device form.
namespace ttprune::allocator {

using netmodel::NetworkConfig;
using pruning::LayerLayout;

/// Tier-average device used by the closed forms.
struct TierProfile {
  int tier_index = 1;
  std::size_t user_count = 1; // S_m
  double data_count = 1.0;    // D_m
  double avg_cycles_per_weight = 1e4;
  double avg_cpu_freq_hz = 5e9;
  double avg_gain = 1e-10;
  LayerLayout layout;
  std::size_t band_sharers = 1;
};

/// Constants of the convergence bound. Only the prefactor enters the
/// allocator; the rest is consumed by the bound module.
struct BoundConstants {
  double lipschitz = 1.0;   // L
  double delta = 0.1;       // gradient-drift constant, needs delta < 1/(4L)
  double epsilon = 0.1;     // model-drift bound
  double beta = 1.0;        // local-gradient ratio; carried but unused
  double phi = 0.1;         // local-gradient drift bound
  double noise_scale = 1.0; // pruning-noise constant D
  double xi = 0.5;          // mean-value parameter in (0, M)
  double learning_rate = 0.0015;
  int tier_count = 1;       // M

  /// 3 L D^2 / ((1 - 4 L delta) M).
  [[nodiscard]] double objective_prefactor() const;
};

/// Throws ConfigError unless every constant is positive and delta < 1/(4L).
void validate(const BoundConstants &consts);

struct TierAllocation {
  int tier_index = 1;
  double bandwidth_fraction = 0.0;
  double pruning_ratio = 0.0;
};

struct AllocationDecision {
  std::vector<TierAllocation> tiers;
  double lambda_star = 0.0;
  double objective_value = 0.0;
};

/// Bandwidth interval on which a tier is feasible (lower) and still benefits
/// from more bandwidth (upper: where the minimal ratio reaches 0, capped at 1).
struct BandwidthBox {
  double lower = 0.0;
  double upper = 1.0;
};

/// Rate seen by the tier's representative device at fraction b.
double tier_rate(const TierProfile &tier, const NetworkConfig &cfg, double bandwidth_fraction);

/// Time per surviving weight: zeta c / f + q / R(b).
double time_per_weight(const TierProfile &tier, const NetworkConfig &cfg,
                       double bandwidth_fraction, int local_epochs);

/// 1 - (m dT - W_conv X) / (X W_fc) without the (.)^+ clamp.
double pruning_ratio_unclamped(const TierProfile &tier, const NetworkConfig &cfg,
                               double bandwidth_fraction, int local_epochs);

/// Smallest pruning ratio meeting the tier deadline at fraction b, clamped at
/// 0. Throws InfeasibleError when even rho = 1 misses the deadline and
/// std::invalid_argument for b <= 0.
double min_pruning_ratio(const TierProfile &tier, const NetworkConfig &cfg,
                         double bandwidth_fraction, int local_epochs);

/// Delta * sum_m (S_m / D_m)^2 rho_m for one round.
double objective(std::span<const TierProfile> tiers, const BoundConstants &consts,
                 std::span<const double> ratios);

/// KKT stationary point of one tier's Lagrangian for multiplier lambda,
/// before projection. May be negative or exceed 1.
double bandwidth_closed_form_unclamped(const TierProfile &tier, const NetworkConfig &cfg,
                                       const BoundConstants &consts, double lambda,
                                       int local_epochs);

/// bandwidth_closed_form_unclamped projected onto [0, 1]. Throws
/// std::invalid_argument for lambda <= 0.
double bandwidth_closed_form(const TierProfile &tier, const NetworkConfig &cfg,
                             const BoundConstants &consts, double lambda, int local_epochs);

/// Throws InfeasibleError when no fraction in (0, 1] lets the tier meet its
/// deadline at rho = 1.
BandwidthBox feasible_box(const TierProfile &tier, const NetworkConfig &cfg, int local_epochs);

/// Projected water-filling over the participating tiers: every tier gets
/// clamp(b_m(lambda*), box_m) with sum_m b_m = 1. When all tiers reach zero
/// pruning before the budget is spent, lambda* = 0 and the budget is spread
/// in proportion to the saturation points (the objective is 0 either way).
/// Throws InfeasibleError if the budget cannot cover every tier's minimum.
AllocationDecision solve_lambda(std::span<const TierProfile> tiers, const NetworkConfig &cfg,
                                const BoundConstants &consts, int local_epochs);

/// Pruning ratio written directly in terms of b*, clamped to [0, 1]. Equals
/// min_pruning_ratio at the same b*. Throws std::invalid_argument for b* <= 0.
double final_pruning_ratio(const TierProfile &tier, const NetworkConfig &cfg, double b_star,
                           int local_epochs);

struct TierConvexity {
  int tier_index = 1;
  double min_second_difference = 0.0;
  double max_second_difference = 0.0;
};

struct ConvexityReport {
  std::vector<TierConvexity> tiers;
  bool convex = true; // every second difference >= -1e-9
};

/// Second differences of Delta (S/D)^2 rho(b) on b = i / points, i = 1..points.
ConvexityReport verify_convexity(std::span<const TierProfile> tiers, const NetworkConfig &cfg,
                                 const BoundConstants &consts, int local_epochs,
                                 std::size_t points = 2000);

/// Canonical per-term form f(x) = 1 - (V1 - V2 / x) / (V3 + V4 / x) and its
/// analytic second derivative 2 V3 (V1 V4 + V2 V3) / (V3 x + V4)^3.
double canonical_term(double v1, double v2, double v3, double v4, double x);
double canonical_second_derivative(double v1, double v2, double v3, double v4, double x);

} // namespace ttprune::allocator

#endif // TTPRUNE_ALLOCATOR_HPP
