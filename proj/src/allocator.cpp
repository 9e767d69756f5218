// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "ttprune/allocator.hpp"

#include "ttprune/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace ttprune::allocator {

namespace {

constexpr double kBudgetTol = 1e-10;
constexpr int kMaxBisection = 200;

double band_per_sharer(const TierProfile &tier, const NetworkConfig &cfg) {
  return cfg.bandwidth_total_hz / static_cast<double>(std::max<std::size_t>(1, tier.band_sharers));
}

/// log2(1 + p g / sigma^2); independent of b in the supported noise modes.
double spectral(const TierProfile &tier, const NetworkConfig &cfg) {
  return netmodel::spectral_efficiency(cfg, tier.avg_gain, 1.0);
}

double compute_per_weight(const TierProfile &tier, int local_epochs) {
  return local_epochs * tier.avg_cycles_per_weight / tier.avg_cpu_freq_hz;
}

double tier_deadline(const TierProfile &tier, const NetworkConfig &cfg) {
  return tier.tier_index * cfg.delta_t_s;
}

double tier_weight(const TierProfile &tier) {
  const double ratio = static_cast<double>(tier.user_count) / tier.data_count;
  return ratio * ratio;
}

void check_supported(const NetworkConfig &cfg) {
  if (cfg.noise_mode == netmodel::NoiseMode::kDensityAllocated) {
    throw ConfigError("allocator: closed forms require bandwidth-independent noise power");
  }
}

void check_tier(const TierProfile &tier) {
  if (tier.tier_index < 1) {
    throw std::invalid_argument("allocator: tier index must be >= 1");
  }
  if (tier.user_count >= 1 && !(tier.data_count >= 1.0)) {
    throw std::invalid_argument("allocator: a populated tier needs data_count >= 1");
  }
  if (tier.layout.fc_weight_count == 0) {
    throw std::invalid_argument("allocator: tier has no prunable weights");
  }
}

} // namespace

double BoundConstants::objective_prefactor() const {
  return 3.0 * lipschitz * noise_scale * noise_scale /
         ((1.0 - 4.0 * lipschitz * delta) * static_cast<double>(tier_count));
}

void validate(const BoundConstants &c) {
  if (!(c.lipschitz > 0.0 && c.delta > 0.0 && c.epsilon >= 0.0 && c.beta > 0.0 &&
        c.phi >= 0.0 && c.noise_scale > 0.0 && c.xi > 0.0 && c.learning_rate > 0.0)) {
    throw ConfigError("bound constants: L, delta, beta, D, xi, learning rate must be positive; "
                      "epsilon and phi non-negative");
  }
  if (c.tier_count < 1) {
    throw ConfigError("bound constants: tier count must be >= 1");
  }
  if (!(1.0 - 4.0 * c.lipschitz * c.delta > 0.0)) {
    throw ConfigError("bound constants: convergence condition 1 - 4 L delta > 0 violated");
  }
}

double tier_rate(const TierProfile &tier, const NetworkConfig &cfg, double bandwidth_fraction) {
  return bandwidth_fraction * band_per_sharer(tier, cfg) * spectral(tier, cfg);
}

double time_per_weight(const TierProfile &tier, const NetworkConfig &cfg,
                       double bandwidth_fraction, int local_epochs) {
  return compute_per_weight(tier, local_epochs) +
         cfg.quant_bits / tier_rate(tier, cfg, bandwidth_fraction);
}

double pruning_ratio_unclamped(const TierProfile &tier, const NetworkConfig &cfg,
                               double bandwidth_fraction, int local_epochs) {
  const double x = time_per_weight(tier, cfg, bandwidth_fraction, local_epochs);
  const auto w_conv = static_cast<double>(tier.layout.conv_weight_count);
  const auto w_fc = static_cast<double>(tier.layout.fc_weight_count);
  return 1.0 - (tier_deadline(tier, cfg) - w_conv * x) / (x * w_fc);
}

double min_pruning_ratio(const TierProfile &tier, const NetworkConfig &cfg,
                         double bandwidth_fraction, int local_epochs) {
  check_tier(tier);
  if (!(bandwidth_fraction > 0.0)) {
    throw std::invalid_argument("min_pruning_ratio: bandwidth fraction must be positive");
  }
  const double rho = pruning_ratio_unclamped(tier, cfg, bandwidth_fraction, local_epochs);
  if (rho > 1.0) {
    // Feasible only if the conv segment alone fits, with the usual slack.
    const double x = time_per_weight(tier, cfg, bandwidth_fraction, local_epochs);
    const double latency = static_cast<double>(tier.layout.conv_weight_count) * x;
    if (latency > tier_deadline(tier, cfg) * (1.0 + netmodel::kDeadlineRelTol)) {
      throw InfeasibleError("tier " + std::to_string(tier.tier_index) +
                                " misses its deadline even with the FC segment fully pruned",
                            tier.tier_index, latency);
    }
    return 1.0;
  }
  return std::max(0.0, rho);
}

double objective(std::span<const TierProfile> tiers, const BoundConstants &consts,
                 std::span<const double> ratios) {
  if (tiers.size() != ratios.size()) {
    throw std::invalid_argument("objective: one ratio per tier required");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    if (!(ratios[i] >= 0.0 && ratios[i] <= 1.0)) {
      throw std::invalid_argument("objective: ratios must lie in [0, 1]");
    }
    sum += tier_weight(tiers[i]) * ratios[i];
  }
  return consts.objective_prefactor() * sum;
}

double bandwidth_closed_form_unclamped(const TierProfile &tier, const NetworkConfig &cfg,
                                       const BoundConstants &consts, double lambda,
                                       int local_epochs) {
  const double band = band_per_sharer(tier, cfg);
  const double r = spectral(tier, cfg);
  const auto w_fc = static_cast<double>(tier.layout.fc_weight_count);
  const double q = cfg.quant_bits;
  const double s = static_cast<double>(tier.user_count);
  const double numer_sqrt = std::sqrt(consts.objective_prefactor() * s * s *
                                      tier_deadline(tier, cfg) * q * w_fc * band * r /
                                      (tier.data_count * tier.data_count * lambda));
  return tier.avg_cpu_freq_hz * (numer_sqrt - q * w_fc) /
         (band * w_fc * local_epochs * tier.avg_cycles_per_weight * r);
}

double bandwidth_closed_form(const TierProfile &tier, const NetworkConfig &cfg,
                             const BoundConstants &consts, double lambda, int local_epochs) {
  if (!(lambda > 0.0)) {
    throw std::invalid_argument("bandwidth_closed_form: lambda must be positive");
  }
  check_supported(cfg);
  return std::clamp(bandwidth_closed_form_unclamped(tier, cfg, consts, lambda, local_epochs),
                    0.0, 1.0);
}

BandwidthBox feasible_box(const TierProfile &tier, const NetworkConfig &cfg, int local_epochs) {
  check_tier(tier);
  const double a = compute_per_weight(tier, local_epochs);
  const double q_over_rate_at_full = cfg.quant_bits / tier_rate(tier, cfg, 1.0);
  const double deadline = tier_deadline(tier, cfg);
  const auto w_conv = static_cast<double>(tier.layout.conv_weight_count);
  const double w_all = static_cast<double>(tier.layout.total());

  BandwidthBox box;
  if (w_conv > 0.0) {
    // W_conv (a + q / R(b)) <= deadline  <=>  b >= (q / R(1)) / (deadline / W_conv - a)
    const double slack = deadline / w_conv - a;
    const double lower = slack > 0.0 ? q_over_rate_at_full / slack
                                     : std::numeric_limits<double>::infinity();
    if (lower > 1.0 * (1.0 + netmodel::kDeadlineRelTol)) {
      throw InfeasibleError("tier " + std::to_string(tier.tier_index) +
                                " misses its deadline even with the FC segment fully pruned "
                                "and the whole band",
                            tier.tier_index, w_conv * (a + q_over_rate_at_full));
    }
    box.lower = std::min(lower, 1.0);
  }
  const double slack_all = deadline / w_all - a;
  if (slack_all > 0.0) {
    box.upper = std::clamp(q_over_rate_at_full / slack_all, box.lower, 1.0);
  }
  return box;
}

AllocationDecision solve_lambda(std::span<const TierProfile> tiers, const NetworkConfig &cfg,
                                const BoundConstants &consts, int local_epochs) {
  if (tiers.empty()) {
    throw std::invalid_argument("solve_lambda: no participating tier");
  }
  check_supported(cfg);

  std::vector<BandwidthBox> boxes;
  boxes.reserve(tiers.size());
  for (const auto &tier : tiers) {
    boxes.push_back(feasible_box(tier, cfg, local_epochs));
  }

  double lower_sum = 0.0;
  double upper_sum = 0.0;
  for (const auto &box : boxes) {
    lower_sum += box.lower;
    upper_sum += box.upper;
  }
  if (lower_sum > 1.0 + kBudgetTol) {
    const auto worst = std::max_element(boxes.begin(), boxes.end(), [](auto &x, auto &y) {
      return x.lower < y.lower;
    });
    const auto &tier = tiers[static_cast<std::size_t>(worst - boxes.begin())];
    throw InfeasibleError("bandwidth budget cannot cover every tier's deadline "
                          "(minimum demand " + std::to_string(lower_sum) + ")",
                          tier.tier_index, std::numeric_limits<double>::infinity());
  }

  std::vector<double> b(tiers.size());
  AllocationDecision decision;

  auto allocate = [&](double lambda) {
    double sum = 0.0;
    for (std::size_t i = 0; i < tiers.size(); ++i) {
      const double raw =
          bandwidth_closed_form_unclamped(tiers[i], cfg, consts, lambda, local_epochs);
      b[i] = std::clamp(raw, boxes[i].lower, boxes[i].upper);
      sum += b[i];
    }
    return sum;
  };

  if (upper_sum <= 1.0) {
    // Every tier reaches zero pruning inside the budget: the multiplier is 0
    // and any split above the saturation points is optimal.
    for (std::size_t i = 0; i < tiers.size(); ++i) {
      b[i] = boxes[i].upper / upper_sum;
    }
    decision.lambda_star = 0.0;
  } else {
    // sum_m b_m(lambda) is continuous and non-increasing; bracket then bisect
    // in log(lambda).
    double lo = 1e-12;
    double hi = 1.0;
    while (allocate(lo) <= 1.0 && lo > 1e-300) {
      lo *= 1e-3;
    }
    while (allocate(hi) > 1.0) {
      hi *= 2.0;
    }
    for (int it = 0; it < kMaxBisection; ++it) {
      const double mid = std::sqrt(lo * hi);
      if (mid <= lo || mid >= hi) {
        break;
      }
      if (allocate(mid) > 1.0) {
        lo = mid;
      } else {
        hi = mid;
      }
      if (1.0 - allocate(hi) <= kBudgetTol) {
        break;
      }
    }
    allocate(hi); // feasible side: sum <= 1
    decision.lambda_star = hi;
  }

  std::vector<double> ratios(tiers.size());
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    ratios[i] = b[i] > 0.0 ? final_pruning_ratio(tiers[i], cfg, b[i], local_epochs) : 1.0;
    decision.tiers.push_back({tiers[i].tier_index, b[i], ratios[i]});
  }
  decision.objective_value = objective(tiers, consts, ratios);
  return decision;
}

double final_pruning_ratio(const TierProfile &tier, const NetworkConfig &cfg, double b_star,
                           int local_epochs) {
  check_tier(tier);
  if (!(b_star > 0.0)) {
    throw std::invalid_argument("final_pruning_ratio: b* must be positive");
  }
  // Deadline equation multiplied through by R = b* B_eff log2(1 + p g / sigma^2).
  const double rate = tier_rate(tier, cfg, b_star);
  const double a = compute_per_weight(tier, local_epochs);
  const auto w_conv = static_cast<double>(tier.layout.conv_weight_count);
  const auto w_fc = static_cast<double>(tier.layout.fc_weight_count);
  const double q = cfg.quant_bits;
  const double numer = rate * (tier_deadline(tier, cfg) - w_conv * a) - q * w_conv;
  const double denom = rate * a * w_fc + q * w_fc;
  return std::clamp(1.0 - numer / denom, 0.0, 1.0);
}

ConvexityReport verify_convexity(std::span<const TierProfile> tiers, const NetworkConfig &cfg,
                                 const BoundConstants &consts, int local_epochs,
                                 std::size_t points) {
  ConvexityReport report;
  const double prefactor = consts.objective_prefactor();
  std::vector<double> f(points);
  for (const auto &tier : tiers) {
    const double scale = prefactor * tier_weight(tier);
    for (std::size_t i = 0; i < points; ++i) {
      const double b = static_cast<double>(i + 1) / static_cast<double>(points);
      f[i] = scale * pruning_ratio_unclamped(tier, cfg, b, local_epochs);
    }
    TierConvexity tc{tier.tier_index, std::numeric_limits<double>::infinity(),
                     -std::numeric_limits<double>::infinity()};
    for (std::size_t i = 1; i + 1 < points; ++i) {
      const double d2 = f[i - 1] - 2.0 * f[i] + f[i + 1];
      tc.min_second_difference = std::min(tc.min_second_difference, d2);
      tc.max_second_difference = std::max(tc.max_second_difference, d2);
    }
    if (tc.min_second_difference < -1e-9) {
      report.convex = false;
    }
    report.tiers.push_back(tc);
  }
  return report;
}

double canonical_term(double v1, double v2, double v3, double v4, double x) {
  return 1.0 - (v1 - v2 / x) / (v3 + v4 / x);
}

double canonical_second_derivative(double v1, double v2, double v3, double v4, double x) {
  const double t = v3 * x + v4;
  return 2.0 * v3 * (v1 * v4 + v2 * v3) / (t * t * t);
}

} // namespace ttprune::allocator
