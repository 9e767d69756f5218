// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "oracles/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double noise_watts(const NetworkConfig &cfg) {
  switch (cfg.noise_mode) {
  case ttprune::netmodel::NoiseMode::kAbsolute:
    return cfg.noise_power_w;
  case ttprune::netmodel::NoiseMode::kDensityFullBand:
    return cfg.noise_density_w_per_hz * cfg.bandwidth_total_hz;
  default:
    throw std::invalid_argument("oracle: unsupported noise mode");
  }
}

double per_weight_time(const TierProfile &t, const NetworkConfig &cfg, double b, int epochs) {
  const double sharers = static_cast<double>(std::max<std::size_t>(1, t.band_sharers));
  const double rate = b * cfg.bandwidth_total_hz / sharers *
                      std::log2(1.0 + cfg.tx_power_w * t.avg_gain / noise_watts(cfg));
  return epochs * t.avg_cycles_per_weight / t.avg_cpu_freq_hz + cfg.quant_bits / rate;
}

double eval(std::span<const TierProfile> tiers, const NetworkConfig &cfg, const BoundConstants &c,
            int epochs, std::span<const double> b) {
  std::vector<double> rho(tiers.size());
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    if (!(b[i] > 0.0)) {
      return kInf;
    }
    rho[i] = min_ratio_direct(tiers[i], cfg, b[i], epochs);
    if (!std::isfinite(rho[i])) {
      return kInf;
    }
  }
  return oracle::objective(tiers, c, rho);
}

/// Free coordinates b_1..b_{M-1}; the last tier takes what is left.
void scan(std::span<const TierProfile> tiers, const NetworkConfig &cfg, const BoundConstants &c,
          int epochs, std::vector<double> &cur, std::size_t dim, const std::vector<double> &lo,
          const std::vector<double> &hi, double step, GridResult &best) {
  const std::size_t m = tiers.size();
  if (dim + 1 == m) {
    double used = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      used += cur[i];
    }
    cur[m - 1] = 1.0 - used;
    if (cur[m - 1] < -1e-15) {
      return;
    }
    cur[m - 1] = std::max(0.0, cur[m - 1]);
    const double v = eval(tiers, cfg, c, epochs, cur);
    if (v < best.value) {
      best.value = v;
      best.b = cur;
    }
    return;
  }
  const auto n = static_cast<long>(std::floor((hi[dim] - lo[dim]) / step + 1e-9));
  for (long i = 0; i <= n; ++i) {
    cur[dim] = lo[dim] + static_cast<double>(i) * step;
    if (cur[dim] > 1.0 + 1e-15) {
      break;
    }
    scan(tiers, cfg, c, epochs, cur, dim + 1, lo, hi, step, best);
  }
}

} // namespace

double tier_latency(const TierProfile &tier, const NetworkConfig &cfg, double b, double kept_fc,
                    int epochs) {
  return (static_cast<double>(tier.layout.conv_weight_count) + kept_fc) *
         per_weight_time(tier, cfg, b, epochs);
}

double min_ratio_bisect(const TierProfile &tier, const NetworkConfig &cfg, double b, int epochs) {
  const double deadline = tier.tier_index * cfg.delta_t_s;
  const auto wf = static_cast<double>(tier.layout.fc_weight_count);
  auto latency = [&](double rho) { return tier_latency(tier, cfg, b, (1.0 - rho) * wf, epochs); };
  if (latency(0.0) <= deadline) {
    return 0.0;
  }
  if (latency(1.0) > deadline * (1.0 + 1e-9)) {
    return kInf;
  }
  double lo = 0.0;
  double hi = 1.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (latency(mid) > deadline ? lo : hi) = mid;
  }
  return hi;
}

double min_ratio_direct(const TierProfile &tier, const NetworkConfig &cfg, double b, int epochs) {
  const double x = per_weight_time(tier, cfg, b, epochs);
  const double deadline = tier.tier_index * cfg.delta_t_s;
  const auto wc = static_cast<double>(tier.layout.conv_weight_count);
  const auto wf = static_cast<double>(tier.layout.fc_weight_count);
  // Surviving FC weights that fit: deadline / x - W_conv.
  const double fit = deadline / x - wc;
  if (fit >= wf) {
    return 0.0;
  }
  if (fit < 0.0) {
    return wc * x <= deadline * (1.0 + 1e-9) ? 1.0 : kInf;
  }
  return 1.0 - fit / wf;
}

double ratio_unclamped(const TierProfile &tier, const NetworkConfig &cfg, double b, int epochs) {
  const double x = per_weight_time(tier, cfg, b, epochs);
  const double deadline = tier.tier_index * cfg.delta_t_s;
  return 1.0 - (deadline - static_cast<double>(tier.layout.conv_weight_count) * x) /
                   (x * static_cast<double>(tier.layout.fc_weight_count));
}

double objective(std::span<const TierProfile> tiers, const BoundConstants &c,
                 std::span<const double> rho) {
  const double pref = 3.0 * c.lipschitz * c.noise_scale * c.noise_scale /
                      ((1.0 - 4.0 * c.lipschitz * c.delta) * static_cast<double>(c.tier_count));
  double sum = 0.0;
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    const double s = static_cast<double>(tiers[i].user_count) / tiers[i].data_count;
    sum += s * s * rho[i];
  }
  return pref * sum;
}

GridResult grid_search(std::span<const TierProfile> tiers, const NetworkConfig &cfg,
                       const BoundConstants &c, int epochs, double step, double final_step) {
  const std::size_t m = tiers.size();
  GridResult best;
  best.value = kInf;
  std::vector<double> cur(m, 0.0);
  std::vector<double> lo(m, 0.0);
  std::vector<double> hi(m, 1.0);
  scan(tiers, cfg, c, epochs, cur, 0, lo, hi, step, best);
  if (!std::isfinite(best.value) || m == 1) {
    return best;
  }
  for (double h = step / 10.0; h >= final_step * 0.999; h /= 10.0) {
    // Re-centre at this resolution until the incumbent stops improving.
    for (int pass = 0; pass < 100; ++pass) {
      const auto centre = best.b;
      const double before = best.value;
      for (std::size_t i = 0; i + 1 < m; ++i) {
        lo[i] = std::max(0.0, centre[i] - 10.0 * h);
        hi[i] = std::min(1.0, centre[i] + 10.0 * h);
      }
      scan(tiers, cfg, c, epochs, cur, 0, lo, hi, h, best);
      if (!(best.value < before)) {
        break;
      }
    }
  }
  return best;
}

std::vector<double> finite_difference(const std::function<double(std::span<const double>)> &f,
                                      std::span<const double> x, double h) {
  std::vector<double> xp(x.begin(), x.end());
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = xp[i];
    xp[i] = orig + h;
    const double fp = f(xp);
    xp[i] = orig - h;
    const double fm = f(xp);
    xp[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

double bisect_decreasing(const std::function<double(double)> &g, double lo, double hi,
                         int iterations) {
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

TierProfile random_tier(ttprune::Rng &rng, int tier_index,
                        const ttprune::pruning::LayerLayout &layout) {
  TierProfile t;
  t.tier_index = tier_index;
  t.user_count = 1 + rng.index(10);
  t.band_sharers = t.user_count;
  t.data_count = static_cast<double>(t.user_count) * rng.uniform(50.0, 150.0);
  t.avg_cycles_per_weight = rng.uniform(5e3, 1.5e4);
  t.avg_cpu_freq_hz = 5e9;
  NetworkConfig ref;
  t.avg_gain = ttprune::netmodel::path_gain(ref, rng.uniform(50.0, 500.0));
  t.layout = layout;
  return t;
}

Instance random_instance(ttprune::Rng &rng, int tier_count) {
  Instance inst;
  ttprune::pruning::LayerLayout layout;
  layout.conv_weight_count = 100 + rng.index(1000);
  layout.fc_weight_count = 1000 + rng.index(20000);
  for (int m = 1; m <= tier_count; ++m) {
    inst.tiers.push_back(random_tier(rng, m, layout));
  }
  inst.consts.tier_count = tier_count;
  // Deadline relative to the slowest tier's unpruned time at an equal split.
  double worst = 0.0;
  for (const auto &t : inst.tiers) {
    inst.cfg.delta_t_s = 1.0;
    const double lat = tier_latency(t, inst.cfg, 1.0 / tier_count,
                                    static_cast<double>(layout.fc_weight_count), inst.epochs);
    worst = std::max(worst, lat / t.tier_index);
  }
  inst.cfg.delta_t_s = worst * rng.uniform(0.3, 1.2);
  return inst;
}

bool feasible(const Instance &inst) {
  // Minimum fraction per tier at rho = 1, summed.
  double need = 0.0;
  for (const auto &t : inst.tiers) {
    double lo = 0.0;
    double hi = 1.0;
    if (!std::isfinite(min_ratio_direct(t, inst.cfg, 1.0, inst.epochs))) {
      return false;
    }
    for (int i = 0; i < 100; ++i) {
      const double mid = 0.5 * (lo + hi);
      (std::isfinite(min_ratio_direct(t, inst.cfg, mid, inst.epochs)) ? hi : lo) = mid;
    }
    need += hi;
  }
  return need <= 1.0;
}

} // namespace oracle
