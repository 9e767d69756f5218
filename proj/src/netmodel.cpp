// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "ttprune/netmodel.hpp"

#include "ttprune/errors.hpp"
#include "ttprune/random.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace ttprune::netmodel {

void validate(const NetworkConfig &cfg) {
  if (!(cfg.bandwidth_total_hz > 0.0)) {
    throw ConfigError("network: bandwidth must be positive");
  }
  if (!(cfg.tx_power_w > 0.0)) {
    throw ConfigError("network: transmit power must be positive");
  }
  if (cfg.quant_bits < 1) {
    throw ConfigError("network: quantization bits must be >= 1");
  }
  if (!(cfg.cell_radius_m > 0.0)) {
    throw ConfigError("network: cell radius must be positive");
  }
  if (!(cfg.delta_t_s > 0.0)) {
    throw ConfigError("network: delta_t must be positive");
  }
  if (!(cfg.pathloss_exponent > 0.0)) {
    throw ConfigError("network: path-loss exponent must be positive");
  }
  switch (cfg.noise_mode) {
  case NoiseMode::kDensityFullBand:
  case NoiseMode::kDensityAllocated:
    if (!(cfg.noise_density_w_per_hz > 0.0)) {
      throw ConfigError("network: noise density must be positive");
    }
    break;
  case NoiseMode::kAbsolute:
    if (!(cfg.noise_power_w > 0.0)) {
      throw ConfigError("network: absolute noise power must be positive");
    }
    break;
  }
}

void validate(const Device &device, const NetworkConfig &cfg) {
  const std::string who = "device " + std::to_string(device.id) + ": ";
  if (!(device.cpu_freq_hz > 0.0)) {
    throw ConfigError(who + "cpu frequency must be positive");
  }
  if (!(device.cycles_per_weight > 0.0)) {
    throw ConfigError(who + "cycles per weight must be positive");
  }
  if (!(device.distance_m > 0.0) || device.distance_m > cfg.cell_radius_m) {
    throw ConfigError(who + "distance must lie in (0, cell radius]");
  }
  if (!(device.channel_gain > 0.0)) {
    throw ConfigError(who + "channel gain must be positive");
  }
  if (device.data_count < 1) {
    throw ConfigError(who + "needs at least one sample");
  }
}

double path_gain(const NetworkConfig &cfg, double distance_m) {
  return std::pow(10.0, -cfg.reference_loss_db / 10.0) *
         std::pow(distance_m, -cfg.pathloss_exponent);
}

double channel_gain(const Device &device, const NetworkConfig &cfg, std::uint64_t seed) {
  if (!(device.distance_m > 0.0)) {
    throw std::invalid_argument("channel_gain: distance must be positive");
  }
  double gain = path_gain(cfg, device.distance_m);
  if (cfg.fading) {
    Rng rng(seed);
    gain *= rng.exponential();
  }
  return gain;
}

double noise_power(const NetworkConfig &cfg, double bandwidth_fraction) {
  switch (cfg.noise_mode) {
  case NoiseMode::kDensityFullBand:
    return cfg.noise_density_w_per_hz * cfg.bandwidth_total_hz;
  case NoiseMode::kAbsolute:
    return cfg.noise_power_w;
  case NoiseMode::kDensityAllocated:
    return cfg.noise_density_w_per_hz * bandwidth_fraction * cfg.bandwidth_total_hz;
  }
  return cfg.noise_power_w;
}

double spectral_efficiency(const NetworkConfig &cfg, double gain, double bandwidth_fraction) {
  return std::log2(1.0 + cfg.tx_power_w * gain / noise_power(cfg, bandwidth_fraction));
}

double uplink_rate(const NetworkConfig &cfg, double gain, double bandwidth_fraction) {
  if (!(bandwidth_fraction >= 0.0 && bandwidth_fraction <= 1.0)) {
    throw std::invalid_argument("uplink_rate: bandwidth fraction must lie in [0, 1]");
  }
  if (bandwidth_fraction == 0.0) {
    return 0.0;
  }
  return bandwidth_fraction * cfg.bandwidth_total_hz *
         spectral_efficiency(cfg, gain, bandwidth_fraction);
}

LatencyBreakdown round_latency(const NetworkConfig &cfg, const Device &device,
                               std::size_t weight_count, int local_epochs,
                               double bandwidth_fraction) {
  if (weight_count < 1) {
    throw std::invalid_argument("round_latency: weight count must be >= 1");
  }
  const double rate = uplink_rate(cfg, device.channel_gain, bandwidth_fraction);
  if (rate <= 0.0) {
    throw InfeasibleError("round_latency: zero bandwidth, upload can never finish", 0,
                          std::numeric_limits<double>::infinity());
  }
  const auto w = static_cast<double>(weight_count);
  LatencyBreakdown lat;
  lat.compute_s = local_epochs * w * device.cycles_per_weight / device.cpu_freq_hz;
  lat.uplink_s = cfg.quant_bits * w / rate;
  lat.total_s = lat.compute_s + lat.uplink_s;
  return lat;
}

bool meets_deadline(const LatencyBreakdown &lat, int tier_index, double delta_t_s) {
  if (tier_index < 1) {
    throw std::invalid_argument("meets_deadline: tier index must be >= 1");
  }
  const double deadline = tier_index * delta_t_s;
  return lat.total_s <= deadline * (1.0 + kDeadlineRelTol);
}

} // namespace ttprune::netmodel
