// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_NETMODEL_HPP
#define TTPRUNE_NETMODEL_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>

namespace ttprune::netmodel {

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// How the noise power inside the SNR is formed.
enum class NoiseMode {
  /// sigma^2 = density * B, fixed over the whole band. Default; keeps the
  /// allocated fraction b outside the logarithm.
  kDensityFullBand,
  /// sigma^2 given directly in watts.
  kAbsolute,
  /// sigma^2 = density * b * B. Sensitivity studies only; the allocator's
  /// closed forms do not hold in this mode and it refuses to run.
  kDensityAllocated,
};

/// Physical-layer and system constants. Powers are stored linearly;
/// conversion from dBm happens once, when the config is loaded.
struct NetworkConfig {
  double bandwidth_total_hz = 20e6;
  double tx_power_w = dbm_to_watts(28.0);
  NoiseMode noise_mode = NoiseMode::kDensityFullBand;
  double noise_density_w_per_hz = dbm_to_watts(-174.0);
  double noise_power_w = 0.0; // kAbsolute only
  int quant_bits = 64;
  double cell_radius_m = 500.0;
  double delta_t_s = 1.0;
  double pathloss_exponent = 3.76;
  /// Loss at 1 m. 15.3 dB reproduces the 128.1 + 37.6 log10(d[km]) macro-cell
  /// model at the default exponent.
  double reference_loss_db = 15.3;
  /// Rayleigh block fading, resampled once per global round.
  bool fading = false;
};

/// Throws ConfigError on a violated invariant.
void validate(const NetworkConfig &cfg);

/// Per-device compute profile and channel state.
///
/// cycles_per_weight is read as "CPU cycles per model weight per local epoch
/// over the device's whole shard", which makes zeta * W * c / f a time.
struct Device {
  int id = 0;
  double cycles_per_weight = 1e4;
  double cpu_freq_hz = 5e9;
  double distance_m = 100.0;
  double channel_gain = 1.0; // linear; the current round's value
  std::size_t data_count = 1;
};

/// Throws ConfigError on a violated invariant.
void validate(const Device &device, const NetworkConfig &cfg);

struct LatencyBreakdown {
  double compute_s = 0.0;
  double uplink_s = 0.0;
  double total_s = 0.0;
};

/// Relative slack accepted by meets_deadline.
inline constexpr double kDeadlineRelTol = 1e-9;

/// Large-scale gain 10^(-L0/10) * d^(-n).
double path_gain(const NetworkConfig &cfg, double distance_m);

/// Path gain times a unit-mean exponential fading draw (1 when fading is off).
/// Deterministic for a fixed seed.
double channel_gain(const Device &device, const NetworkConfig &cfg, std::uint64_t seed);

/// Noise power in watts for the given allocated fraction.
double noise_power(const NetworkConfig &cfg, double bandwidth_fraction);

/// log2(1 + p g / sigma^2) at the given fraction.
double spectral_efficiency(const NetworkConfig &cfg, double gain, double bandwidth_fraction);

/// b * B * log2(1 + p g / sigma^2) in bit/s. Throws std::invalid_argument for
/// b outside [0, 1].
double uplink_rate(const NetworkConfig &cfg, double gain, double bandwidth_fraction);

/// Compute time zeta * W * c / f plus uplink time q * W / R for one device.
/// Throws InfeasibleError when bandwidth_fraction is 0 (rate would be 0).
LatencyBreakdown round_latency(const NetworkConfig &cfg, const Device &device,
                               std::size_t weight_count, int local_epochs,
                               double bandwidth_fraction);

/// total_s <= m * delta_t, within kDeadlineRelTol.
bool meets_deadline(const LatencyBreakdown &lat, int tier_index, double delta_t_s);

} // namespace ttprune::netmodel

#endif // TTPRUNE_NETMODEL_HPP
