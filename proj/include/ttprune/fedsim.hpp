// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_FEDSIM_HPP
#define TTPRUNE_FEDSIM_HPP

#include "ttprune/allocator.hpp"
#include "ttprune/data.hpp"
#include "ttprune/netmodel.hpp"
#include "ttprune/pruning.hpp"
#include "ttprune/tinynn.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

/// Time-triggered federated learning engine.
///
/// The server closes a global round every dT seconds. Devices are grouped
/// into tiers by how long one unpruned local round takes them; tier m uploads
/// in every round k with k mod m == 0, training on the global model it
/// received m rounds earlier. Uploaded models are averaged inside each tier,
/// then mixed with the previous global model using floor-ratio weights.
namespace ttprune::fedsim {

using netmodel::Device;
using netmodel::NetworkConfig;

struct TierPlan {
  int tier_count = 1;                           // M
  std::vector<int> assignment;                  // device index -> tier in [1, M]
  std::vector<std::vector<std::size_t>> members; // tier m-1 -> device indices, ascending
  std::vector<double> tier_data;                // D_m
  std::vector<double> profiled_times;           // t_d per device
  double slowest_round_time = 0.0;              // T
};

/// Unpruned round time of every device at equal bandwidth 1/U and its
/// nominal channel gain.
std::vector<double> profile_round_times(std::span<const Device> devices, const NetworkConfig &cfg,
                                        const pruning::LayerLayout &layout, int local_epochs);

/// Tier ceil(t_d / dT), boundaries inclusive to 1e-9 relative; M is the
/// largest tier. Throws std::invalid_argument for empty input or dT <= 0.
TierPlan assign_tiers(std::span<const double> round_times, std::span<const Device> devices,
                      double delta_t_s);

/// profile_round_times followed by assign_tiers with cfg.delta_t_s.
TierPlan profile_and_assign(std::span<const Device> devices, const NetworkConfig &cfg,
                            const pruning::LayerLayout &layout, int local_epochs);

/// Copy of `plan` with one device moved to `new_tier` (1 <= new_tier <= M + 1).
TierPlan reassign_device(const TierPlan &plan, std::span<const Device> devices,
                         std::size_t device_index, int new_tier);

/// k mod m == 0. Throws std::invalid_argument for m < 1 or k < 1.
bool participates(int tier, int round);

/// Staleness weights as exact integers: alpha_m = numerators[m-1] / denominator.
struct AggregationWeights {
  std::vector<std::int64_t> numerators;
  std::int64_t denominator = 1;

  [[nodiscard]] std::vector<double> values() const;
};

/// floor(k / (M + 1 - m)) over sum_j floor(k / j). Throws
/// std::invalid_argument for k < 1 or M < 1.
AggregationWeights aggregation_weights(int round, int tier_count);

/// sum_u (D_u / sum D) w_u, elementwise. Throws std::invalid_argument on an
/// empty set or mismatched lengths.
std::vector<double> intra_tier_aggregate(std::span<const std::vector<double>> models,
                                         std::span<const double> data_counts);

/// Per-coordinate variant for pruned uploads: coordinate j averages only the
/// users whose mask kept j (weights D_u renormalized over them) and falls back
/// to `base[j]` when no user kept it. Identical to intra_tier_aggregate when
/// every mask is all ones.
std::vector<double> masked_intra_tier_aggregate(std::span<const std::vector<double>> models,
                                                std::span<const pruning::PruningMask> masks,
                                                std::span<const double> data_counts,
                                                std::span<const double> base);

/// Global model: participating tiers contribute alpha_m w_{I,m}, the rest
/// alpha_m w_G^{k-1}. tier_models[m-1] must hold a model exactly when tier m
/// participates in round k; std::invalid_argument otherwise.
std::vector<double> global_aggregate(int round,
                                     std::span<const std::optional<std::vector<double>>> tier_models,
                                     std::span<const double> previous_global,
                                     std::span<const double> alpha);

enum class Scheme { kTTPrune, kEqualResource, kFedAvg, kNoPruning };

std::string_view scheme_name(Scheme scheme);
/// Accepts the names produced by scheme_name. Throws ConfigError otherwise.
Scheme parse_scheme(std::string_view name);

struct DeviceRound {
  int device_id = 0;
  int tier = 1;
  double bandwidth_fraction = 0.0;
  double pruning_ratio = 0.0;
  double channel_gain = 0.0;
  double latency_s = 0.0;
  std::size_t weights_sent = 0;
  bool uploaded = false; // false: could not meet its deadline and was dropped
};

struct TierRound {
  int tier = 1;
  double b_star = 0.0;
  double rho_star = 0.0;
  double lambda_star = 0.0;
  double latency_s = 0.0; // slowest uploading device
  std::size_t uploads = 0;
  std::size_t dropped = 0;
  allocator::TierProfile profile; // the representative the decision used
};

struct RoundMetrics {
  int round = 0;
  std::vector<TierRound> tiers; // participating tiers, ascending
  std::vector<DeviceRound> devices;
  double loss = 0.0;
  double accuracy = 0.0;
  double cum_time_s = 0.0;
  std::uint64_t cum_uplink_bits = 0;
  double broadcast_time_s = 0.0; // downlink is not modeled
};

struct ExperimentSetup {
  NetworkConfig net; // delta_t_s already resolved
  std::vector<Device> devices;
  std::vector<data::LabeledDataset> shards; // one per device
  data::LabeledDataset eval_set;
  tinynn::ModelSpec model;
  int local_epochs = 5;
  double learning_rate = 0.0015;
  std::size_t batch_size = 64;
  allocator::BoundConstants consts;
  int rounds = 10;
  std::uint64_t seed = 1;
  std::size_t parallel = 1;
  std::optional<TierPlan> plan; // overrides profiling (TT schemes only)
  std::filesystem::path checkpoint_dir; // empty: no checkpoints
};

struct ExperimentResult {
  Scheme scheme = Scheme::kTTPrune;
  TierPlan plan;
  std::vector<RoundMetrics> rounds;
  tinynn::WeightVector final_model;
  tinynn::Evaluation initial;
};

/// Runs K global rounds of the given scheme. InfeasibleError from the
/// allocator propagates for TT-Prune and EqualResource.
ExperimentResult run_experiment(Scheme scheme, const ExperimentSetup &setup);

/// Fixed header of the metrics CSV.
inline constexpr std::string_view kMetricsHeader =
    "round,tier,scheme,b_star,rho_star,lambda_star,latency_s,loss,accuracy,cum_time_s,"
    "cum_uplink_bits";

/// One row per participating populated tier per round (a round in which no
/// populated tier is due has no row), reals printed with 17
/// significant digits so the file parses back exactly.
std::string format_metrics_csv(Scheme scheme, std::span<const RoundMetrics> rounds);

struct MetricsRow {
  int round = 0;
  int tier = 0;
  std::string scheme;
  double b_star = 0.0;
  double rho_star = 0.0;
  double lambda_star = 0.0;
  double latency_s = 0.0;
  double loss = 0.0;
  double accuracy = 0.0;
  double cum_time_s = 0.0;
  std::uint64_t cum_uplink_bits = 0;

  friend bool operator==(const MetricsRow &, const MetricsRow &) = default;
};

/// Throws FormatError on a wrong header or malformed row.
std::vector<MetricsRow> parse_metrics_csv(std::string_view text);

/// Index of the first round whose accuracy reaches `target`, if any.
std::optional<std::size_t> first_round_reaching(std::span<const RoundMetrics> rounds,
                                                double target);

} // namespace ttprune::fedsim

#endif // TTPRUNE_FEDSIM_HPP
