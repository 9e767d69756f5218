// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_CONFIG_HPP
#define TTPRUNE_CONFIG_HPP

#include "ttprune/allocator.hpp"
#include "ttprune/bound.hpp"
#include "ttprune/data.hpp"
#include "ttprune/fedsim.hpp"
#include "ttprune/netmodel.hpp"
#include "ttprune/tinynn.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

/// Run configuration: a JSON document with nested sections. Every field has
/// a default, so `{}` is a complete config; unknown keys are rejected.
namespace ttprune::config {

/// Round period, absolute seconds or a multiple of the profiled slowest time T.
struct DeltaT {
  bool relative = true;
  double value = 0.7;
};

struct DeviceRoster {
  std::size_t count = 20;
  double min_distance_m = 10.0;
  double cycles_per_weight = 1e4;
  double cycles_spread = 0.5; // uniform in c (1 +- spread)
  double cpu_freq_hz = 5e9;
  double freq_spread = 0.0;
  std::vector<netmodel::Device> explicit_devices; // overrides generation when non-empty
};

enum class DataSource { kSynthetic, kIdx };

struct DatasetConfig {
  DataSource source = DataSource::kSynthetic;
  data::SyntheticSpec synthetic;
  std::size_t test_per_class = 50;
  std::filesystem::path train_images;
  std::filesystem::path train_labels;
  std::filesystem::path test_images;
  std::filesystem::path test_labels;
  std::size_t train_limit = 0; // 0: all rows
  std::size_t test_limit = 0;
  data::PartitionSpec partition;
};

struct ModelConfig {
  std::vector<std::size_t> hidden_dims{64};
  std::size_t conv_width = 0;
};

struct RunConfig {
  netmodel::NetworkConfig network;
  DeltaT delta_t;
  DeviceRoster devices;
  ModelConfig model;
  DatasetConfig dataset;
  std::vector<fedsim::Scheme> schemes{fedsim::Scheme::kTTPrune, fedsim::Scheme::kNoPruning};
  int rounds = 10;
  int local_epochs = 5;
  double learning_rate = 0.0015;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
  allocator::BoundConstants bound;
  bool xi_given = false; // otherwise xi = M / 2
  double target_accuracy = 0.8;
  std::size_t parallel = 1;
  /// Explicit tier profiles for the solve subcommand.
  std::vector<allocator::TierProfile> solve_tiers;
};

/// Parses and validates. Relative IDX paths resolve against `base_dir`.
/// Throws ConfigError on malformed JSON, wrong types, unknown keys or
/// out-of-range values.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path &base_dir = {});

/// Reads the file (IoError) then parse_config.
RunConfig load_config(const std::filesystem::path &path);

/// Explicit roster, or `count` devices uniform over the cell disk (at least
/// min_distance_m from the server) with seeded c/f heterogeneity. Gains are
/// the nominal path gains.
std::vector<netmodel::Device> make_devices(const RunConfig &cfg);

struct Datasets {
  data::LabeledDataset train;
  data::LabeledDataset test;
};

Datasets load_datasets(const RunConfig &cfg);

/// Devices, shards, model and resolved dT, ready for run_experiment.
fedsim::ExperimentSetup prepare_experiment(const RunConfig &cfg);

/// Tier profiles the solve subcommand uses: the explicit list when given,
/// otherwise every tier of the profiled plan at nominal gains.
std::vector<allocator::TierProfile> solve_profiles(const RunConfig &cfg,
                                                   netmodel::NetworkConfig &resolved_network);

/// Per-tier rho history (K x M) recovered from a run.
std::vector<std::vector<double>> rho_history(const fedsim::ExperimentResult &result);

/// Bound report of a finished run: tier sizes from its plan, rho history
/// from its rounds, f_init_gap approximated by initial minus best loss.
bound::BoundReport run_bound_report(const fedsim::ExperimentResult &result,
                                    const allocator::BoundConstants &consts);

/// Run summary as a JSON document: final accuracy, time and bits to the
/// target accuracy, totals and the bound report.
std::string summary_json(const fedsim::ExperimentResult &result, const RunConfig &cfg,
                         const bound::BoundReport &report);

} // namespace ttprune::config

#endif // TTPRUNE_CONFIG_HPP
