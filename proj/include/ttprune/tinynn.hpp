// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_TINYNN_HPP
#define TTPRUNE_TINYNN_HPP

#include "ttprune/data.hpp"
#include "ttprune/pruning.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

/// Flat-weight multilayer perceptron used as the desk-scale learner.
///
/// Parameter order in the flat vector is layer by layer, each layer storing
/// its (out x in) row-major weight matrix followed by its bias. The optional
/// front layer is a fixed random projection: it forms the conv segment of the
/// layout, is never pruned and never trained.
namespace ttprune::tinynn {

struct ModelSpec {
  std::size_t input_dim = 16;
  std::vector<std::size_t> hidden_dims{64};
  std::size_t output_dim = 10;
  std::size_t conv_width = 0; // 0 disables the frozen front segment
  std::uint64_t seed = 1;
};

/// Throws ConfigError on zero-sized dimensions.
void validate(const ModelSpec &spec);

pruning::LayerLayout layout_of(const ModelSpec &spec);

struct WeightVector {
  std::vector<double> values;
  pruning::LayerLayout layout;
};

/// N(0, 1/fan_in) weights and zero biases, seeded.
WeightVector init_model(const ModelSpec &spec);

/// Mean cross-entropy over `rows` and its gradient w.r.t. every parameter
/// (frozen ones included). `grad` is overwritten.
double loss_and_gradient(const ModelSpec &spec, std::span<const double> weights,
                         const data::LabeledDataset &data, std::span<const std::size_t> rows,
                         std::span<double> grad);

/// Same over the whole dataset.
double loss_and_gradient(const ModelSpec &spec, std::span<const double> weights,
                         const data::LabeledDataset &data, std::span<double> grad);

struct Evaluation {
  double loss = 0.0;
  double accuracy = 0.0;
};

/// Mean cross-entropy and top-1 accuracy (ties resolve to the lowest class).
Evaluation loss_and_accuracy(const ModelSpec &spec, std::span<const double> weights,
                             const data::LabeledDataset &data);

struct LocalTrainParams {
  int epochs = 5;
  double learning_rate = 0.0015;
  std::size_t batch_size = 64;
  std::uint64_t seed = 1;
};

/// Row order of one epoch: a seeded shuffle, seed derived from (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t rows, std::uint64_t seed, int epoch);

/// Mini-batch SGD on the masked model. Gradients are zeroed on masked slots
/// and on the frozen segment at every step, so pruned weights stay exactly 0.
/// Throws std::invalid_argument for an empty shard.
WeightVector local_update(const ModelSpec &spec, const WeightVector &w, const pruning::PruningMask &mask,
                          const data::LabeledDataset &shard, const LocalTrainParams &params);

/// Checkpoint: "TTPW", u32 version, u64 length, u64 conv count, then the
/// values as little-endian float64.
std::vector<std::uint8_t> serialize_weights(const WeightVector &w);
WeightVector deserialize_weights(std::span<const std::uint8_t> bytes);

inline constexpr std::uint32_t kWeightsFormatVersion = 1;

} // namespace ttprune::tinynn

#endif // TTPRUNE_TINYNN_HPP
