// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_DATA_HPP
#define TTPRUNE_DATA_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ttprune::data {

/// Row-major N x input_dim features with integer class labels.
struct LabeledDataset {
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;
  std::vector<int> labels;

  [[nodiscard]] std::size_t size() const { return labels.size(); }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {features.data() + i * input_dim, input_dim};
  }
};

/// Throws ConfigError on mismatched row counts or out-of-range labels.
void validate(const LabeledDataset &data);

/// Rows selected by index, in the given order.
LabeledDataset subset(const LabeledDataset &data, std::span<const std::size_t> indices);

struct SyntheticSpec {
  std::size_t classes = 10;
  std::size_t per_class = 100;
  std::size_t input_dim = 16;
  double separation = 0.5; // minimum pairwise distance of class means
  double noise_std = 0.1;
  std::uint64_t seed = 1;
};

struct SyntheticDataset {
  LabeledDataset data;
  std::vector<std::vector<double>> class_means;
};

/// Gaussian blobs around means drawn in [0.2, 0.8]^d, pairwise at least
/// `separation` apart; features clipped to [0, 1]. Rows are interleaved by
/// class (0, 1, ..., C-1, 0, 1, ...).
SyntheticDataset generate_synthetic(const SyntheticSpec &spec);

/// Parses an IDX pair (images magic 0x00000803, labels 0x00000801, big
/// endian). Pixels are scaled by 1/255. Throws FormatError on a bad magic,
/// truncated payload or image/label count mismatch.
LabeledDataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);

/// Reads both files then parse_idx. Throws IoError if a file cannot be read.
LabeledDataset load_idx(const std::filesystem::path &images_path,
                        const std::filesystem::path &labels_path);

/// IDX encoding of a dataset as N x 1 x input_dim images; features are
/// quantized to round(255 x).
std::vector<std::uint8_t> encode_idx_images(const LabeledDataset &data);
std::vector<std::uint8_t> encode_idx_labels(const LabeledDataset &data);

void write_idx(const LabeledDataset &data, const std::filesystem::path &images_path,
               const std::filesystem::path &labels_path);

enum class PartitionMode { kIid, kLabelSkew };

struct PartitionSpec {
  PartitionMode mode = PartitionMode::kIid;
  std::size_t shards_per_device = 2;
  std::uint64_t seed = 1;
};

/// Per-device row indices. iid: seeded shuffle then contiguous equal splits.
/// label_skew: rows sorted by label, cut into devices * shards_per_device
/// shards, shards dealt at random. Both modes give every device N/U rows +-1.
/// Throws ConfigError when N < devices.
std::vector<std::vector<std::size_t>> partition_indices(const LabeledDataset &data,
                                                        std::size_t devices,
                                                        const PartitionSpec &spec);

std::vector<LabeledDataset> partition(const LabeledDataset &data, std::size_t devices,
                                      const PartitionSpec &spec);

} // namespace ttprune::data

#endif // TTPRUNE_DATA_HPP
