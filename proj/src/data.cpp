// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "ttprune/data.hpp"

#include "ttprune/detail/bytes.hpp"
#include "ttprune/detail/file_io.hpp"
#include "ttprune/errors.hpp"
#include "ttprune/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ttprune::data {

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

void put_u32_be(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

double distance(const std::vector<double> &a, const std::vector<double> &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += (a[i] - b[i]) * (a[i] - b[i]);
  }
  return std::sqrt(s);
}

} // namespace

void validate(const LabeledDataset &data) {
  if (data.features.size() != data.labels.size() * data.input_dim) {
    throw ConfigError("dataset: feature rows do not match label count");
  }
  for (int y : data.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= data.num_classes) {
      throw ConfigError("dataset: label outside [0, classes)");
    }
  }
}

LabeledDataset subset(const LabeledDataset &data, std::span<const std::size_t> indices) {
  LabeledDataset out;
  out.input_dim = data.input_dim;
  out.num_classes = data.num_classes;
  out.features.reserve(indices.size() * data.input_dim);
  out.labels.reserve(indices.size());
  for (auto i : indices) {
    auto r = data.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    out.labels.push_back(data.labels[i]);
  }
  return out;
}

SyntheticDataset generate_synthetic(const SyntheticSpec &spec) {
  if (spec.classes < 2 || spec.per_class < 1 || spec.input_dim < 1) {
    throw ConfigError("synthetic data: need >= 2 classes, >= 1 sample per class, dim >= 1");
  }
  Rng rng(derive_seed({spec.seed, 0x5eedda7aULL}));
  SyntheticDataset out;

  constexpr int kMaxTries = 100000;
  int tries = 0;
  while (out.class_means.size() < spec.classes) {
    if (++tries > kMaxTries) {
      throw ConfigError("synthetic data: cannot place class means at the requested separation");
    }
    std::vector<double> mean(spec.input_dim);
    for (auto &v : mean) {
      v = rng.uniform(0.2, 0.8);
    }
    const bool far_enough = std::all_of(out.class_means.begin(), out.class_means.end(),
                                        [&](const auto &m) { return distance(m, mean) >= spec.separation; });
    if (far_enough) {
      out.class_means.push_back(std::move(mean));
    }
  }

  auto &d = out.data;
  d.input_dim = spec.input_dim;
  d.num_classes = spec.classes;
  d.features.reserve(spec.classes * spec.per_class * spec.input_dim);
  for (std::size_t i = 0; i < spec.per_class; ++i) {
    for (std::size_t c = 0; c < spec.classes; ++c) {
      for (std::size_t j = 0; j < spec.input_dim; ++j) {
        const double v = rng.normal(out.class_means[c][j], spec.noise_std);
        d.features.push_back(std::clamp(v, 0.0, 1.0));
      }
      d.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

LabeledDataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
  detail::ByteReader img(images);
  detail::ByteReader lab(labels);
  if (img.u32_be() != kIdxImagesMagic) {
    throw FormatError("idx images: bad magic");
  }
  if (lab.u32_be() != kIdxLabelsMagic) {
    throw FormatError("idx labels: bad magic");
  }
  const std::size_t n = img.u32_be();
  const std::size_t rows = img.u32_be();
  const std::size_t cols = img.u32_be();
  const std::size_t n_labels = lab.u32_be();
  if (n != n_labels) {
    throw FormatError("idx: image count " + std::to_string(n) + " != label count " +
                      std::to_string(n_labels));
  }
  const auto pixels = img.take(n * rows * cols);
  const auto raw_labels = lab.take(n);

  LabeledDataset out;
  out.input_dim = rows * cols;
  out.features.resize(pixels.size());
  std::transform(pixels.begin(), pixels.end(), out.features.begin(),
                 [](std::uint8_t p) { return static_cast<double>(p) / 255.0; });
  out.labels.assign(raw_labels.begin(), raw_labels.end());
  int max_label = 0;
  for (int y : out.labels) {
    max_label = std::max(max_label, y);
  }
  out.num_classes = out.labels.empty() ? 0 : static_cast<std::size_t>(max_label) + 1;
  return out;
}

LabeledDataset load_idx(const std::filesystem::path &images_path,
                        const std::filesystem::path &labels_path) {
  const auto images = detail::read_file(images_path);
  const auto labels = detail::read_file(labels_path);
  return parse_idx(images, labels);
}

std::vector<std::uint8_t> encode_idx_images(const LabeledDataset &data) {
  std::vector<std::uint8_t> out;
  out.reserve(16 + data.features.size());
  put_u32_be(out, kIdxImagesMagic);
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  put_u32_be(out, 1);
  put_u32_be(out, static_cast<std::uint32_t>(data.input_dim));
  for (double v : data.features) {
    out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const LabeledDataset &data) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + data.size());
  put_u32_be(out, kIdxLabelsMagic);
  put_u32_be(out, static_cast<std::uint32_t>(data.size()));
  for (int y : data.labels) {
    out.push_back(static_cast<std::uint8_t>(y));
  }
  return out;
}

void write_idx(const LabeledDataset &data, const std::filesystem::path &images_path,
               const std::filesystem::path &labels_path) {
  detail::write_file(images_path, encode_idx_images(data));
  detail::write_file(labels_path, encode_idx_labels(data));
}

std::vector<std::vector<std::size_t>> partition_indices(const LabeledDataset &data,
                                                        std::size_t devices,
                                                        const PartitionSpec &spec) {
  const std::size_t n = data.size();
  if (devices < 1) {
    throw ConfigError("partition: need at least one device");
  }
  if (n < devices) {
    throw ConfigError("partition: " + std::to_string(n) + " samples cannot cover " +
                      std::to_string(devices) + " devices");
  }
  if (spec.shards_per_device < 1) {
    throw ConfigError("partition: shards_per_device must be >= 1");
  }
  Rng rng(derive_seed({spec.seed, 0x9a27ULL}));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<std::size_t>> parts(devices);

  if (spec.mode == PartitionMode::kIid) {
    rng.shuffle(std::span(order));
    const std::size_t base = n / devices;
    const std::size_t extra = n % devices;
    std::size_t pos = 0;
    for (std::size_t d = 0; d < devices; ++d) {
      const std::size_t len = base + (d < extra ? 1 : 0);
      parts[d].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                      order.begin() + static_cast<std::ptrdiff_t>(pos + len));
      pos += len;
    }
    return parts;
  }

  // Label skew: sorted rows are cut into shard slots; slot -> device mapping is
  // a seeded permutation. The +1 remainder goes to dealt positions in
  // shard-major order so device totals stay within one sample of each other.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data.labels[a] < data.labels[b]; });
  const std::size_t per = spec.shards_per_device;
  const std::size_t slots = devices * per;
  if (n < slots) {
    throw ConfigError("partition: fewer samples than shards");
  }
  std::vector<std::size_t> dealt(slots); // dealt position -> slot
  std::iota(dealt.begin(), dealt.end(), 0);
  rng.shuffle(std::span(dealt));

  const std::size_t base = n / slots;
  const std::size_t extra = n % slots;
  std::vector<std::size_t> slot_size(slots, base);
  std::vector<std::size_t> slot_owner(slots);
  for (std::size_t d = 0; d < devices; ++d) {
    for (std::size_t t = 0; t < per; ++t) {
      const std::size_t position = d * per + t;
      const std::size_t rank = t * devices + d; // shard-major
      slot_owner[dealt[position]] = d;
      if (rank < extra) {
        slot_size[dealt[position]] += 1;
      }
    }
  }
  std::size_t pos = 0;
  for (std::size_t s = 0; s < slots; ++s) {
    auto &dst = parts[slot_owner[s]];
    dst.insert(dst.end(), order.begin() + static_cast<std::ptrdiff_t>(pos),
               order.begin() + static_cast<std::ptrdiff_t>(pos + slot_size[s]));
    pos += slot_size[s];
  }
  return parts;
}

std::vector<LabeledDataset> partition(const LabeledDataset &data, std::size_t devices,
                                      const PartitionSpec &spec) {
  const auto parts = partition_indices(data, devices, spec);
  std::vector<LabeledDataset> shards;
  shards.reserve(parts.size());
  for (const auto &p : parts) {
    shards.push_back(subset(data, p));
  }
  return shards;
}

} // namespace ttprune::data
