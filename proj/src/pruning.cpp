// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#include "ttprune/pruning.hpp"

#include "ttprune/detail/bytes.hpp"
#include "ttprune/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ttprune::pruning {

namespace {

void check_ratio(double ratio, const char *who) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument(std::string(who) + ": ratio must lie in [0, 1]");
  }
}

} // namespace

std::size_t PruningMask::popcount() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

std::size_t pruned_count(std::size_t fc_weight_count, double ratio) {
  check_ratio(ratio, "pruned_count");
  const double raw = std::floor(ratio * static_cast<double>(fc_weight_count));
  return std::min(fc_weight_count, static_cast<std::size_t>(raw));
}

std::vector<double> importance_scores(std::span<const double> weights_before,
                                      std::span<const double> weights_after) {
  if (weights_before.size() != weights_after.size()) {
    throw std::invalid_argument("importance_scores: length mismatch");
  }
  std::vector<double> scores(weights_before.size());
  for (std::size_t j = 0; j < scores.size(); ++j) {
    scores[j] = std::abs(weights_before[j] - weights_after[j]);
  }
  return scores;
}

PruningMask full_mask(const LayerLayout &layout) {
  return PruningMask{std::vector<std::uint8_t>(layout.total(), 1), 0.0};
}

PruningMask build_mask(std::span<const double> scores, const LayerLayout &layout,
                       double ratio) {
  check_ratio(ratio, "build_mask");
  if (scores.size() != layout.total()) {
    throw std::invalid_argument("build_mask: score vector does not match layout");
  }
  PruningMask mask = full_mask(layout);
  mask.ratio = ratio;
  const std::size_t n_prune = pruned_count(layout.fc_weight_count, ratio);
  if (n_prune == 0) {
    return mask;
  }

  std::vector<std::size_t> order(layout.fc_weight_count);
  std::iota(order.begin(), order.end(), layout.fc_offset());
  // Strict total order on (score, index): the pruned set for a smaller count
  // is always a prefix of the one for a larger count.
  auto less = [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b] || (scores[a] == scores[b] && a < b);
  };
  if (n_prune < order.size()) {
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_prune),
                     order.end(), less);
  }
  for (std::size_t i = 0; i < n_prune; ++i) {
    mask.bits[order[i]] = 0;
  }
  return mask;
}

std::vector<double> apply_mask(std::span<const double> weights, const PruningMask &mask) {
  std::vector<double> out(weights.begin(), weights.end());
  apply_mask_inplace(out, mask);
  return out;
}

void apply_mask_inplace(std::span<double> weights, const PruningMask &mask) {
  if (weights.size() != mask.size()) {
    throw std::invalid_argument("apply_mask: length mismatch");
  }
  for (std::size_t j = 0; j < weights.size(); ++j) {
    if (mask.bits[j] == 0) {
      weights[j] = 0.0;
    }
  }
}

std::size_t pruned_weight_count(const LayerLayout &layout, double ratio) {
  return layout.conv_weight_count + layout.fc_weight_count -
         pruned_count(layout.fc_weight_count, ratio);
}

std::vector<std::uint8_t> serialize_mask(const PruningMask &mask) {
  std::vector<std::uint8_t> out;
  out.reserve(17 + (mask.size() + 7) / 8);
  out.push_back(kMaskFormatVersion);
  detail::put_u64_le(out, mask.size());
  detail::put_f64_le(out, mask.ratio);
  std::uint8_t acc = 0;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (mask.bits[j] != 0) {
      acc |= static_cast<std::uint8_t>(1u << (j % 8));
    }
    if (j % 8 == 7) {
      out.push_back(acc);
      acc = 0;
    }
  }
  if (mask.size() % 8 != 0) {
    out.push_back(acc);
  }
  return out;
}

PruningMask deserialize_mask(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  const auto version = in.u8();
  if (version != kMaskFormatVersion) {
    throw FormatError("mask snapshot: unsupported version " + std::to_string(version));
  }
  const auto n = in.u64_le();
  PruningMask mask;
  mask.ratio = in.f64_le();
  const auto packed = in.take(static_cast<std::size_t>((n + 7) / 8));
  if (in.remaining() != 0) {
    throw FormatError("mask snapshot: trailing bytes");
  }
  mask.bits.resize(static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < mask.bits.size(); ++j) {
    mask.bits[j] = (packed[j / 8] >> (j % 8)) & 1u;
  }
  return mask;
}

} // namespace ttprune::pruning
