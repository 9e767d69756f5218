// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_PRUNING_HPP
#define TTPRUNE_PRUNING_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace ttprune::pruning {

/// Flat weight-vector partition: the conv segment comes first and is never
/// pruned, the fully-connected segment follows it.
struct LayerLayout {
  std::size_t conv_weight_count = 0;
  std::size_t fc_weight_count = 0;

  [[nodiscard]] std::size_t total() const { return conv_weight_count + fc_weight_count; }
  [[nodiscard]] std::size_t fc_offset() const { return conv_weight_count; }

  friend bool operator==(const LayerLayout &, const LayerLayout &) = default;
};

/// Binary retention mask over the flat weight vector (1 = keep).
struct PruningMask {
  std::vector<std::uint8_t> bits;
  double ratio = 0.0; // pruned fraction of the FC segment

  [[nodiscard]] std::size_t size() const { return bits.size(); }
  [[nodiscard]] std::size_t popcount() const;

  friend bool operator==(const PruningMask &, const PruningMask &) = default;
};

/// Number of FC weights removed at ratio rho: floor(rho * n). The one place
/// this rounding lives; mask construction and the latency model share it.
std::size_t pruned_count(std::size_t fc_weight_count, double ratio);

/// |w_j - w_hat_j| elementwise, w_hat being the weights after a local update.
std::vector<double> importance_scores(std::span<const double> weights_before,
                                      std::span<const double> weights_after);

/// Zeroes the floor(rho * W_fc) least-important FC weights; the conv segment
/// stays all ones. Ties prune the lower flat index first, so masks are nested
/// in rho for fixed scores.
PruningMask build_mask(std::span<const double> scores, const LayerLayout &layout,
                       double ratio);

/// All-ones mask of the given layout.
PruningMask full_mask(const LayerLayout &layout);

/// w (.) m. Masked slots become exactly 0, others are copied bit-for-bit.
std::vector<double> apply_mask(std::span<const double> weights, const PruningMask &mask);

/// In-place variant of apply_mask.
void apply_mask_inplace(std::span<double> weights, const PruningMask &mask);

/// W_conv + ceil((1 - rho) W_fc), i.e. W_fc - floor(rho W_fc) surviving FC
/// weights.
std::size_t pruned_weight_count(const LayerLayout &layout, double ratio);

/// Packed bitset snapshot: version byte, u64 bit count, f64 ratio, bits
/// LSB-first. All integers little-endian.
std::vector<std::uint8_t> serialize_mask(const PruningMask &mask);
PruningMask deserialize_mask(std::span<const std::uint8_t> bytes);

inline constexpr std::uint8_t kMaskFormatVersion = 1;

} // namespace ttprune::pruning

#endif // TTPRUNE_PRUNING_HPP
