// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_DETAIL_BYTES_HPP
#define TTPRUNE_DETAIL_BYTES_HPP

#include "ttprune/errors.hpp"

#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <vector>

namespace ttprune::detail {

inline void put_u32_le(std::vector<std::uint8_t> &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

inline void put_u64_le(std::vector<std::uint8_t> &out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
}

inline void put_f64_le(std::vector<std::uint8_t> &out, double v) {
  put_u64_le(out, std::bit_cast<std::uint64_t>(v));
}

/// Sequential little/big-endian reader over a byte span.
class ByteReader {
public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  [[nodiscard]] std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }

  std::uint32_t u32_le() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  std::uint32_t u32_be() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v = (v << 8) | bytes_[pos_ + i];
    }
    pos_ += 4;
    return v;
  }

  std::uint64_t u64_le() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64_le() { return std::bit_cast<double>(u64_le()); }

  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

private:
  void need(std::size_t n) const {
    if (remaining() < n) {
      throw FormatError("truncated payload");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

} // namespace ttprune::detail

#endif // TTPRUNE_DETAIL_BYTES_HPP
