// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_DETAIL_FILE_IO_HPP
#define TTPRUNE_DETAIL_FILE_IO_HPP

#include "ttprune/errors.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ttprune::detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_text_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path &path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError("cannot create " + path.string());
  }
  out.write(reinterpret_cast<const char *>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

inline void write_text_file(const std::filesystem::path &path, std::string_view text) {
  write_file(path, {reinterpret_cast<const std::uint8_t *>(text.data()), text.size()});
}

} // namespace ttprune::detail

#endif // TTPRUNE_DETAIL_FILE_IO_HPP
