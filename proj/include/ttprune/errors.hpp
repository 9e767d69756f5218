// Copyright 2026 The ttprune Authors
// Licensed under the Apache License, Version 2.0

#ifndef TTPRUNE_ERRORS_HPP
#define TTPRUNE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ttprune {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or out-of-range configuration (CLI exit code 2).
class ConfigError : public Error {
public:
  using Error::Error;
};

/// A tier or device cannot meet its deadline (CLI exit code 3).
class InfeasibleError : public Error {
public:
  InfeasibleError(const std::string &what, int tier_index, double latency_s)
      : Error(what), tier_index_(tier_index), latency_s_(latency_s) {}

  [[nodiscard]] int tier_index() const noexcept { return tier_index_; }
  /// Latency of the offending tier at full FC pruning (or at zero bandwidth,
  /// +inf).
  [[nodiscard]] double latency_s() const noexcept { return latency_s_; }

private:
  int tier_index_;
  double latency_s_;
};

/// File access failure (CLI exit code 4).
class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed binary payload (IDX files, checkpoints, mask snapshots).
class FormatError : public IoError {
public:
  using IoError::IoError;
};

} // namespace ttprune

#endif // TTPRUNE_ERRORS_HPP
