#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hivemon {

/// Base class for all recoverable hivemon failures. Configuration and data
/// problems derive from this; programming errors use std::logic_error.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- ingest ---

struct MalformedRow : Error {
  std::size_t line;
  explicit MalformedRow(std::size_t line_, const std::string& detail)
      : Error("malformed row at line " + std::to_string(line_) + ": " + detail), line(line_) {}
};

struct EmptyInput : Error {
  EmptyInput() : Error("input contains no data rows") {}
};

struct NonMonotonicAfterSort : Error {
  explicit NonMonotonicAfterSort(const std::string& when)
      : Error("duplicate timestamp: " + when) {}
};

struct IrregularSpacing : Error {
  explicit IrregularSpacing(const std::string& detail)
      : Error("timestamp gap is not a multiple of the sampling interval: " + detail) {}
};

struct NoOverlap : Error {
  NoOverlap() : Error("series timestamp grids do not intersect") {}
};

// --- estimators ---

struct NegativeSlope : Error {
  NegativeSlope() : Error("slope m < 0 must be filtered before the pi transform") {}
};

struct DegenerateSlope : Error {
  DegenerateSlope() : Error("slope at or below the floor, delta-t not available") {}
};

struct NoResponseSamples : Error {
  NoResponseSamples() : Error("no hive samples within the response window") {}
};

struct InsufficientPairs : Error {
  std::size_t n;
  explicit InsufficientPairs(std::size_t n_)
      : Error("only " + std::to_string(n_) + " extreme pairs in window"), n(n_) {}
};

struct ZeroVariance : Error {
  ZeroVariance() : Error("a shifted segment is constant, correlation undefined") {}
};

struct InsufficientOverlap : Error {
  InsufficientOverlap() : Error("too few overlapping samples after lag shift") {}
};

// --- collapse statistics ---

struct WindowTooLong : Error {
  WindowTooLong() : Error("series shorter than one rolling window") {}
};

struct TooFewWindows : Error {
  TooFewWindows() : Error("need at least two rolling windows to form increments") {}
};

struct EmptyIncrements : Error {
  EmptyIncrements() : Error("no increments to histogram") {}
};

struct BinMismatch : Error {
  BinMismatch() : Error("probability distributions use different bin edges") {}
};

// --- grid ---

struct MissingOnset : Error {
  explicit MissingOnset(const std::string& hive_id)
      : Error("no collapse onset for eventually-collapsed hive " + hive_id) {}
};

}  // namespace hivemon
