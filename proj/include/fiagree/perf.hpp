#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fiagree/types.hpp"

namespace fiagree {

// Per-iteration performance of one classifier on its out-of-sample test split.
struct PerfRecord {
  std::string dataset;
  std::string classifier;
  std::size_t iteration = 0;
  double auc = 0.5;
  std::size_t ifa = 1;
  std::size_t n_test = 0;
};

// Probability that a random positive outscores a random negative, ties
// counting one half. Throws DataError unless both classes are present.
double auc(std::span<const double> scores, std::span<const int> labels);

// 1-based position of the first positive row when rows are ordered by
// descending score (ties keep original order). The false-alarm count is
// ifa - 1. Throws DataError when there is no positive row.
std::size_t ifa(std::span<const double> scores, std::span<const int> labels);

inline constexpr double kGateMinMedianAuc = 0.7;   // strict: median AUC must exceed this
inline constexpr double kGateMaxMedianIfa = 1.0;

struct GateResult {
  bool passed = false;
  double median_auc = 0.0;
  double median_ifa = 0.0;
  std::string reason;  // empty on pass
};

// Median AUC > 0.7 and median IFA <= 1.
GateResult gate(std::span<const PerfRecord> records);

}  // namespace fiagree
