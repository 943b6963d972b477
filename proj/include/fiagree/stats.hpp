#pragma once

#include <cmath>
#include <span>
#include <vector>

namespace fiagree::stats {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double mean(std::span<const double> x);

// Sample variance (n - 1 denominator); 0 for fewer than two values.
double variance(std::span<const double> x);

double median(std::vector<double> x);

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> midranks(std::span<const double> x);

// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace fiagree::stats
