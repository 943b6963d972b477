#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fiagree/learners.hpp"

namespace fiagree {

// PD_S(g) = mean over data rows of the prediction with the features in S
// overwritten by grid row g; one value per grid row.
std::vector<double> partial_dependence(const Classifier& c, const Matrix& data,
                                       std::span<const std::size_t> feature_set, const Matrix& grid);
// Grid defaults to the data rows themselves.
std::vector<double> partial_dependence(const Classifier& c, const Dataset& data,
                                       std::span<const std::size_t> feature_set);

// One-vs-rest Friedman H of every feature, evaluated exactly on `sample`
// (partial dependences averaged over the same rows). H is 0 when the
// prediction is constant over the sample.
std::vector<double> friedman_h_all(const Classifier& c, const Matrix& sample);

// Same statistic for one feature, computed directly from partial_dependence.
// Quadratic in the sample size per feature; used as a cross-check.
double friedman_h_direct(const Classifier& c, const Matrix& sample, std::size_t feature);

inline constexpr std::size_t kDefaultHSubsample = 300;
inline constexpr double kInteractionFlagLow = 0.3;
inline constexpr double kInteractionFlagHigh = 0.5;

// H of one named feature on a seeded subsample of at most `subsample` rows.
double friedman_h(const Classifier& c, const Dataset& data, std::string_view feature,
                  std::uint64_t seed = 0, std::size_t subsample = kDefaultHSubsample);

struct InteractionProfile {
  std::vector<std::string> features;
  std::vector<double> median_h;
  std::size_t repeats = 0;
  std::vector<bool> flag_low;   // median H >= 0.3
  std::vector<bool> flag_high;  // median H >= 0.5

  std::size_t count_at_least(double threshold) const;
};

// Median over `repeats` independent subsamples of friedman_h_all.
InteractionProfile interaction_profile(const Classifier& c, const Dataset& data, std::size_t repeats = 10,
                                       std::uint64_t seed = 0, std::size_t subsample = kDefaultHSubsample);

struct SyntheticSpec {
  std::size_t n_rows = 1500;
  bool with_interactions = false;
  std::uint64_t seed = 0;
  std::vector<double> signal_weights{20.0, 10.0, 5.0, 2.5, 0.5};
};

// Linear predictor for one row given x1..x5.
double synthetic_signal(const SyntheticSpec& spec, std::span<const double> x);

// Human-readable generating formula, e.g. for sidecar metadata.
std::string synthetic_formula(const SyntheticSpec& spec);

// Expected top-3 features in order.
std::vector<std::string> synthetic_ground_truth();

// Columns x1..x5, n1..n6: x* and n1, n5, n6 standard normal, n2..n4
// uniform on [0, 1). Each label is one Bernoulli draw at sigmoid(signal).
Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace fiagree
