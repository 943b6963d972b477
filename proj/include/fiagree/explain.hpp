#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fiagree/learners.hpp"

namespace fiagree {

// Test hook: returns the row order used to permute `feature` over `n` rows.
using PermutationHook = std::function<std::vector<std::size_t>(std::size_t feature, std::size_t n)>;

// AUC on `data` minus AUC after shuffling one column at a time (one seeded
// shuffle per feature). Scores are the raw AUC drops, negative values kept.
ImportanceScores permutation_importance(const Classifier& c, const Dataset& data, std::uint64_t seed,
                                        const PermutationHook& hook = {});

enum class ShapMode { exact, sampled };

inline constexpr std::size_t kMaxExactShapFeatures = 14;

struct ShapOptions {
  ShapMode mode = ShapMode::exact;
  std::size_t n_coalitions = 0;  // sampled mode only; must be >= p + 2
  std::uint64_t seed = 0;        // sampled mode coalition draw
};

struct ShapExplanation {
  Matrix per_row;                       // rows x features, signed
  double base_value = 0.0;              // mean prediction over the background
  std::vector<std::size_t> background;  // source row indices, when known
};

// Interventional Shapley values: the value of coalition S at row x is the
// mean prediction over background rows b of the hybrid taking x on S and b
// elsewhere. Exact mode enumerates every coalition (p <= 14). Sampled mode
// fits the kernel-weighted least-squares problem with the efficiency
// constraint imposed; it enumerates every coalition when n_coalitions covers
// them, and otherwise draws coalition sizes from the Shapley kernel.
ShapExplanation shap_values(const Classifier& c, const Matrix& rows, const Matrix& background,
                            const ShapOptions& options = {});

// Up to `max_rows` distinct row indices drawn without replacement.
std::vector<std::size_t> sample_rows(std::size_t n_rows, std::size_t max_rows, std::uint64_t seed);

// Sum of |shap| per feature, rescaled to max 100.
ImportanceScores shap_importance(const ShapExplanation& e, const std::vector<std::string>& feature_names);

}  // namespace fiagree
