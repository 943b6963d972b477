#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fiagree/types.hpp"

namespace fiagree {

struct DatasetMeta {
  double epv = 0.0;              // defective rows / feature count
  double defective_ratio = 0.0;  // percent of defective rows
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
};

// Feature matrix plus binary labels (1 = defective).
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<std::string> feature_names;
  std::string name;

  std::size_t n_rows() const { return static_cast<std::size_t>(features.rows()); }
  std::size_t n_features() const { return static_cast<std::size_t>(features.cols()); }
  std::size_t n_positive() const;

  DatasetMeta meta() const;

  // Shape, label and name checks. `min_rows`/`min_features` default to the
  // ingestion contract; internal subsets relax them.
  void validate(std::size_t min_rows = 10, std::size_t min_features = 2) const;

  std::optional<std::size_t> find_feature(std::string_view feature) const;
  std::size_t feature_index(std::string_view feature) const;

  std::vector<double> column(std::size_t j) const;

  Dataset select_rows(std::span<const std::size_t> rows) const;
  Dataset select_features(std::span<const std::string> names) const;
  Dataset drop_features(std::span<const std::string> names) const;
};

// RFC-4180 style CSV with a header row. Every column except `label_column`
// must be numeric. A label cell equal to `positive_label` maps to 1.
Dataset load_csv(const std::filesystem::path& path, std::string_view label_column,
                 std::string_view positive_label);
Dataset parse_csv(std::string_view text, std::string_view label_column,
                  std::string_view positive_label, std::string name = "dataset");

// Split one CSV record; handles quoted fields and doubled quotes.
std::vector<std::string> split_csv_record(std::string_view line);

struct AdmissionResult {
  bool admitted = true;
  std::string reason;  // empty when admitted
};

inline constexpr double kMinEpv = 10.0;
inline constexpr double kMaxDefectiveRatio = 50.0;

AdmissionResult admission_check(const DatasetMeta& meta);
inline AdmissionResult admission_check(const Dataset& d) { return admission_check(d.meta()); }

// Two-stage correlation and redundancy filter. Stage 1 drops features from
// pairs with |Spearman rho| >= rho_threshold; stage 2 drops the feature with
// the largest variance inflation factor while any VIF >= vif_threshold.
struct RedundancyResult {
  Dataset dataset;
  std::vector<std::string> removed;  // in removal order
};

RedundancyResult spearman_redundancy_filter(const Dataset& d, double rho_threshold = 0.7,
                                            double vif_threshold = 5.0);

// Variance inflation factors of every column (least squares with intercept on
// the remaining columns). Perfectly explained columns get +infinity.
std::vector<double> variance_inflation_factors(const Matrix& x);

// Correlation-based feature selection merit of a subset, using absolute
// Pearson correlations.
double cfs_merit(const Dataset& d, std::span<const std::size_t> subset);

// Precomputed correlations so repeated merit evaluations stay cheap.
class CfsScorer {
 public:
  explicit CfsScorer(const Dataset& d);
  double merit(std::span<const std::size_t> subset) const;
  std::size_t n_features() const { return label_corr_.size(); }

 private:
  std::vector<double> label_corr_;
  std::vector<std::vector<double>> feature_corr_;
};

// Best-first forward search from the empty set. Stops after `max_stale`
// consecutive expansions that do not improve the best merit, or when the
// open list is exhausted. Returns the selected column indices (ascending).
std::vector<std::size_t> cfs_search(const Dataset& d, std::size_t max_stale = 5);

struct CfsResult {
  Dataset dataset;
  std::vector<std::string> selected;
};

class InsufficientFeaturesError : public DataError {
 public:
  InsufficientFeaturesError(const std::string& what, std::vector<std::string> kept)
      : DataError(what), kept_(std::move(kept)) {}
  const std::vector<std::string>& kept() const { return kept_; }

 private:
  std::vector<std::string> kept_;
};

// Throws InsufficientFeaturesError when fewer than two features are selected.
CfsResult cfs_select(const Dataset& d, std::size_t max_stale = 5);

struct BootstrapSplit {
  std::vector<std::size_t> train_indices;  // n draws with replacement
  std::vector<std::size_t> test_indices;   // rows never drawn, ascending
  std::size_t iteration = 0;
};

inline constexpr std::size_t kMaxBootstrapRedraws = 50;

// Out-of-sample bootstrap. Iteration i draws from substream
// derive_seed(seed, i, attempt). When labels are given, a draw whose test set
// is single-class, or whose train set has fewer than two rows of a class, is
// redrawn; an empty test set is always redrawn.
std::vector<BootstrapSplit> bootstrap_splits(std::size_t n_rows, std::size_t k, std::uint64_t seed,
                                             std::span<const int> labels = {});

}  // namespace fiagree
