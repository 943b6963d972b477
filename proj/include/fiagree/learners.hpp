#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fiagree/data.hpp"
#include "fiagree/rng.hpp"
#include "fiagree/types.hpp"

namespace fiagree {

enum class LearnerKind { logistic, cart, random_forest, gbt };

std::string_view kind_name(LearnerKind kind);
LearnerKind parse_kind(std::string_view name);
inline constexpr LearnerKind kAllKinds[] = {LearnerKind::logistic, LearnerKind::cart,
                                            LearnerKind::random_forest, LearnerKind::gbt};

// One documented hyperparameter. [min_value, max_value] is the admissible
// range; [grid_low, grid_high] is what random search draws from.
struct HyperparameterDef {
  std::string name;
  double default_value;
  double min_value;
  double max_value;
  double grid_low;
  double grid_high;
  bool integer = false;
  bool log_scale = false;
  bool tuned = false;
  std::vector<double> grid_values;  // when non-empty, search draws from these
};

const std::vector<HyperparameterDef>& hyperparameter_defs(LearnerKind kind);

struct LearnerSpec {
  LearnerKind kind = LearnerKind::logistic;
  std::map<std::string, double> hyperparameters;
  std::uint64_t seed = 0;

  // Value if set, documented default otherwise.
  double param(std::string_view name) const;
  // Name and range checks; `n_features` bounds mtry when known.
  void validate(std::optional<std::size_t> n_features = std::nullopt) const;
  std::string describe() const;
};

enum class ImportanceMethod { lrfi, rfi, rffi, xgfi, permutation, shap };

std::string_view method_name(ImportanceMethod m);
ImportanceMethod parse_method(std::string_view name);
bool is_classifier_specific(ImportanceMethod m);
ImportanceMethod cs_method_for(LearnerKind kind);

struct ImportanceScores {
  ImportanceMethod method = ImportanceMethod::permutation;
  std::vector<std::string> features;
  std::vector<double> values;  // reported scores
  std::vector<double> raw;     // before any rescaling
  std::size_t iteration = 0;

  double value(std::string_view feature) const;
};

// Positive rescaling so the largest value becomes 100. When no value is
// positive the largest magnitude becomes 100 instead; all-zero input is
// returned unchanged. Order is always preserved.
std::vector<double> rescale_max_100(std::span<const double> raw);

// A fitted probabilistic binary classifier. Immutable after construction.
//
// Besides plain prediction, classifiers answer "coalition" queries: for an
// explained row x, a reference row r and a mask S, the hybrid point takes
// x_j for j in S and r_j otherwise. The defaults build hybrid rows and call
// predict_row; tree and linear models override them with exact shortcuts.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t n_features() const = 0;
  virtual double predict_row(RowView row) const = 0;

  std::vector<double> predict_proba(const Matrix& rows) const;

  virtual void coalition_values(RowView x, RowView reference, std::span<const Mask> masks,
                                std::span<double> out) const;
  // All 2^p coalitions, indexed by mask. Requires p <= 20.
  virtual void coalition_table(RowView x, RowView reference, std::span<double> out) const;

  // Exact single-reference Shapley values without a coalition table.
  virtual bool has_reference_shapley() const { return false; }
  virtual void reference_shapley(RowView x, RowView reference, std::span<double> phi) const;

  // Raw classifier-specific importance; throws for models without one.
  virtual std::vector<double> raw_cs_importance(const Dataset& train) const;

  const LearnerSpec& spec() const { return spec_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }

 protected:
  LearnerSpec spec_;
  std::vector<std::string> feature_names_;
  void check_row(RowView row) const;
};

using ClassifierPtr = std::shared_ptr<const Classifier>;

// Shapley values of a game given as a full table over 2^p masks.
void shapley_from_table(std::span<const double> table, std::size_t p, std::span<double> phi);

// Throws DataError for single-class data (or fewer than two rows of either
// class) and for non-finite features.
ClassifierPtr fit(const LearnerSpec& spec, const Dataset& train);

// Kind-dispatched classifier-specific importance, rescaled to max 100.
ImportanceScores cs_importance(const Classifier& c, const Dataset& train);

struct TuneOptions {
  std::size_t budget = 10;
  std::size_t folds = 3;
  std::uint64_t seed = 0;
};

struct TuneTrace {
  std::vector<LearnerSpec> candidates;
  std::vector<double> cv_auc;
  std::size_t chosen = 0;
};

// Draws `budget` candidates uniformly from the kind's grid and returns the
// one with the best mean stratified cross-validated AUC (first drawn wins
// ties). The returned spec carries `fit_seed` as its seed.
LearnerSpec tune_random_search(LearnerKind kind, const Dataset& train, const TuneOptions& options,
                               std::uint64_t fit_seed = 0, TuneTrace* trace = nullptr);

// Draws one candidate hyperparameter vector.
LearnerSpec draw_candidate(LearnerKind kind, std::size_t n_features, Rng& rng);

// Mean stratified k-fold AUC of `spec` on `train`.
double cross_validated_auc(const LearnerSpec& spec, const Dataset& train, std::size_t folds,
                           std::uint64_t seed);

// Stratified fold assignment (fold id per row).
std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds,
                                          std::uint64_t seed);

}  // namespace fiagree
