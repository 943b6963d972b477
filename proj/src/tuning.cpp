#include <algorithm>
#include <cmath>

#include "fiagree/learners.hpp"
#include "fiagree/perf.hpp"

namespace fiagree {

std::vector<std::size_t> stratified_folds(std::span<const int> labels, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw UsageError("cross-validation needs at least two folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
  Rng rng(seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<std::size_t> fold(labels.size());
  std::size_t next = 0;
  for (std::size_t i : pos) fold[i] = next++ % folds;
  for (std::size_t i : neg) fold[i] = next++ % folds;
  return fold;
}

namespace {

bool fold_usable(std::span<const int> labels, std::span<const std::size_t> fold, std::size_t k) {
  std::size_t test_pos = 0, test_neg = 0, train_pos = 0, train_neg = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool in_test = fold[i] == k;
    if (labels[i] == 1) {
      (in_test ? test_pos : train_pos) += 1;
    } else {
      (in_test ? test_neg : train_neg) += 1;
    }
  }
  return test_pos > 0 && test_neg > 0 && train_pos >= 2 && train_neg >= 2;
}

}  // namespace

double cross_validated_auc(const LearnerSpec& spec, const Dataset& train, std::size_t folds,
                           std::uint64_t seed) {
  // Degenerate assignments are re-stratified with a fresh substream.
  std::vector<std::size_t> fold;
  bool ok = false;
  for (std::uint64_t attempt = 0; attempt < 10 && !ok; ++attempt) {
    fold = stratified_folds(train.labels, folds, derive_seed(seed, attempt));
    ok = true;
    for (std::size_t k = 0; k < folds && ok; ++k) ok = fold_usable(train.labels, fold, k);
  }
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t k = 0; k < folds; ++k) {
    if (!fold_usable(train.labels, fold, k)) continue;
    std::vector<std::size_t> tr, te;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == k ? te : tr).push_back(i);
    const Dataset dtr = train.select_rows(tr);
    const Dataset dte = train.select_rows(te);
    const auto model = fit(spec, dtr);
    total += auc(model->predict_proba(dte.features), dte.labels);
    ++used;
  }
  return used == 0 ? 0.5 : total / static_cast<double>(used);
}

LearnerSpec draw_candidate(LearnerKind kind, std::size_t n_features, Rng& rng) {
  LearnerSpec spec;
  spec.kind = kind;
  for (const auto& def : hyperparameter_defs(kind)) {
    if (!def.tuned) continue;
    double value;
    if (!def.grid_values.empty()) {
      value = def.grid_values[static_cast<std::size_t>(rng.below(def.grid_values.size()))];
    } else if (def.integer) {
      const auto lo = static_cast<std::uint64_t>(def.grid_low);
      const auto hi = std::isfinite(def.grid_high) ? static_cast<std::uint64_t>(def.grid_high)
                                                   : static_cast<std::uint64_t>(std::max<std::size_t>(n_features, 1));
      value = static_cast<double>(lo + rng.below(hi - lo + 1));
    } else if (def.log_scale) {
      value = std::exp(rng.uniform(std::log(def.grid_low), std::log(def.grid_high)));
    } else {
      value = rng.uniform(def.grid_low, def.grid_high);
    }
    spec.hyperparameters[def.name] = value;
  }
  return spec;
}

LearnerSpec tune_random_search(LearnerKind kind, const Dataset& train, const TuneOptions& options,
                               std::uint64_t fit_seed, TuneTrace* trace) {
  if (options.budget < 1) throw UsageError("tuning budget must be at least 1");
  if (options.folds < 2) throw UsageError("cross-validation needs at least two folds");
  Rng rng(derive_seed(options.seed, 0));
  std::vector<LearnerSpec> candidates;
  for (std::size_t b = 0; b < options.budget; ++b) {
    LearnerSpec c = draw_candidate(kind, train.n_features(), rng);
    c.seed = fit_seed;
    candidates.push_back(std::move(c));
  }
  std::vector<double> scores;
  std::size_t best = 0;
  if (candidates.size() > 1) {
    const std::uint64_t cv_seed = derive_seed(options.seed, 1);
    for (std::size_t b = 0; b < candidates.size(); ++b) {
      scores.push_back(cross_validated_auc(candidates[b], train, options.folds, cv_seed));
      if (scores[b] > scores[best]) best = b;
    }
  }
  if (trace) {
    trace->candidates = candidates;
    trace->cv_auc = scores;
    trace->chosen = best;
  }
  return candidates[best];
}

}  // namespace fiagree
