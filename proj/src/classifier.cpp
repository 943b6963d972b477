#include <algorithm>
#include <bit>
#include <cmath>
#include <vector>

#include "fiagree/learners.hpp"

namespace fiagree {

void Classifier::check_row(RowView row) const {
  if (row.size() != n_features()) {
    throw DataError("expected " + std::to_string(n_features()) + " features, got " +
                    std::to_string(row.size()));
  }
}

std::vector<double> Classifier::predict_proba(const Matrix& rows) const {
  if (rows.rows() > 0 && static_cast<std::size_t>(rows.cols()) != n_features()) {
    throw DataError("expected " + std::to_string(n_features()) + " feature columns, got " +
                    std::to_string(rows.cols()));
  }
  std::vector<double> out(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out[static_cast<std::size_t>(i)] = predict_row(row_view(rows, i));
  return out;
}

void Classifier::coalition_values(RowView x, RowView reference, std::span<const Mask> masks,
                                  std::span<double> out) const {
  check_row(x);
  check_row(reference);
  const std::size_t p = n_features();
  if (p > kMaxMaskFeatures) throw UsageError("coalition queries support at most 64 features");
  std::vector<double> hybrid(p);
  for (std::size_t m = 0; m < masks.size(); ++m) {
    for (std::size_t j = 0; j < p; ++j) hybrid[j] = (masks[m] >> j) & 1U ? x[j] : reference[j];
    out[m] = predict_row(hybrid);
  }
}

void Classifier::coalition_table(RowView x, RowView reference, std::span<double> out) const {
  const std::size_t p = n_features();
  if (p > 20) throw UsageError("full coalition tables support at most 20 features");
  const std::size_t size = std::size_t{1} << p;
  std::vector<Mask> masks(size);
  for (std::size_t m = 0; m < size; ++m) masks[m] = m;
  coalition_values(x, reference, masks, out);
}

void Classifier::reference_shapley(RowView x, RowView reference, std::span<double> phi) const {
  const std::size_t p = n_features();
  std::vector<double> table(std::size_t{1} << p);
  coalition_table(x, reference, table);
  shapley_from_table(table, p, phi);
}

std::vector<double> Classifier::raw_cs_importance(const Dataset&) const {
  throw UsageError("this classifier has no classifier-specific importance");
}

void shapley_from_table(std::span<const double> table, std::size_t p, std::span<double> phi) {
  const std::size_t size = std::size_t{1} << p;
  if (table.size() != size || phi.size() != p) throw InvariantError("shapley_from_table: bad sizes");
  // weight[s] = s! (p - s - 1)! / p!
  std::vector<double> weight(p);
  for (std::size_t s = 0; s < p; ++s) {
    double w = 1.0 / static_cast<double>(p);
    // 1 / (p * C(p-1, s))
    double binom = 1.0;
    for (std::size_t k = 1; k <= s; ++k) binom = binom * static_cast<double>(p - 1 - s + k) / static_cast<double>(k);
    weight[s] = w / binom;
  }
  std::fill(phi.begin(), phi.end(), 0.0);
  for (std::size_t mask = 0; mask < size; ++mask) {
    const double base = table[mask];
    const std::size_t s = static_cast<std::size_t>(std::popcount(mask));
    if (s == p) continue;
    const double w = weight[s];
    for (std::size_t i = 0; i < p; ++i) {
      const std::size_t bit = std::size_t{1} << i;
      if (mask & bit) continue;
      phi[i] += w * (table[mask | bit] - base);
    }
  }
}

}  // namespace fiagree
