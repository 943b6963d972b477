#include "fiagree/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "fiagree/perf.hpp"

namespace fiagree {

ImportanceScores permutation_importance(const Classifier& c, const Dataset& data, std::uint64_t seed,
                                        const PermutationHook& hook) {
  const std::size_t n = data.n_rows();
  const std::size_t p = data.n_features();
  if (p != c.n_features()) throw DataError("permutation data does not match the classifier's feature count");
  const double base = auc(c.predict_proba(data.features), data.labels);

  ImportanceScores s;
  s.method = ImportanceMethod::permutation;
  s.features = data.feature_names;
  s.raw.resize(p);
  Matrix work = data.features;
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<std::size_t> order;
    if (hook) {
      order = hook(j, n);
      std::vector<std::size_t> check = order;
      std::sort(check.begin(), check.end());
      for (std::size_t i = 0; i < check.size(); ++i) {
        if (check.size() != n || check[i] != i) throw UsageError("permutation hook returned a non-permutation");
      }
    } else {
      order.resize(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      Rng rng(derive_seed(seed, j));
      rng.shuffle(order);
    }
    const auto col = static_cast<Eigen::Index>(j);
    for (std::size_t i = 0; i < n; ++i) {
      work(static_cast<Eigen::Index>(i), col) = data.features(static_cast<Eigen::Index>(order[i]), col);
    }
    s.raw[j] = base - auc(c.predict_proba(work), data.labels);
    work.col(col) = data.features.col(col);
  }
  s.values = s.raw;
  return s;
}

std::vector<std::size_t> sample_rows(std::size_t n_rows, std::size_t max_rows, std::uint64_t seed) {
  std::vector<std::size_t> idx(n_rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (max_rows >= n_rows) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < max_rows; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(n_rows - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(max_rows);
  return idx;
}

namespace {

double binomial(std::size_t n, std::size_t k) {
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

void exact_row(const Classifier& c, RowView x, const Matrix& background, std::span<double> phi) {
  const std::size_t p = c.n_features();
  const double inv = 1.0 / static_cast<double>(background.rows());
  std::fill(phi.begin(), phi.end(), 0.0);
  if (c.has_reference_shapley()) {
    std::vector<double> part(p);
    for (Eigen::Index b = 0; b < background.rows(); ++b) {
      c.reference_shapley(x, row_view(background, b), part);
      for (std::size_t j = 0; j < p; ++j) phi[j] += part[j] * inv;
    }
    return;
  }
  const std::size_t size = std::size_t{1} << p;
  std::vector<double> table(size, 0.0), part(size);
  for (Eigen::Index b = 0; b < background.rows(); ++b) {
    c.coalition_table(x, row_view(background, b), part);
    for (std::size_t m = 0; m < size; ++m) table[m] += part[m];
  }
  for (double& v : table) v *= inv;
  shapley_from_table(table, p, phi);
}

}  // namespace

ShapExplanation shap_values(const Classifier& c, const Matrix& rows, const Matrix& background,
                            const ShapOptions& options) {
  const std::size_t p = c.n_features();
  if (background.rows() == 0) throw UsageError("SHAP needs a non-empty background sample");
  if (static_cast<std::size_t>(background.cols()) != p || (rows.rows() > 0 && static_cast<std::size_t>(rows.cols()) != p)) {
    throw DataError("SHAP rows and background must match the classifier's feature count");
  }
  ShapExplanation e;
  e.per_row = Matrix::Zero(rows.rows(), static_cast<Eigen::Index>(p));
  const auto bg_pred = c.predict_proba(background);
  e.base_value = std::accumulate(bg_pred.begin(), bg_pred.end(), 0.0) / static_cast<double>(bg_pred.size());

  if (options.mode == ShapMode::exact) {
    if (p > kMaxExactShapFeatures) {
      throw UsageError("exact SHAP supports at most " + std::to_string(kMaxExactShapFeatures) + " features, got " +
                       std::to_string(p));
    }
    std::vector<double> phi(p);
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      exact_row(c, row_view(rows, i), background, phi);
      for (std::size_t j = 0; j < p; ++j) e.per_row(i, static_cast<Eigen::Index>(j)) = phi[j];
    }
    return e;
  }

  if (options.n_coalitions < p + 2) {
    throw UsageError("sampled SHAP needs at least p + 2 = " + std::to_string(p + 2) + " coalitions");
  }
  if (p > kMaxMaskFeatures) throw UsageError("sampled SHAP supports at most 64 features");
  if (p == 1) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) e.per_row(i, 0) = c.predict_row(row_view(rows, i)) - e.base_value;
    return e;
  }

  // Coalitions and kernel weights, shared by every explained row.
  std::vector<Mask> masks;
  std::vector<double> weights;
  const bool enumerate = p < 31 && options.n_coalitions + 2 >= (std::size_t{1} << p);
  if (enumerate) {
    const Mask full = (Mask{1} << p) - 1;
    for (Mask m = 1; m < full; ++m) {
      const auto s = static_cast<std::size_t>(std::popcount(m));
      masks.push_back(m);
      weights.push_back(static_cast<double>(p - 1) /
                        (binomial(p, s) * static_cast<double>(s) * static_cast<double>(p - s)));
    }
  } else {
    std::vector<double> size_cdf(p - 1);
    double acc = 0.0;
    for (std::size_t s = 1; s < p; ++s) {
      acc += static_cast<double>(p - 1) / (static_cast<double>(s) * static_cast<double>(p - s));
      size_cdf[s - 1] = acc;
    }
    Rng rng(options.seed);
    std::vector<std::size_t> pool(p);
    for (std::size_t k = 0; k < options.n_coalitions; ++k) {
      const double u = rng.uniform() * acc;
      const std::size_t s =
          1 + static_cast<std::size_t>(std::upper_bound(size_cdf.begin(), size_cdf.end(), u) - size_cdf.begin());
      std::iota(pool.begin(), pool.end(), std::size_t{0});
      Mask m = 0;
      for (std::size_t t = 0; t < std::min(s, p - 1); ++t) {
        const std::size_t j = t + static_cast<std::size_t>(rng.below(p - t));
        std::swap(pool[t], pool[j]);
        m |= Mask{1} << pool[t];
      }
      masks.push_back(m);
      weights.push_back(1.0);
    }
  }

  // Eliminate the last feature through the efficiency constraint.
  const std::size_t q = p - 1;
  const std::size_t last = p - 1;
  Eigen::MatrixXd design(static_cast<Eigen::Index>(masks.size()), static_cast<Eigen::Index>(q));
  for (std::size_t k = 0; k < masks.size(); ++k) {
    const double in_last = (masks[k] >> last) & 1U ? 1.0 : 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      design(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = ((masks[k] >> j) & 1U ? 1.0 : 0.0) - in_last;
    }
  }
  const Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Eigen::Index>(weights.size()));
  const Eigen::MatrixXd gram = design.transpose() * w.asDiagonal() * design;
  const Eigen::LDLT<Eigen::MatrixXd> solver(gram);
  if (solver.info() != Eigen::Success) throw InvariantError("kernel SHAP normal equations are singular");

  std::vector<double> values(masks.size()), part(masks.size());
  Eigen::VectorXd target(static_cast<Eigen::Index>(masks.size()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const RowView x = row_view(rows, i);
    std::fill(values.begin(), values.end(), 0.0);
    for (Eigen::Index b = 0; b < background.rows(); ++b) {
      c.coalition_values(x, row_view(background, b), masks, part);
      for (std::size_t k = 0; k < masks.size(); ++k) values[k] += part[k];
    }
    const double fx = c.predict_row(x);
    const double delta = fx - e.base_value;
    for (std::size_t k = 0; k < masks.size(); ++k) {
      const double in_last = (masks[k] >> last) & 1U ? 1.0 : 0.0;
      target(static_cast<Eigen::Index>(k)) =
          values[k] / static_cast<double>(background.rows()) - e.base_value - in_last * delta;
    }
    const Eigen::VectorXd phi = solver.solve(design.transpose() * (w.asDiagonal() * target));
    double sum = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      e.per_row(i, static_cast<Eigen::Index>(j)) = phi(static_cast<Eigen::Index>(j));
      sum += phi(static_cast<Eigen::Index>(j));
    }
    e.per_row(i, static_cast<Eigen::Index>(last)) = delta - sum;
  }
  return e;
}

ImportanceScores shap_importance(const ShapExplanation& e, const std::vector<std::string>& feature_names) {
  if (static_cast<std::size_t>(e.per_row.cols()) != feature_names.size()) {
    throw DataError("SHAP matrix width does not match the feature names");
  }
  ImportanceScores s;
  s.method = ImportanceMethod::shap;
  s.features = feature_names;
  s.raw.resize(feature_names.size());
  for (std::size_t j = 0; j < feature_names.size(); ++j) {
    s.raw[j] = e.per_row.col(static_cast<Eigen::Index>(j)).cwiseAbs().sum();
  }
  s.values = rescale_max_100(s.raw);
  return s;
}

}  // namespace fiagree
