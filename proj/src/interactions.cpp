#include "fiagree/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "fiagree/explain.hpp"
#include "fiagree/stats.hpp"

namespace fiagree {

std::vector<double> partial_dependence(const Classifier& c, const Matrix& data,
                                       std::span<const std::size_t> feature_set, const Matrix& grid) {
  if (data.rows() == 0) throw DataError("partial dependence needs at least one data row");
  if (feature_set.empty()) throw UsageError("partial dependence needs a non-empty feature set");
  for (std::size_t j : feature_set) {
    if (j >= static_cast<std::size_t>(data.cols())) throw UsageError("partial dependence feature out of range");
  }
  if (grid.cols() != data.cols()) throw DataError("grid and data column counts differ");
  std::vector<double> out(static_cast<std::size_t>(grid.rows()));
  Matrix work = data;
  for (Eigen::Index g = 0; g < grid.rows(); ++g) {
    for (std::size_t j : feature_set) work.col(static_cast<Eigen::Index>(j)).setConstant(grid(g, static_cast<Eigen::Index>(j)));
    const auto pred = c.predict_proba(work);
    out[static_cast<std::size_t>(g)] = stats::mean(pred);
  }
  return out;
}

std::vector<double> partial_dependence(const Classifier& c, const Dataset& data,
                                       std::span<const std::size_t> feature_set) {
  return partial_dependence(c, data.features, feature_set, data.features);
}

namespace {

void center(std::vector<double>& v) {
  const double m = stats::mean(v);
  for (double& x : v) x -= m;
}

double h_from_parts(std::vector<double> f, std::vector<double> pd_j, std::vector<double> pd_rest) {
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  if (*lo == *hi) return 0.0;
  center(f);
  center(pd_j);
  center(pd_rest);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double r = f[k] - pd_j[k] - pd_rest[k];
    num += r * r;
    den += f[k] * f[k];
  }
  if (den <= 0.0) return 0.0;
  return std::sqrt(num / den);
}

}  // namespace

std::vector<double> friedman_h_all(const Classifier& c, const Matrix& sample) {
  const std::size_t p = c.n_features();
  const std::size_t n = static_cast<std::size_t>(sample.rows());
  if (p < 2) throw UsageError("Friedman H needs at least two features");
  if (n == 0) throw DataError("Friedman H needs at least one row");
  if (p > kMaxMaskFeatures) {
    std::vector<double> h(p);
    for (std::size_t j = 0; j < p; ++j) h[j] = friedman_h_direct(c, sample, j);
    return h;
  }
  // Mask j is {j}; mask p + j is every feature except j.
  const Mask full = p == 64 ? ~Mask{0} : (Mask{1} << p) - 1;
  std::vector<Mask> masks(2 * p);
  for (std::size_t j = 0; j < p; ++j) {
    masks[j] = Mask{1} << j;
    masks[p + j] = full & ~masks[j];
  }
  std::vector<std::vector<double>> pd_j(p, std::vector<double>(n, 0.0));
  std::vector<std::vector<double>> pd_rest(p, std::vector<double>(n, 0.0));
  std::vector<double> f(n), out(2 * p);
  for (std::size_t k = 0; k < n; ++k) {
    const RowView x = row_view(sample, static_cast<Eigen::Index>(k));
    f[k] = c.predict_row(x);
    for (std::size_t i = 0; i < n; ++i) {
      c.coalition_values(x, row_view(sample, static_cast<Eigen::Index>(i)), masks, out);
      for (std::size_t j = 0; j < p; ++j) {
        pd_j[j][k] += out[j];
        pd_rest[j][k] += out[p + j];
      }
    }
  }
  std::vector<double> h(p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      pd_j[j][k] /= static_cast<double>(n);
      pd_rest[j][k] /= static_cast<double>(n);
    }
    h[j] = h_from_parts(f, pd_j[j], pd_rest[j]);
  }
  return h;
}

double friedman_h_direct(const Classifier& c, const Matrix& sample, std::size_t feature) {
  const std::size_t p = static_cast<std::size_t>(sample.cols());
  if (p < 2) throw UsageError("Friedman H needs at least two features");
  if (feature >= p) throw UsageError("Friedman H feature out of range");
  std::vector<std::size_t> only{feature}, rest;
  for (std::size_t j = 0; j < p; ++j) {
    if (j != feature) rest.push_back(j);
  }
  return h_from_parts(c.predict_proba(sample), partial_dependence(c, sample, only, sample),
                      partial_dependence(c, sample, rest, sample));
}

double friedman_h(const Classifier& c, const Dataset& data, std::string_view feature, std::uint64_t seed,
                  std::size_t subsample) {
  const std::size_t j = data.feature_index(feature);
  const auto rows = sample_rows(data.n_rows(), subsample, seed);
  const Dataset s = data.select_rows(rows);
  return friedman_h_direct(c, s.features, j);
}

std::size_t InteractionProfile::count_at_least(double threshold) const {
  return static_cast<std::size_t>(
      std::count_if(median_h.begin(), median_h.end(), [&](double h) { return h >= threshold; }));
}

InteractionProfile interaction_profile(const Classifier& c, const Dataset& data, std::size_t repeats,
                                       std::uint64_t seed, std::size_t subsample) {
  if (repeats < 1) throw UsageError("interaction profile needs at least one repeat");
  const std::size_t p = data.n_features();
  std::vector<std::vector<double>> runs(p);
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto rows = sample_rows(data.n_rows(), subsample, derive_seed(seed, r));
    const auto h = friedman_h_all(c, data.select_rows(rows).features);
    for (std::size_t j = 0; j < p; ++j) runs[j].push_back(h[j]);
  }
  InteractionProfile prof;
  prof.features = data.feature_names;
  prof.repeats = repeats;
  for (std::size_t j = 0; j < p; ++j) {
    const double m = stats::median(runs[j]);
    prof.median_h.push_back(m);
    prof.flag_low.push_back(m >= kInteractionFlagLow);
    prof.flag_high.push_back(m >= kInteractionFlagHigh);
  }
  return prof;
}

double synthetic_signal(const SyntheticSpec& spec, std::span<const double> x) {
  if (spec.signal_weights.size() != 5 || x.size() < 5) throw UsageError("synthetic signal needs five weights and x1..x5");
  double s = 0.0;
  for (std::size_t j = 0; j < 5; ++j) s += spec.signal_weights[j] * x[j];
  if (spec.with_interactions) s += x[0] * x[2] + x[1] * x[2] + x[1] * x[0];
  return s;
}

std::string synthetic_formula(const SyntheticSpec& spec) {
  std::ostringstream out;
  const char* names[] = {"x1", "x2", "x3", "x4", "x5"};
  for (std::size_t j = 0; j < spec.signal_weights.size() && j < 5; ++j) {
    out << (j ? " + " : "") << spec.signal_weights[j] << '*' << names[j];
  }
  if (spec.with_interactions) out << " + x1*x3 + x2*x3 + x2*x1";
  return out.str();
}

std::vector<std::string> synthetic_ground_truth() { return {"x1", "x2", "x3"}; }

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.n_rows < 2) throw UsageError("synthetic data needs at least two rows");
  if (spec.signal_weights.size() != 5) throw UsageError("synthetic data needs exactly five signal weights");
  Dataset d;
  d.name = spec.with_interactions ? "synthetic_interaction" : "synthetic_additive";
  d.feature_names = {"x1", "x2", "x3", "x4", "x5", "n1", "n2", "n3", "n4", "n5", "n6"};
  d.features.resize(static_cast<Eigen::Index>(spec.n_rows), 11);
  d.labels.resize(spec.n_rows);
  Rng rng(spec.seed);
  for (std::size_t i = 0; i < spec.n_rows; ++i) {
    double row[11];
    for (int j = 0; j < 6; ++j) row[j] = rng.normal();
    for (int j = 6; j < 9; ++j) row[j] = rng.uniform();
    for (int j = 9; j < 11; ++j) row[j] = rng.normal();
    for (int j = 0; j < 11; ++j) d.features(static_cast<Eigen::Index>(i), j) = row[j];
    const double prob = stats::sigmoid(synthetic_signal(spec, std::span<const double>(row, 5)));
    d.labels[i] = rng.uniform() < prob ? 1 : 0;
  }
  return d;
}

}  // namespace fiagree
