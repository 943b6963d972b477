#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/QR>

#include "fiagree/data.hpp"
#include "fiagree/stats.hpp"

namespace fiagree {

RedundancyResult spearman_redundancy_filter(const Dataset& d, double rho_threshold,
                                            double vif_threshold) {
  if (!(rho_threshold > 0.0 && rho_threshold <= 1.0)) {
    throw UsageError("rho_threshold must lie in (0, 1]");
  }
  if (!(vif_threshold > 1.0)) throw UsageError("vif_threshold must exceed 1");

  const std::size_t p = d.n_features();
  std::vector<std::vector<double>> ranks(p);
  for (std::size_t j = 0; j < p; ++j) ranks[j] = stats::midranks(d.column(j));
  std::vector<std::vector<double>> rho(p, std::vector<double>(p, 1.0));
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) {
      rho[a][b] = rho[b][a] = std::abs(stats::pearson(ranks[a], ranks[b]));
    }
  }

  std::vector<bool> alive(p, true);
  std::vector<std::string> removed;

  // Stage 1: pairwise rank correlation.
  for (;;) {
    double worst = -1.0;
    std::size_t wa = 0, wb = 0;
    for (std::size_t a = 0; a < p; ++a) {
      if (!alive[a]) continue;
      for (std::size_t b = a + 1; b < p; ++b) {
        if (alive[b] && rho[a][b] > worst) {
          worst = rho[a][b];
          wa = a;
          wb = b;
        }
      }
    }
    if (worst < rho_threshold) break;
    auto mean_abs = [&](std::size_t j) {
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t o = 0; o < p; ++o) {
        if (o != j && alive[o]) {
          sum += rho[j][o];
          ++count;
        }
      }
      return count == 0 ? 0.0 : sum / static_cast<double>(count);
    };
    // Ties go to the later column (wb).
    const std::size_t drop = mean_abs(wa) > mean_abs(wb) ? wa : wb;
    alive[drop] = false;
    removed.push_back(d.feature_names[drop]);
  }

  // Stage 2: variance inflation.
  for (;;) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < p; ++j) {
      if (alive[j]) cols.push_back(j);
    }
    if (cols.size() < 2) break;
    Matrix sub(d.features.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
      sub.col(static_cast<Eigen::Index>(k)) = d.features.col(static_cast<Eigen::Index>(cols[k]));
    }
    const auto vif = variance_inflation_factors(sub);
    std::size_t arg = 0;
    for (std::size_t k = 1; k < vif.size(); ++k) {
      if (vif[k] > vif[arg]) arg = k;
    }
    if (vif[arg] < vif_threshold) break;
    alive[cols[arg]] = false;
    removed.push_back(d.feature_names[cols[arg]]);
  }

  std::vector<std::string> kept;
  for (std::size_t j = 0; j < p; ++j) {
    if (alive[j]) kept.push_back(d.feature_names[j]);
  }
  if (kept.size() < 2) {
    throw InsufficientFeaturesError(
        d.name + ": correlation/redundancy filter left " + std::to_string(kept.size()) +
            " feature(s); at least two are needed for agreement analysis",
        kept);
  }
  return {d.select_features(kept), std::move(removed)};
}

std::vector<double> variance_inflation_factors(const Matrix& x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index p = x.cols();
  std::vector<double> vif(static_cast<std::size_t>(p), 1.0);
  if (p < 2) return vif;
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd target = x.col(j);
    const double centered_ss = (target.array() - target.mean()).square().sum();
    const bool constant = (target.array() == target(0)).all();
    if (constant || centered_ss <= 0.0) {
      vif[static_cast<std::size_t>(j)] = std::numeric_limits<double>::infinity();
      continue;
    }
    Eigen::MatrixXd design(n, p);
    design.col(0).setOnes();
    Eigen::Index c = 1;
    for (Eigen::Index k = 0; k < p; ++k) {
      if (k != j) design.col(c++) = x.col(k);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    const Eigen::VectorXd beta = qr.solve(target);
    const double rss = (target - design * beta).squaredNorm();
    const double unexplained = rss / centered_ss;
    vif[static_cast<std::size_t>(j)] =
        unexplained <= 1e-12 ? std::numeric_limits<double>::infinity() : 1.0 / unexplained;
  }
  return vif;
}

CfsScorer::CfsScorer(const Dataset& d) {
  const std::size_t p = d.n_features();
  std::vector<double> y(d.labels.begin(), d.labels.end());
  std::vector<std::vector<double>> cols(p);
  for (std::size_t j = 0; j < p; ++j) cols[j] = d.column(j);
  label_corr_.resize(p);
  feature_corr_.assign(p, std::vector<double>(p, 1.0));
  for (std::size_t j = 0; j < p; ++j) {
    label_corr_[j] = std::abs(stats::pearson(cols[j], y));
    for (std::size_t k = j + 1; k < p; ++k) {
      feature_corr_[j][k] = feature_corr_[k][j] = std::abs(stats::pearson(cols[j], cols[k]));
    }
  }
}

double CfsScorer::merit(std::span<const std::size_t> subset) const {
  const std::size_t k = subset.size();
  if (k == 0) return 0.0;
  double cf = 0.0;
  for (std::size_t j : subset) cf += label_corr_[j];
  double ff = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) ff += feature_corr_[subset[a]][subset[b]];
  }
  const double kd = static_cast<double>(k);
  const double mean_cf = cf / kd;
  const double mean_ff = k > 1 ? ff / (kd * (kd - 1.0) / 2.0) : 0.0;
  return kd * mean_cf / std::sqrt(kd + kd * (kd - 1.0) * mean_ff);
}

double cfs_merit(const Dataset& d, std::span<const std::size_t> subset) {
  return CfsScorer(d).merit(subset);
}

namespace {

using Subset = std::vector<std::size_t>;

struct Candidate {
  double merit;
  Subset subset;
};

// Higher merit first; then smaller, then lexicographically smaller subsets.
bool better(const Candidate& a, const Candidate& b) {
  if (a.merit != b.merit) return a.merit > b.merit;
  if (a.subset.size() != b.subset.size()) return a.subset.size() < b.subset.size();
  return a.subset < b.subset;
}

// Merits within rounding of each other count as equal, so a subset must gain
// more than that to replace the incumbent (exact duplicates tie in theory).
bool improves(const Candidate& child, const Candidate& best) {
  const double tol = 1e-12 * std::max(1.0, std::abs(best.merit));
  if (child.merit > best.merit + tol) return true;
  if (child.merit < best.merit - tol) return false;
  if (child.subset.size() != best.subset.size()) return child.subset.size() < best.subset.size();
  return child.subset < best.subset;
}

struct BetterFirst {
  bool operator()(const Candidate& a, const Candidate& b) const { return better(a, b); }
};

}  // namespace

std::vector<std::size_t> cfs_search(const Dataset& d, std::size_t max_stale) {
  if (max_stale < 1) throw UsageError("max_stale must be at least 1");
  const CfsScorer scorer(d);
  const std::size_t p = d.n_features();

  std::set<Candidate, BetterFirst> open;
  std::set<Subset> visited;
  Candidate best{0.0, {}};
  open.insert(best);
  visited.insert({});
  std::size_t stale = 0;

  while (!open.empty()) {
    const Candidate current = *open.begin();
    open.erase(open.begin());
    bool improved = false;
    for (std::size_t f = 0; f < p; ++f) {
      if (std::binary_search(current.subset.begin(), current.subset.end(), f)) continue;
      Subset next = current.subset;
      next.insert(std::upper_bound(next.begin(), next.end(), f), f);
      if (!visited.insert(next).second) continue;
      Candidate child{scorer.merit(next), std::move(next)};
      if (improves(child, best)) {
        best = child;
        improved = true;
      }
      open.insert(std::move(child));
    }
    if (improved) {
      stale = 0;
    } else if (++stale >= max_stale) {
      break;
    }
  }
  return best.subset;
}

CfsResult cfs_select(const Dataset& d, std::size_t max_stale) {
  if (d.n_features() < 2) throw DataError("cfs_select needs at least two features");
  const auto chosen = cfs_search(d, max_stale);
  std::vector<std::string> names;
  for (std::size_t j : chosen) names.push_back(d.feature_names[j]);
  if (names.size() < 2) {
    throw InsufficientFeaturesError(d.name + ": CFS kept " + std::to_string(names.size()) +
                                        " feature(s); at least two are needed",
                                    names);
  }
  return {d.select_features(names), names};
}

}  // namespace fiagree
