#include "fiagree/ranking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fiagree/stats.hpp"
#include "fiagree/types.hpp"

namespace fiagree {

void ScoreDistributions::validate() const {
  if (features.size() != scores.size()) {
    throw InvariantError("score distributions: feature/score count mismatch");
  }
  if (features.empty()) throw InvariantError("score distributions: no features");
  const std::size_t k = scores.front().size();
  if (k < 2) throw InvariantError("score distributions: need at least two scores per feature");
  for (const auto& s : scores) {
    if (s.size() != k) throw InvariantError("score distributions: ragged score vectors");
    for (double v : s) {
      if (!std::isfinite(v)) throw InvariantError("score distributions: non-finite score");
    }
  }
  std::set<std::string> unique(features.begin(), features.end());
  if (unique.size() != features.size()) throw InvariantError("score distributions: duplicate feature");
}

int RankList::rank_of(const std::string& feature) const {
  auto it = ranks.find(feature);
  if (it == ranks.end()) throw DataError("rank list has no feature '" + feature + "'");
  return it->second;
}

int RankList::max_rank() const {
  int r = 0;
  for (const auto& [f, rank] : ranks) r = std::max(r, rank);
  return r;
}

std::set<std::string> RankList::feature_set() const {
  std::set<std::string> s;
  for (const auto& [f, r] : ranks) s.insert(f);
  return s;
}

std::vector<std::string> RankList::ordered_features() const {
  std::vector<std::string> out;
  for (const auto& [f, r] : ranks) out.push_back(f);
  std::stable_sort(out.begin(), out.end(),
                   [&](const std::string& a, const std::string& b) { return ranks.at(a) < ranks.at(b); });
  return out;
}

double cohens_d(std::span<const double> a, std::span<const double> b) {
  const double ma = stats::mean(a);
  const double mb = stats::mean(b);
  if (ma == mb) return 0.0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double dof = na + nb - 2.0;
  const double pooled_var =
      dof > 0 ? ((na - 1.0) * stats::variance(a) + (nb - 1.0) * stats::variance(b)) / dof : 0.0;
  if (pooled_var <= 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(ma - mb) / std::sqrt(pooled_var);
}

std::size_t best_scott_knott_cut(std::span<const std::vector<double>> ordered_scores) {
  const std::size_t n = ordered_scores.size();
  if (n < 2) throw InvariantError("scott-knott cut needs at least two features");
  std::vector<double> sums(n), counts(n);
  for (std::size_t i = 0; i < n; ++i) {
    sums[i] = std::accumulate(ordered_scores[i].begin(), ordered_scores[i].end(), 0.0);
    counts[i] = static_cast<double>(ordered_scores[i].size());
  }
  const double total_sum = std::accumulate(sums.begin(), sums.end(), 0.0);
  const double total_n = std::accumulate(counts.begin(), counts.end(), 0.0);
  const double grand = total_sum / total_n;

  std::size_t best = 1;
  double best_ss = -1.0;
  double left_sum = 0.0, left_n = 0.0;
  for (std::size_t cut = 1; cut < n; ++cut) {
    left_sum += sums[cut - 1];
    left_n += counts[cut - 1];
    const double right_n = total_n - left_n;
    const double ml = left_sum / left_n;
    const double mr = (total_sum - left_sum) / right_n;
    const double ss = left_n * (ml - grand) * (ml - grand) + right_n * (mr - grand) * (mr - grand);
    if (ss > best_ss) {
      best_ss = ss;
      best = cut;
    }
  }
  return best;
}

namespace {

void split_groups(std::span<const std::vector<double>> ordered, std::size_t offset, double threshold,
                  std::vector<std::size_t>& group_starts) {
  if (ordered.size() < 2) return;
  const std::size_t cut = best_scott_knott_cut(ordered);
  std::vector<double> left, right;
  for (std::size_t i = 0; i < cut; ++i) left.insert(left.end(), ordered[i].begin(), ordered[i].end());
  for (std::size_t i = cut; i < ordered.size(); ++i) {
    right.insert(right.end(), ordered[i].begin(), ordered[i].end());
  }
  if (cohens_d(left, right) < threshold) return;
  group_starts.push_back(offset + cut);
  split_groups(ordered.subspan(0, cut), offset, threshold, group_starts);
  split_groups(ordered.subspan(cut), offset + cut, threshold, group_starts);
}

}  // namespace

RankList sk_esd(const ScoreDistributions& dists, const SkEsdOptions& options) {
  dists.validate();
  if (!(options.d_threshold > 0.0)) throw UsageError("SK-ESD d_threshold must be positive");

  const std::size_t n = dists.features.size();
  std::vector<std::vector<double>> scores = dists.scores;
  if (options.log_transform) {
    for (auto& s : scores) {
      for (double& v : s) v = std::copysign(std::log1p(std::abs(v)), v);
    }
  }
  std::vector<double> means(n);
  for (std::size_t i = 0; i < n; ++i) means[i] = stats::mean(scores[i]);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (means[a] != means[b]) return means[a] > means[b];
    return dists.features[a] < dists.features[b];
  });

  std::vector<std::vector<double>> ordered;
  ordered.reserve(n);
  for (std::size_t i : order) ordered.push_back(scores[i]);

  std::vector<std::size_t> starts{0};
  split_groups(ordered, 0, options.d_threshold, starts);
  std::sort(starts.begin(), starts.end());

  RankList out;
  std::size_t group = 0;
  for (std::size_t pos = 0; pos < n; ++pos) {
    while (group + 1 < starts.size() && starts[group + 1] <= pos) ++group;
    out.ranks[dists.features[order[pos]]] = static_cast<int>(group + 1);
  }
  return out;
}

std::set<std::string> top_k_features(const RankList& ranks, std::size_t k) {
  if (k < 1) throw UsageError("top-k needs k >= 1");
  std::set<std::string> out;
  for (const auto& [f, r] : ranks.ranks) {
    if (static_cast<std::size_t>(r) <= k) out.insert(f);
  }
  return out;
}

}  // namespace fiagree
