#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace fiagree {

// Bootstrap importance scores for one (dataset, classifier, method):
// scores[f] holds the k per-iteration values of features[f].
struct ScoreDistributions {
  std::vector<std::string> features;
  std::vector<std::vector<double>> scores;

  void validate() const;
};

// Feature importance ranks; 1 is most important and ties share a rank.
struct RankList {
  std::string dataset;
  std::string classifier;
  std::string method;
  std::map<std::string, int> ranks;

  int rank_of(const std::string& feature) const;
  int max_rank() const;
  std::set<std::string> feature_set() const;
  // Features ordered by rank, then name.
  std::vector<std::string> ordered_features() const;
};

struct SkEsdOptions {
  double d_threshold = 0.2;    // Cohen's d below this merges two groups
  bool log_transform = false;  // sign(x) * log1p(|x|) before clustering
};

// Scott-Knott clustering with an effect-size stopping rule: the mean-ordered
// feature sequence is split recursively at the cut maximising the
// between-group sum of squares, and a split is kept only when Cohen's d of
// the two groups' pooled scores reaches the threshold.
RankList sk_esd(const ScoreDistributions& dists, const SkEsdOptions& options = {});

// Index of the first cut of [0, n) maximising the between-group sum of
// squares, given features already in mean-descending order. Exposed for tests.
std::size_t best_scott_knott_cut(std::span<const std::vector<double>> ordered_scores);

// Pooled-standard-deviation Cohen's d (absolute). Equal means give 0; zero
// pooled sd with unequal means gives +infinity.
double cohens_d(std::span<const double> a, std::span<const double> b);

// Every feature whose rank is <= k, so ties can make the set larger than k.
std::set<std::string> top_k_features(const RankList& ranks, std::size_t k);

}  // namespace fiagree
