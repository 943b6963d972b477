#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fiagree/ranking.hpp"

namespace fiagree {

struct TauResult {
  double tau = 0.0;
  bool degenerate = false;  // a list was fully tied; tau reported as 0
};

// Tie-aware Kendall tau-b. Throws DataError when feature sets differ.
TauResult kendall_tau_b(const RankList& a, const RankList& b);
inline double kendall_tau(const RankList& a, const RankList& b) { return kendall_tau_b(a, b).tau; }

// Kendall's W with tie correction. SK-ESD ranks are dense, so each list is
// first converted to mid-ranks over its own ordering.
double kendall_w(std::span<const RankList> lists);

// |intersection of top-k sets| / |union of top-k sets| over all lists.
double top_k_overlap(std::span<const RankList> lists, std::size_t k);

enum class Metric { tau, w, top3, top1 };

std::string_view metric_name(Metric m);

// Interpretation label: tau and W use weak/moderate/strong on |value|;
// top-3 uses negligible/small/medium/large; top-1 uses low/high.
std::string interpret(Metric metric, double value);

// Agreement between two lists (pair mode) or among several (group mode).
struct AgreementReport {
  std::string dataset;
  std::string scope;                 // classifier name, or a group label
  std::vector<std::string> members;  // compared methods or classifiers
  std::optional<double> tau;         // pair mode
  bool tau_degenerate = false;
  std::optional<double> w;           // group mode
  double top1 = 0.0;
  double top3 = 0.0;
  std::map<std::size_t, double> top_k;  // every requested k, including 1 and 3

  std::size_t m() const { return members.size(); }
};

AgreementReport compare_pair(const RankList& a, const RankList& b, std::string dataset,
                             std::string scope, std::string member_a, std::string member_b,
                             std::span<const std::size_t> ks = {});

AgreementReport compare_group(std::span<const RankList> lists, std::string dataset,
                              std::string scope, std::vector<std::string> members,
                              std::span<const std::size_t> ks = {});

// Throws DataError naming the symmetric difference when feature sets differ.
void require_same_features(const RankList& a, const RankList& b);

}  // namespace fiagree
