#include "fiagree/perf.hpp"

#include <algorithm>
#include <numeric>

#include "fiagree/stats.hpp"
#include "fiagree/types.hpp"

namespace fiagree {

double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvariantError("auc: scores/labels length mismatch");
  const auto ranks = stats::midranks(scores);
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 1) {
      pos_rank_sum += ranks[i];
      ++n_pos;
    }
  }
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) throw DataError("auc: both classes must be present");
  const double np = static_cast<double>(n_pos);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

std::size_t ifa(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvariantError("ifa: scores/labels length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    if (labels[order[pos]] == 1) return pos + 1;
  }
  throw DataError("ifa: no positive rows");
}

GateResult gate(std::span<const PerfRecord> records) {
  if (records.empty()) throw InvariantError("gate: no performance records");
  std::vector<double> aucs, ifas;
  for (const auto& r : records) {
    aucs.push_back(r.auc);
    ifas.push_back(static_cast<double>(r.ifa));
  }
  GateResult g;
  g.median_auc = stats::median(aucs);
  g.median_ifa = stats::median(ifas);
  const bool auc_ok = g.median_auc > kGateMinMedianAuc;
  const bool ifa_ok = g.median_ifa <= kGateMaxMedianIfa;
  g.passed = auc_ok && ifa_ok;
  if (!auc_ok) g.reason = "median AUC " + std::to_string(g.median_auc) + " <= 0.7";
  if (!ifa_ok) {
    if (!g.reason.empty()) g.reason += "; ";
    g.reason += "median IFA " + std::to_string(g.median_ifa) + " > 1";
  }
  return g;
}

}  // namespace fiagree
