#include "fiagree/agreement.hpp"

#include <algorithm>
#include <cmath>

#include "fiagree/stats.hpp"
#include "fiagree/types.hpp"

namespace fiagree {

void require_same_features(const RankList& a, const RankList& b) {
  const auto fa = a.feature_set();
  const auto fb = b.feature_set();
  if (fa == fb) return;
  std::vector<std::string> diff;
  std::set_symmetric_difference(fa.begin(), fa.end(), fb.begin(), fb.end(), std::back_inserter(diff));
  std::string listed;
  for (const auto& f : diff) listed += (listed.empty() ? "" : ", ") + f;
  throw DataError("rank lists cover different features (symmetric difference: " + listed + ")");
}

TauResult kendall_tau_b(const RankList& a, const RankList& b) {
  require_same_features(a, b);
  std::vector<int> ra, rb;
  for (const auto& [f, r] : a.ranks) {
    ra.push_back(r);
    rb.push_back(b.ranks.at(f));
  }
  long long concordant = 0, discordant = 0, tied_a = 0, tied_b = 0;
  const std::size_t n = ra.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const int da = ra[i] - ra[j];
      const int db = rb[i] - rb[j];
      if (da == 0 && db == 0) continue;
      if (da == 0) {
        ++tied_a;
      } else if (db == 0) {
        ++tied_b;
      } else if ((da > 0) == (db > 0)) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const double cd = static_cast<double>(concordant + discordant);
  const double denom = std::sqrt((cd + static_cast<double>(tied_a)) * (cd + static_cast<double>(tied_b)));
  // A fully tied list has no untied pairs on its side of the denominator.
  const bool degenerate = cd + static_cast<double>(tied_a) == 0.0 || cd + static_cast<double>(tied_b) == 0.0;
  if (degenerate || denom == 0.0) return {0.0, true};
  return {static_cast<double>(concordant - discordant) / denom, false};
}

double kendall_w(std::span<const RankList> lists) {
  const std::size_t m = lists.size();
  if (m < 2) throw UsageError("Kendall's W needs at least two rank lists");
  for (std::size_t i = 1; i < m; ++i) require_same_features(lists[0], lists[i]);
  const std::size_t n = lists[0].ranks.size();
  if (n < 2) throw DataError("Kendall's W needs at least two features");

  std::vector<double> rank_sums(n, 0.0);
  double tie_correction = 0.0;
  for (const auto& list : lists) {
    std::vector<double> raw;
    for (const auto& [f, r] : list.ranks) raw.push_back(static_cast<double>(r));
    const auto mid = stats::midranks(raw);
    for (std::size_t i = 0; i < n; ++i) rank_sums[i] += mid[i];
    std::map<double, double> groups;
    for (double r : raw) groups[r] += 1.0;
    for (const auto& [r, t] : groups) tie_correction += t * t * t - t;
  }
  const double mean_sum = stats::mean(rank_sums);
  double s = 0.0;
  for (double r : rank_sums) s += (r - mean_sum) * (r - mean_sum);
  const double md = static_cast<double>(m);
  const double nd = static_cast<double>(n);
  const double denom = md * md * (nd * nd * nd - nd) - md * tie_correction;
  if (denom <= 0.0) return 0.0;
  return std::clamp(12.0 * s / denom, 0.0, 1.0);
}

double top_k_overlap(std::span<const RankList> lists, std::size_t k) {
  if (lists.size() < 2) throw UsageError("top-k overlap needs at least two rank lists");
  for (std::size_t i = 1; i < lists.size(); ++i) require_same_features(lists[0], lists[i]);
  std::set<std::string> inter = top_k_features(lists[0], k);
  std::set<std::string> uni = inter;
  for (std::size_t i = 1; i < lists.size(); ++i) {
    const auto top = top_k_features(lists[i], k);
    std::set<std::string> next;
    std::set_intersection(inter.begin(), inter.end(), top.begin(), top.end(),
                          std::inserter(next, next.end()));
    inter = std::move(next);
    uni.insert(top.begin(), top.end());
  }
  if (uni.empty()) return 0.0;
  return static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::tau: return "tau";
    case Metric::w: return "w";
    case Metric::top3: return "top3";
    case Metric::top1: return "top1";
  }
  return "?";
}

std::string interpret(Metric metric, double value) {
  const auto out_of_range = [&] {
    return UsageError(std::string(metric_name(metric)) + " value " + std::to_string(value) +
                      " is outside the metric's range");
  };
  if (!std::isfinite(value)) throw out_of_range();
  switch (metric) {
    case Metric::tau:
    case Metric::w: {
      if (metric == Metric::tau && (value < -1.0 || value > 1.0)) throw out_of_range();
      if (metric == Metric::w && (value < 0.0 || value > 1.0)) throw out_of_range();
      const double a = std::abs(value);
      if (a <= 0.3) return "weak";
      if (a <= 0.6) return "moderate";
      return "strong";
    }
    case Metric::top3:
      if (value < 0.0 || value > 1.0) throw out_of_range();
      if (value <= 0.25) return "negligible";
      if (value <= 0.5) return "small";
      if (value <= 0.75) return "medium";
      return "large";
    case Metric::top1:
      if (value < 0.0 || value > 1.0) throw out_of_range();
      return value <= 0.5 ? "low" : "high";
  }
  throw out_of_range();
}

namespace {

void fill_top_k(AgreementReport& r, std::span<const RankList> lists, std::span<const std::size_t> ks) {
  r.top_k[1] = r.top1;
  r.top_k[3] = r.top3;
  for (std::size_t k : ks) {
    if (k == 0) throw UsageError("top-k overlap needs k >= 1");
    if (!r.top_k.count(k)) r.top_k[k] = top_k_overlap(lists, k);
  }
}

}  // namespace

AgreementReport compare_pair(const RankList& a, const RankList& b, std::string dataset,
                             std::string scope, std::string member_a, std::string member_b,
                             std::span<const std::size_t> ks) {
  AgreementReport r;
  r.dataset = std::move(dataset);
  r.scope = std::move(scope);
  r.members = {std::move(member_a), std::move(member_b)};
  const auto tau = kendall_tau_b(a, b);
  r.tau = tau.tau;
  r.tau_degenerate = tau.degenerate;
  const RankList pair[] = {a, b};
  r.top1 = top_k_overlap(pair, 1);
  r.top3 = top_k_overlap(pair, 3);
  fill_top_k(r, pair, ks);
  return r;
}

AgreementReport compare_group(std::span<const RankList> lists, std::string dataset,
                              std::string scope, std::vector<std::string> members,
                              std::span<const std::size_t> ks) {
  AgreementReport r;
  r.dataset = std::move(dataset);
  r.scope = std::move(scope);
  r.members = std::move(members);
  r.w = kendall_w(lists);
  r.top1 = top_k_overlap(lists, 1);
  r.top3 = top_k_overlap(lists, 3);
  fill_top_k(r, lists, ks);
  return r;
}

}  // namespace fiagree
