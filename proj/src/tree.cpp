#include "fiagree/tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>

#include "fiagree/stats.hpp"

namespace fiagree {

double Tree::predict(RowView x) const {
  std::size_t id = 0;
  while (!nodes[id].is_leaf()) {
    const TreeNode& n = nodes[id];
    id = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
  }
  return nodes[id].value;
}

std::size_t Tree::n_internal() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return !n.is_leaf(); }));
}

namespace {

struct NodeStats {
  double n = 0.0;  // sample count
  double w = 0.0;  // Gini: unused; boosting: hessian sum
  double s = 0.0;  // Gini: positives; boosting: gradient sum

  void add(const NodeStats& o) {
    n += o.n;
    w += o.w;
    s += o.s;
  }
  NodeStats minus(const NodeStats& o) const { return {n - o.n, w - o.w, s - o.s}; }
};

struct Candidate {
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  double threshold = 0.0;
};

// Level-wise exact greedy growth. Each level makes one pass per feature over
// the presorted samples, so a tree costs O(depth * p * n) after sorting.
template <typename Criterion>
Tree grow_levelwise(const Matrix& x, std::span<const std::size_t> sample_rows,
                    std::span<const NodeStats> sample_stats, const Criterion& crit,
                    std::size_t mtry, Rng* rng) {
  const std::size_t p = static_cast<std::size_t>(x.cols());
  const std::size_t n = sample_rows.size();
  auto value_of = [&](std::size_t sample, std::size_t f) {
    return x(static_cast<Eigen::Index>(sample_rows[sample]), static_cast<Eigen::Index>(f));
  };

  std::vector<std::vector<std::uint32_t>> sorted(p);
  for (std::size_t f = 0; f < p; ++f) {
    auto& order = sorted[f];
    order.resize(n);
    std::iota(order.begin(), order.end(), std::uint32_t{0});
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double va = value_of(a, f), vb = value_of(b, f);
      return va < vb || (va == vb && a < b);
    });
  }

  Tree tree;
  NodeStats root;
  for (const auto& st : sample_stats) root.add(st);
  tree.nodes.push_back(TreeNode{});
  tree.nodes[0].count = root.n;

  std::vector<int> slot_of(n, 0);
  std::vector<int> active{0};
  std::vector<NodeStats> totals{root};
  std::vector<int> feature_pool(p);
  std::iota(feature_pool.begin(), feature_pool.end(), 0);

  for (std::size_t depth = 0; !active.empty(); ++depth) {
    const std::size_t slots = active.size();
    std::vector<Candidate> best(slots);
    std::vector<char> splittable(slots);
    std::vector<std::vector<char>> allowed;
    for (std::size_t k = 0; k < slots; ++k) splittable[k] = crit.can_split(totals[k], depth);
    if (mtry > 0 && mtry < p) {
      allowed.assign(slots, std::vector<char>(p, 0));
      for (std::size_t k = 0; k < slots; ++k) {
        if (!splittable[k]) continue;
        for (std::size_t i = 0; i < mtry; ++i) {
          const std::size_t j = i + static_cast<std::size_t>(rng->below(p - i));
          std::swap(feature_pool[i], feature_pool[j]);
          allowed[k][static_cast<std::size_t>(feature_pool[i])] = 1;
        }
      }
    }

    std::vector<NodeStats> running(slots);
    std::vector<double> last(slots);
    std::vector<char> has_last(slots);
    for (std::size_t f = 0; f < p; ++f) {
      std::fill(running.begin(), running.end(), NodeStats{});
      std::fill(has_last.begin(), has_last.end(), 0);
      for (std::uint32_t s : sorted[f]) {
        const int slot_i = slot_of[s];
        if (slot_i < 0) continue;
        const std::size_t slot = static_cast<std::size_t>(slot_i);
        if (!splittable[slot] || (!allowed.empty() && !allowed[slot][f])) continue;
        const double v = value_of(s, f);
        if (has_last[slot] && v > last[slot]) {
          const NodeStats right = totals[slot].minus(running[slot]);
          if (crit.valid(running[slot], right)) {
            const double gain = crit.gain(running[slot], right, totals[slot]);
            if (gain > best[slot].gain) {
              double thr = 0.5 * (last[slot] + v);
              if (!(thr < v)) thr = last[slot];
              best[slot] = {gain, static_cast<int>(f), thr};
            }
          }
        }
        running[slot].add(sample_stats[s]);
        last[slot] = v;
        has_last[slot] = 1;
      }
    }

    // Materialise splits and leaves, then route samples to the next level.
    std::vector<int> next_active;
    std::vector<NodeStats> next_totals;
    std::vector<int> left_slot(slots, -1);
    for (std::size_t k = 0; k < slots; ++k) {
      const int id = active[k];
      if (splittable[k] && best[k].feature >= 0 && crit.accept(best[k].gain, totals[k])) {
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(TreeNode{});
        tree.nodes.push_back(TreeNode{});
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = best[k].feature;
        node.threshold = best[k].threshold;
        node.gain = best[k].gain;
        node.left = left;
        node.right = left + 1;
        left_slot[k] = static_cast<int>(next_active.size());
        next_active.push_back(left);
        next_active.push_back(left + 1);
        next_totals.emplace_back();
        next_totals.emplace_back();
      } else {
        tree.nodes[static_cast<std::size_t>(id)].value = crit.leaf_value(totals[k]);
      }
    }
    for (std::size_t s = 0; s < n; ++s) {
      const int slot_i = slot_of[s];
      if (slot_i < 0) continue;
      const std::size_t slot = static_cast<std::size_t>(slot_i);
      if (left_slot[slot] < 0) {
        slot_of[s] = -1;
        continue;
      }
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(active[slot])];
      const bool go_left = value_of(s, static_cast<std::size_t>(node.feature)) <= node.threshold;
      const int next = left_slot[slot] + (go_left ? 0 : 1);
      slot_of[s] = next;
      next_totals[static_cast<std::size_t>(next)].add(sample_stats[s]);
    }
    for (std::size_t k = 0; k < next_active.size(); ++k) {
      tree.nodes[static_cast<std::size_t>(next_active[k])].count = next_totals[k].n;
    }
    for (auto& order : sorted) {
      std::erase_if(order, [&](std::uint32_t s) { return slot_of[s] < 0; });
    }
    active = std::move(next_active);
    totals = std::move(next_totals);
  }
  return tree;
}

double gini_mass(const NodeStats& st) {
  if (st.n <= 0.0) return 0.0;
  return 2.0 * st.s * (st.n - st.s) / st.n;
}

struct GiniCriterion {
  GiniTreeParams params;
  double root_mass = 0.0;

  bool can_split(const NodeStats& t, std::size_t) const {
    return t.n >= static_cast<double>(params.min_split) && t.s > 0.0 && t.s < t.n;
  }
  bool valid(const NodeStats& l, const NodeStats& r) const {
    return l.n >= static_cast<double>(params.min_bucket) && r.n >= static_cast<double>(params.min_bucket);
  }
  double gain(const NodeStats& l, const NodeStats& r, const NodeStats& t) const {
    return gini_mass(t) - gini_mass(l) - gini_mass(r);
  }
  bool accept(double gain, const NodeStats& t) const {
    if (params.cp > 0.0) return gain > params.cp * root_mass;
    return gain > 1e-12 * std::max(1.0, gini_mass(t));
  }
  double leaf_value(const NodeStats& t) const { return t.n > 0.0 ? t.s / t.n : 0.0; }
};

struct BoostCriterion {
  BoostTreeParams params;

  bool can_split(const NodeStats& t, std::size_t depth) const {
    return depth < params.max_depth && t.n >= 2.0;
  }
  bool valid(const NodeStats& l, const NodeStats& r) const {
    return l.w >= params.min_child_weight && r.w >= params.min_child_weight;
  }
  double score(const NodeStats& st) const { return st.s * st.s / (st.w + params.lambda); }
  double gain(const NodeStats& l, const NodeStats& r, const NodeStats& t) const {
    return 0.5 * (score(l) + score(r) - score(t)) - params.gamma;
  }
  bool accept(double gain, const NodeStats&) const { return gain > 1e-12; }
  double leaf_value(const NodeStats& t) const { return -params.eta * t.s / (t.w + params.lambda); }
};

}  // namespace

Tree grow_gini_tree(const Matrix& x, std::span<const int> labels, std::span<const std::size_t> rows,
                    const GiniTreeParams& params, Rng* rng) {
  std::vector<NodeStats> st(rows.size());
  NodeStats root;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    st[i] = {1.0, 1.0, static_cast<double>(labels[rows[i]])};
    root.add(st[i]);
  }
  const std::size_t p = static_cast<std::size_t>(x.cols());
  const std::size_t mtry = params.mtry == 0 ? p : std::min(params.mtry, p);
  if (mtry < p && rng == nullptr) throw InvariantError("grow_gini_tree: mtry < p needs a random source");
  GiniCriterion crit{params, gini_mass(root)};
  return grow_levelwise(x, rows, st, crit, mtry, rng);
}

Tree grow_boost_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                     const BoostTreeParams& params) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<NodeStats> st(n);
  for (std::size_t i = 0; i < n; ++i) st[i] = {1.0, hess[i], grad[i]};
  BoostCriterion crit{params};
  return grow_levelwise(x, rows, st, crit, 0, nullptr);
}

TreeEnsemble::TreeEnsemble(LearnerSpec spec, std::vector<std::string> feature_names,
                           std::vector<Tree> trees, Link link, double base_margin)
    : trees_(std::move(trees)), link_(link), base_margin_(base_margin) {
  spec_ = std::move(spec);
  feature_names_ = std::move(feature_names);
}

double TreeEnsemble::finish(double aggregate) const {
  if (link_ == Link::mean_probability) return aggregate / static_cast<double>(trees_.size());
  return stats::sigmoid(base_margin_ + aggregate);
}

double TreeEnsemble::predict_row(RowView row) const {
  check_row(row);
  double acc = 0.0;
  for (const auto& t : trees_) acc += t.predict(row);
  return finish(acc);
}

void TreeEnsemble::coalition_values(RowView x, RowView reference, std::span<const Mask> masks,
                                    std::span<double> out) const {
  if (n_features() > kMaxMaskFeatures) {
    Classifier::coalition_values(x, reference, masks, out);
    return;
  }
  check_row(x);
  check_row(reference);
  std::vector<double> acc(masks.size(), 0.0);
  auto compatible = [](Mask in, Mask outside, Mask m) { return (in & ~m) == 0 && (outside & m) == 0; };
  auto viable = [&](Mask in, Mask outside) {
    for (Mask m : masks) {
      if (compatible(in, outside, m)) return true;
    }
    return false;
  };
  auto visit = [&](double value, Mask in, Mask outside) {
    for (std::size_t k = 0; k < masks.size(); ++k) {
      if (compatible(in, outside, masks[k])) acc[k] += value;
    }
  };
  for (const auto& t : trees_) t.reachable_leaves(x, reference, viable, visit);
  for (std::size_t k = 0; k < masks.size(); ++k) out[k] = finish(acc[k]);
}

void TreeEnsemble::coalition_table(RowView x, RowView reference, std::span<double> out) const {
  const std::size_t p = n_features();
  if (p > 20) throw UsageError("full coalition tables support at most 20 features");
  check_row(x);
  check_row(reference);
  const std::size_t size = std::size_t{1} << p;
  // Leaf indicator 1[in ⊆ S, S ∩ out = ∅] = Σ_{T ⊆ out} (-1)^|T| 1[in ∪ T ⊆ S];
  // accumulate the coefficients, then sum over subsets.
  std::vector<double> coef(size, 0.0);
  auto always = [](Mask, Mask) { return true; };
  auto visit = [&](double value, Mask in, Mask outside) {
    Mask t = outside;
    for (;;) {
      const double sign = (std::popcount(t) % 2 == 0) ? 1.0 : -1.0;
      coef[in | t] += sign * value;
      if (t == 0) break;
      t = (t - 1) & outside;
    }
  };
  for (const auto& t : trees_) t.reachable_leaves(x, reference, always, visit);
  for (std::size_t i = 0; i < p; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    for (std::size_t m = 0; m < size; ++m) {
      if (m & bit) coef[m] += coef[m ^ bit];
    }
  }
  for (std::size_t m = 0; m < size; ++m) out[m] = finish(coef[m]);
}

void TreeEnsemble::reference_shapley(RowView x, RowView reference, std::span<double> phi) const {
  if (link_ != Link::mean_probability || n_features() > kMaxMaskFeatures) {
    Classifier::reference_shapley(x, reference, phi);
    return;
  }
  check_row(x);
  check_row(reference);
  static const std::vector<double> factorial = [] {
    std::vector<double> f(kMaxMaskFeatures + 1, 1.0);
    for (std::size_t i = 1; i < f.size(); ++i) f[i] = f[i - 1] * static_cast<double>(i);
    return f;
  }();
  std::fill(phi.begin(), phi.end(), 0.0);
  auto always = [](Mask, Mask) { return true; };
  // A leaf reached iff in ⊆ S and S ∩ out = ∅ is a game whose Shapley values
  // are (a-1)! b! / (a+b)! on `in` and -a! (b-1)! / (a+b)! on `out`.
  auto visit = [&](double value, Mask in, Mask outside) {
    const int a = std::popcount(in);
    const int b = std::popcount(outside);
    if (a + b == 0 || value == 0.0) return;
    const double total = factorial[static_cast<std::size_t>(a + b)];
    if (a > 0) {
      const double w = value * factorial[static_cast<std::size_t>(a - 1)] * factorial[static_cast<std::size_t>(b)] / total;
      for (Mask m = in; m; m &= m - 1) phi[static_cast<std::size_t>(std::countr_zero(m))] += w;
    }
    if (b > 0) {
      const double w = value * factorial[static_cast<std::size_t>(a)] * factorial[static_cast<std::size_t>(b - 1)] / total;
      for (Mask m = outside; m; m &= m - 1) phi[static_cast<std::size_t>(std::countr_zero(m))] -= w;
    }
  };
  for (const auto& t : trees_) t.reachable_leaves(x, reference, always, visit);
  const double scale = 1.0 / static_cast<double>(trees_.size());
  for (double& v : phi) v *= scale;
}

std::vector<double> TreeEnsemble::split_counts() const {
  std::vector<double> counts(n_features(), 0.0);
  for (const auto& t : trees_) {
    for (const auto& node : t.nodes) {
      if (!node.is_leaf()) counts[static_cast<std::size_t>(node.feature)] += 1.0;
    }
  }
  return counts;
}

std::vector<double> TreeEnsemble::split_gains() const {
  std::vector<double> gains(n_features(), 0.0);
  for (const auto& t : trees_) {
    for (const auto& node : t.nodes) {
      if (!node.is_leaf()) gains[static_cast<std::size_t>(node.feature)] += node.gain;
    }
  }
  return gains;
}

std::vector<double> TreeEnsemble::oob_permutation_importance(const Dataset& train) const {
  if (oob_.size() != trees_.size()) {
    throw UsageError("forest importance needs out-of-bag bookkeeping, which this model lacks");
  }
  const std::size_t p = n_features();
  std::vector<double> total(p, 0.0);
  std::size_t used = 0;
  std::vector<double> row(p);
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const auto& oob = oob_[t];
    if (oob.empty()) continue;
    for (std::size_t r : oob) {
      if (r >= train.n_rows()) throw DataError("out-of-bag row outside the training data");
    }
    const Tree& tree = trees_[t];
    auto error_with = [&](std::size_t feature, const std::vector<double>* replacement) {
      std::size_t wrong = 0;
      for (std::size_t k = 0; k < oob.size(); ++k) {
        const auto src = row_view(train.features, static_cast<Eigen::Index>(oob[k]));
        std::copy(src.begin(), src.end(), row.begin());
        if (replacement) row[feature] = (*replacement)[k];
        const int predicted = tree.predict(row) > 0.5 ? 1 : 0;
        wrong += predicted != train.labels[oob[k]];
      }
      return static_cast<double>(wrong) / static_cast<double>(oob.size());
    };
    const double base = error_with(0, nullptr);
    for (std::size_t j = 0; j < p; ++j) {
      std::vector<double> values(oob.size());
      for (std::size_t k = 0; k < oob.size(); ++k) {
        values[k] = train.features(static_cast<Eigen::Index>(oob[k]), static_cast<Eigen::Index>(j));
      }
      Rng rng(derive_seed(spec_.seed ^ 0x5eed0fb0a7ULL, t, j));
      rng.shuffle(values);
      total[j] += error_with(j, &values) - base;
    }
    ++used;
  }
  if (used > 0) {
    for (double& v : total) v /= static_cast<double>(used);
  }
  return total;
}

std::vector<double> TreeEnsemble::raw_cs_importance(const Dataset& train) const {
  switch (spec_.kind) {
    case LearnerKind::cart: {
      auto gains = split_gains();
      const double n = trees_.empty() ? 1.0 : trees_.front().nodes.front().count;
      for (double& g : gains) g /= n;
      return gains;
    }
    case LearnerKind::random_forest:
      return oob_permutation_importance(train);
    case LearnerKind::gbt:
      return split_counts();
    case LearnerKind::logistic:
      break;
  }
  throw InvariantError("tree ensemble with a non-tree learner kind");
}

}  // namespace fiagree
