#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fiagree/learners.hpp"
#include "fiagree/rng.hpp"

namespace fiagree {

struct TreeNode {
  int feature = -1;        // -1 marks a leaf
  double threshold = 0.0;  // rows with x[feature] <= threshold go left
  int left = -1;
  int right = -1;
  double value = 0.0;  // leaf output (class-1 fraction, or boosted margin step)
  double count = 0.0;  // training rows reaching the node (with multiplicity)
  double gain = 0.0;   // impurity decrease or loss reduction of the split

  bool is_leaf() const { return feature < 0; }
};

class Tree {
 public:
  std::vector<TreeNode> nodes;

  double predict(RowView x) const;
  std::size_t n_internal() const;
  std::size_t n_leaves() const { return nodes.size() - n_internal(); }

  // Calls visit(leaf_value, required_in, required_out) for every leaf some
  // hybrid of x and reference can reach. A leaf is reached by the hybrid for
  // mask S exactly when required_in is a subset of S and S misses
  // required_out. Branches for which `viable(in, out)` is false are skipped.
  template <typename Viable, typename Visit>
  void reachable_leaves(RowView x, RowView reference, Viable&& viable, Visit&& visit) const {
    walk(0, x, reference, 0, 0, viable, visit);
  }

 private:
  template <typename Viable, typename Visit>
  void walk(int id, RowView x, RowView ref, Mask in, Mask out, Viable& viable, Visit& visit) const {
    const TreeNode& node = nodes[static_cast<std::size_t>(id)];
    if (node.is_leaf()) {
      visit(node.value, in, out);
      return;
    }
    const std::size_t f = static_cast<std::size_t>(node.feature);
    const Mask bit = Mask{1} << f;
    const bool x_left = x[f] <= node.threshold;
    const bool r_left = ref[f] <= node.threshold;
    if (x_left == r_left) {
      walk(x_left ? node.left : node.right, x, ref, in, out, viable, visit);
    } else if (in & bit) {
      walk(x_left ? node.left : node.right, x, ref, in, out, viable, visit);
    } else if (out & bit) {
      walk(r_left ? node.left : node.right, x, ref, in, out, viable, visit);
    } else {
      if (viable(in | bit, out)) walk(x_left ? node.left : node.right, x, ref, in | bit, out, viable, visit);
      if (viable(in, out | bit)) walk(r_left ? node.left : node.right, x, ref, in, out | bit, viable, visit);
    }
  }
};

// Growth controls for classification trees split on Gini impurity.
struct GiniTreeParams {
  std::size_t mtry = 0;        // features tried per node; 0 = all
  std::size_t min_split = 2;   // smallest node that may be split
  std::size_t min_bucket = 1;  // smallest allowed child
  double cp = 0.0;             // a split must cut root-relative impurity by more than cp
};

// Grows a tree on `rows` (repeats allowed, counted with multiplicity).
// Candidate splits are compared by impurity decrease; exact ties go to the
// lower feature index, then the lower threshold.
Tree grow_gini_tree(const Matrix& x, std::span<const int> labels, std::span<const std::size_t> rows,
                    const GiniTreeParams& params, Rng* rng);

struct BoostTreeParams {
  std::size_t max_depth = 6;
  double eta = 0.3;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
};

// Second-order boosting tree on per-row gradients/hessians (all rows used).
Tree grow_boost_tree(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
                     const BoostTreeParams& params);

// Tree ensemble: a single CART tree and random forests average leaf class
// fractions; boosted trees add leaf margins and apply the logistic link.
class TreeEnsemble : public Classifier {
 public:
  enum class Link { mean_probability, logistic_sum };

  TreeEnsemble(LearnerSpec spec, std::vector<std::string> feature_names, std::vector<Tree> trees,
               Link link, double base_margin = 0.0);

  std::size_t n_features() const override { return feature_names_.size(); }
  double predict_row(RowView row) const override;

  void coalition_values(RowView x, RowView reference, std::span<const Mask> masks,
                        std::span<double> out) const override;
  void coalition_table(RowView x, RowView reference, std::span<double> out) const override;
  bool has_reference_shapley() const override { return link_ == Link::mean_probability; }
  void reference_shapley(RowView x, RowView reference, std::span<double> phi) const override;

  std::vector<double> raw_cs_importance(const Dataset& train) const override;

  const std::vector<Tree>& trees() const { return trees_; }
  Link link() const { return link_; }
  double base_margin() const { return base_margin_; }

  // Per-feature split counts and summed split gains over all trees.
  std::vector<double> split_counts() const;
  std::vector<double> split_gains() const;

  // Out-of-bag rows per tree (forests only).
  void set_out_of_bag(std::vector<std::vector<std::size_t>> oob) { oob_ = std::move(oob); }
  const std::vector<std::vector<std::size_t>>& out_of_bag() const { return oob_; }

  // Mean over trees of the increase in out-of-bag misclassification when a
  // feature is permuted within each tree's out-of-bag rows.
  std::vector<double> oob_permutation_importance(const Dataset& train) const;

 private:
  std::vector<Tree> trees_;
  Link link_;
  double base_margin_;
  std::vector<std::vector<std::size_t>> oob_;

  double finish(double aggregate) const;
};

}  // namespace fiagree
