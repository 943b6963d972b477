#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "fiagree/logistic.hpp"
#include "fiagree/perf.hpp"
#include "fiagree/stats.hpp"
#include "fiagree/tree.hpp"
#include "test_util.hpp"

using namespace fiagree;
using fiagree::testing::logistic_toy;
using fiagree::testing::random_matrix;

namespace {

LearnerSpec spec_of(LearnerKind kind, std::map<std::string, double> hp = {}, std::uint64_t seed = 1) {
  LearnerSpec s;
  s.kind = kind;
  s.hyperparameters = std::move(hp);
  s.seed = seed;
  return s;
}

// x1 splits 10 rows into (4 pos, 1 neg) and (1 pos, 4 neg); x2 and x3 are constant.
Dataset gini_toy() {
  Dataset d;
  d.features = Matrix::Zero(10, 3);
  const int y[10] = {1, 1, 1, 1, 0, 1, 0, 0, 0, 0};
  for (int i = 0; i < 10; ++i) {
    d.features(i, 0) = i;
    d.features(i, 1) = 2.0;
    d.features(i, 2) = -1.0;
    d.labels.push_back(y[i]);
  }
  d.feature_names = {"x1", "x2", "x3"};
  d.name = "gini";
  return d;
}

}  // namespace

TEST(Hyperparameters, ValidateNamesAndRanges) {
  EXPECT_NO_THROW(spec_of(LearnerKind::cart, {{"cp", 0.1}}).validate());
  EXPECT_THROW(spec_of(LearnerKind::cart, {{"mtry", 2}}).validate(), UsageError);
  EXPECT_THROW(spec_of(LearnerKind::cart, {{"cp", 2.0}}).validate(), UsageError);
  EXPECT_THROW(spec_of(LearnerKind::random_forest, {{"mtry", 2.5}}).validate(), UsageError);
  EXPECT_THROW(spec_of(LearnerKind::random_forest, {{"mtry", 5}}).validate(3), UsageError);
  EXPECT_EQ(parse_kind("GBT"), LearnerKind::gbt);
  EXPECT_THROW(parse_kind("svm"), UsageError);
  EXPECT_EQ(spec_of(LearnerKind::gbt).param("eta"), 0.3);
}

TEST(Rescale, Rules) {
  EXPECT_EQ(rescale_max_100(std::vector<double>{8, 4, 0}), (std::vector<double>{100, 50, 0}));
  EXPECT_EQ(rescale_max_100(std::vector<double>{0, 0}), (std::vector<double>{0, 0}));
  const auto neg = rescale_max_100(std::vector<double>{-2, -4});
  EXPECT_DOUBLE_EQ(neg[0], -50);
  EXPECT_DOUBLE_EQ(neg[1], -100);
}

TEST(Logistic, GradientMatchesFiniteDifferences) {
  Rng r(1);
  const Matrix z = random_matrix(40, 4, r);
  std::vector<int> y(40);
  for (auto& v : y) v = static_cast<int>(r.below(2));
  for (int t = 0; t < 20; ++t) {
    const double lambda = std::exp(r.uniform(-5, 1)), alpha = r.uniform();
    std::vector<double> beta(4);
    for (auto& b : beta) b = r.uniform(-2, 2);
    const double b0 = r.uniform(-1, 1);
    const auto g = penalized_gradient(z, y, b0, beta, lambda, alpha);
    const double h = 1e-6;
    for (std::size_t k = 0; k < 5; ++k) {
      auto bp = beta, bm = beta;
      double ip = b0, im = b0;
      if (k == 0) {
        ip += h;
        im -= h;
      } else {
        bp[k - 1] += h;
        bm[k - 1] -= h;
      }
      const double fd = (penalized_loss(z, y, ip, bp, lambda, alpha) - penalized_loss(z, y, im, bm, lambda, alpha)) / (2 * h);
      EXPECT_LE(std::abs(fd - g[k]), 1e-4 * std::max(1.0, std::abs(g[k]))) << "point " << t << " coord " << k;
    }
  }
}

TEST(Logistic, SeparableTrainingAucOne) {
  Dataset d;
  d.features = Matrix(20, 2);
  for (int i = 0; i < 20; ++i) {
    d.features(i, 0) = i < 10 ? -1.0 - i * 0.1 : 1.0 + i * 0.1;
    d.features(i, 1) = std::sin(i);
    d.labels.push_back(i >= 10);
  }
  d.feature_names = {"a", "b"};
  const auto m = fit(spec_of(LearnerKind::logistic), d);
  EXPECT_EQ(auc(m->predict_proba(d.features), d.labels), 1.0);
}

TEST(Logistic, ConvergesToKktTolerance) {
  const Dataset d = logistic_toy(300, 5, {1.5, -1.0}, 2);
  for (double alpha : {0.0, 0.5, 1.0}) {
    const auto m = fit(spec_of(LearnerKind::logistic, {{"lambda", 0.01}, {"alpha", alpha}}), d);
    const auto& lm = dynamic_cast<const LogisticModel&>(*m);
    EXPECT_TRUE(lm.fit_info().converged);
    EXPECT_LE(lm.fit_info().kkt_violation, LogisticModel::kKktTolerance);
  }
}

TEST(Logistic, ZeroCoefficientsGiveBaseRate) {
  const Dataset d = logistic_toy(200, 3, {0.3}, 3);
  const auto m = fit(spec_of(LearnerKind::logistic, {{"lambda", 10.0}, {"alpha", 1.0}}), d);
  const auto& lm = dynamic_cast<const LogisticModel&>(*m);
  for (double b : lm.beta()) EXPECT_EQ(b, 0.0);
  const double rate = static_cast<double>(d.n_positive()) / static_cast<double>(d.n_rows());
  for (double p : m->predict_proba(d.features)) {
    EXPECT_DOUBLE_EQ(p, stats::sigmoid(lm.intercept()));
    EXPECT_NEAR(p, rate, 1e-6);
  }
}

TEST(Logistic, DominantCoefficientRanksFirst) {
  const Dataset d = logistic_toy(500, 2, {5.0, 0.0}, 4);
  const auto m = fit(spec_of(LearnerKind::logistic), d);
  const auto s = cs_importance(*m, d);
  EXPECT_EQ(s.method, ImportanceMethod::lrfi);
  EXPECT_EQ(s.value("x1"), 100.0);
  EXPECT_LT(s.value("x2"), s.value("x1"));
}

TEST(Cart, MaximalPruningSingleLeaf) {
  const Dataset d = logistic_toy(200, 3, {2.0}, 5);
  const auto m = fit(spec_of(LearnerKind::cart, {{"cp", 1.0}}), d);
  const auto& te = dynamic_cast<const TreeEnsemble&>(*m);
  ASSERT_EQ(te.trees().size(), 1u);
  EXPECT_EQ(te.trees()[0].nodes.size(), 1u);
  const double rate = static_cast<double>(d.n_positive()) / 200.0;
  for (double p : m->predict_proba(d.features)) EXPECT_DOUBLE_EQ(p, rate);
}

TEST(Cart, GiniDecreaseToy) {
  const Dataset d = gini_toy();
  const auto m = fit(spec_of(LearnerKind::cart, {{"cp", 0.01}, {"min_split", 10}, {"min_bucket", 5}}), d);
  const auto raw = m->raw_cs_importance(d);
  // Root Gini 0.5, children 0.32 each: decrease 0.18.
  EXPECT_NEAR(raw[0], 0.18, 1e-12);
  EXPECT_EQ(raw[1], 0.0);
  EXPECT_EQ(raw[2], 0.0);
  const auto s = cs_importance(*m, d);
  EXPECT_EQ(s.values, (std::vector<double>{100, 0, 0}));
}

TEST(Cart, FullyGrownLeavesAreClassFractions) {
  const Dataset d = logistic_toy(80, 2, {1.0}, 6);
  const auto m = fit(spec_of(LearnerKind::cart, {{"cp", 0.0}, {"min_split", 2}, {"min_bucket", 1}}), d);
  const auto p = m->predict_proba(d.features);
  for (std::size_t i = 0; i < d.n_rows(); ++i) EXPECT_EQ(p[i], d.labels[i]);
  EXPECT_TRUE(m->predict_proba(Matrix(0, 2)).empty());
  EXPECT_THROW(m->predict_proba(Matrix::Zero(2, 3)), DataError);
}

TEST(Gbt, SplitCountsSumToInternalNodes) {
  const Dataset d = logistic_toy(200, 4, {2.0, 1.0}, 7);
  const auto m = fit(spec_of(LearnerKind::gbt, {{"nrounds", 20}, {"max_depth", 3}}), d);
  const auto& te = dynamic_cast<const TreeEnsemble&>(*m);
  std::size_t internal = 0;
  for (const auto& t : te.trees()) internal += t.n_internal();
  const auto counts = te.split_counts();
  EXPECT_EQ(std::accumulate(counts.begin(), counts.end(), 0.0), static_cast<double>(internal));
  EXPECT_EQ(te.trees().size(), 20u);
}

TEST(Gbt, UnusedFeatureScoresZero) {
  Dataset d = logistic_toy(200, 3, {2.0, 1.0}, 8);
  d.features.col(2).setConstant(1.0);
  for (auto kind : {LearnerKind::cart, LearnerKind::random_forest, LearnerKind::gbt}) {
    const auto m = fit(spec_of(kind), d);
    EXPECT_EQ(cs_importance(*m, d).value("x3"), 0.0) << kind_name(kind);
  }
}

TEST(Forest, OutOfBagBookkeeping) {
  const Dataset d = logistic_toy(300, 4, {2.0}, 9);
  const auto m = fit(spec_of(LearnerKind::random_forest, {{"n_trees", 30}}), d);
  const auto& te = dynamic_cast<const TreeEnsemble&>(*m);
  ASSERT_EQ(te.out_of_bag().size(), 30u);
  double frac = 0;
  for (const auto& o : te.out_of_bag()) frac += static_cast<double>(o.size()) / 300.0;
  EXPECT_NEAR(frac / 30, 0.368, 0.03);
  const TreeEnsemble bare(te.spec(), te.feature_names(), te.trees(), TreeEnsemble::Link::mean_probability);
  EXPECT_THROW(bare.raw_cs_importance(d), UsageError);
}

TEST(Learners, DeterministicPredictions) {
  const Dataset d = logistic_toy(200, 4, {1.0, -1.0}, 10);
  for (auto kind : kAllKinds) {
    const auto a = fit(spec_of(kind, {}, 77), d)->predict_proba(d.features);
    const auto b = fit(spec_of(kind, {}, 77), d)->predict_proba(d.features);
    EXPECT_EQ(a, b) << kind_name(kind);
    for (double p : a) {
      EXPECT_GE(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
}

TEST(Learners, RejectBadTrainingData) {
  Dataset d = logistic_toy(50, 3, {1.0}, 11);
  Dataset one = d;
  std::fill(one.labels.begin(), one.labels.end(), 0);
  one.labels[0] = 1;
  Dataset nan = d;
  nan.features(3, 1) = std::nan("");
  for (auto kind : kAllKinds) {
    EXPECT_THROW(fit(spec_of(kind), one), DataError);
    EXPECT_THROW(fit(spec_of(kind), nan), DataError);
  }
}

TEST(Learners, NoiseLabelsNearChance) {
  for (auto kind : kAllKinds) {
    double total = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Dataset tr = logistic_toy(150, 4, {}, 100 + seed);
      Dataset te = logistic_toy(150, 4, {}, 200 + seed);
      std::map<std::string, double> hp;
      if (kind == LearnerKind::random_forest) hp["n_trees"] = 25;
      const auto m = fit(spec_of(kind, hp, seed), tr);
      total += auc(m->predict_proba(te.features), te.labels);
    }
    EXPECT_NEAR(total / 20, 0.5, 0.1) << kind_name(kind);
  }
}

TEST(Tuning, BudgetOneReturnsDrawnCandidate) {
  const Dataset d = logistic_toy(120, 3, {1.0}, 12);
  TuneOptions o;
  o.budget = 1;
  o.seed = 5;
  Rng r(derive_seed(5, 0));
  const auto drawn = draw_candidate(LearnerKind::gbt, 3, r);
  const auto got = tune_random_search(LearnerKind::gbt, d, o, 99);
  EXPECT_EQ(got.hyperparameters, drawn.hyperparameters);
  EXPECT_EQ(got.seed, 99u);
}

TEST(Tuning, PicksBestCandidateByCrossValidation) {
  const Dataset d = logistic_toy(200, 3, {2.0, 1.0}, 13);
  TuneOptions o;
  o.budget = 6;
  o.seed = 21;
  TuneTrace trace;
  const auto got = tune_random_search(LearnerKind::cart, d, o, 0, &trace);
  ASSERT_EQ(trace.candidates.size(), 6u);
  std::size_t best = 0;
  for (std::size_t i = 0; i < 6; ++i) {
    const double a = cross_validated_auc(trace.candidates[i], d, o.folds, derive_seed(o.seed, 1));
    EXPECT_EQ(a, trace.cv_auc[i]);
    if (a > trace.cv_auc[best]) best = i;
  }
  EXPECT_EQ(trace.chosen, best);
  EXPECT_EQ(got.hyperparameters, trace.candidates[best].hyperparameters);
  EXPECT_EQ(tune_random_search(LearnerKind::cart, d, o).hyperparameters, got.hyperparameters);
}

TEST(Tuning, StratifiedFoldsBalanced) {
  std::vector<int> y(30, 0);
  for (int i = 0; i < 9; ++i) y[static_cast<std::size_t>(i)] = 1;
  const auto f = stratified_folds(y, 3, 4);
  for (std::size_t k = 0; k < 3; ++k) {
    int pos = 0, all = 0;
    for (std::size_t i = 0; i < 30; ++i)
      if (f[i] == k) {
        ++all;
        pos += y[i];
      }
    EXPECT_EQ(pos, 3);
    EXPECT_EQ(all, 10);
  }
}
