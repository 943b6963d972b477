#include <gtest/gtest.h>

#include <cmath>

#include "fiagree/explain.hpp"
#include "fiagree/interactions.hpp"
#include "fiagree/stats.hpp"
#include "test_util.hpp"

using namespace fiagree;
using fiagree::testing::FnClassifier;
using fiagree::testing::random_matrix;

namespace {

Matrix corners() {
  Matrix m(4, 2);
  m << -1, -1, -1, 1, 1, -1, 1, 1;
  return m;
}

// H straight from the definition with explicit double loops.
double h_oracle(const Classifier& c, const Matrix& s, std::size_t j) {
  const Eigen::Index n = s.rows();
  std::vector<double> f(static_cast<std::size_t>(n)), pj(f.size()), pr(f.size());
  for (Eigen::Index k = 0; k < n; ++k) {
    f[static_cast<std::size_t>(k)] = c.predict_row(row_view(s, k));
    double a = 0, b = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::vector<double> only(s.row(i).data(), s.row(i).data() + s.cols());
      std::vector<double> rest(s.row(k).data(), s.row(k).data() + s.cols());
      only[j] = s(k, static_cast<Eigen::Index>(j));
      rest[j] = s(i, static_cast<Eigen::Index>(j));
      a += c.predict_row(only);
      b += c.predict_row(rest);
    }
    pj[static_cast<std::size_t>(k)] = a / static_cast<double>(n);
    pr[static_cast<std::size_t>(k)] = b / static_cast<double>(n);
  }
  auto center = [](std::vector<double>& v) {
    const double m = stats::mean(v);
    for (auto& x : v) x -= m;
  };
  center(f);
  center(pj);
  center(pr);
  double num = 0, den = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    num += std::pow(f[i] - pj[i] - pr[i], 2);
    den += f[i] * f[i];
  }
  return den == 0 ? 0.0 : std::sqrt(num / den);
}

}  // namespace

TEST(PartialDependence, SingleFeatureModel) {
  Rng r(1);
  const Matrix data = random_matrix(20, 2, r);
  const FnClassifier f(2, [](RowView x) { return std::tanh(x[0]); });
  const std::vector<std::size_t> s0{0}, s1{1};
  const auto pd0 = partial_dependence(f, data, s0, data);
  const auto pd1 = partial_dependence(f, data, s1, data);
  double mean = 0;
  for (Eigen::Index i = 0; i < 20; ++i) mean += std::tanh(data(i, 0));
  mean /= 20;
  for (Eigen::Index i = 0; i < 20; ++i) {
    EXPECT_NEAR(pd0[static_cast<std::size_t>(i)], std::tanh(data(i, 0)), 1e-15);
    EXPECT_NEAR(pd1[static_cast<std::size_t>(i)], mean, 1e-12);
  }
}

TEST(PartialDependence, ConstantModel) {
  Rng r(2);
  const Matrix data = random_matrix(10, 3, r);
  const FnClassifier f(3, [](RowView) { return 0.25; });
  const std::vector<std::size_t> s{0, 2};
  for (double v : partial_dependence(f, data, s, data)) EXPECT_EQ(v, 0.25);
}

TEST(PartialDependence, TwoRowSum) {
  Matrix data(2, 2);
  data << 1, 10, 3, 20;
  const FnClassifier f(2, [](RowView x) { return x[0] + x[1]; });
  Matrix grid(3, 2);
  grid << 0, 0, 5, 0, -2, 0;
  const std::vector<std::size_t> s{0};
  const auto pd = partial_dependence(f, data, s, grid);
  // mean(x2) = 15
  EXPECT_DOUBLE_EQ(pd[0], 15);
  EXPECT_DOUBLE_EQ(pd[1], 20);
  EXPECT_DOUBLE_EQ(pd[2], 13);
}

TEST(FriedmanH, AdditiveIsZero) {
  const FnClassifier f(2, [](RowView x) { return 3 * x[0] + 2 * x[1]; });
  const auto h = friedman_h_all(f, corners());
  EXPECT_LE(h[0], 1e-6);
  EXPECT_LE(h[1], 1e-6);
}

TEST(FriedmanH, ProductOnCornersIsOne) {
  // f = x1 x2 on {-1,1}^2: both partial dependences vanish, so the residual is f itself.
  const FnClassifier f(2, [](RowView x) { return x[0] * x[1]; });
  const auto h = friedman_h_all(f, corners());
  EXPECT_NEAR(h[0], 1.0, 1e-12);
  EXPECT_NEAR(h[1], 1.0, 1e-12);
  EXPECT_NEAR(friedman_h_direct(f, corners(), 0), 1.0, 1e-12);
  EXPECT_NEAR(h_oracle(f, corners(), 1), 1.0, 1e-12);
}

TEST(FriedmanH, ConstantModelIsZero) {
  const FnClassifier f(2, [](RowView) { return 0.7; });
  const auto h = friedman_h_all(f, corners());
  EXPECT_EQ(h[0], 0.0);
  EXPECT_EQ(h[1], 0.0);
}

TEST(FriedmanH, FastPathMatchesOracle) {
  Rng r(3);
  const Matrix s = random_matrix(15, 4, r);
  const FnClassifier f(4, [](RowView x) { return 1.0 / (1.0 + std::exp(-(x[0] * x[1] + x[2] + 0.3 * x[3] * x[3]))); });
  const auto h = friedman_h_all(f, s);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_NEAR(h[j], h_oracle(f, s, j), 1e-10);
    EXPECT_NEAR(h[j], friedman_h_direct(f, s, j), 1e-10);
  }
}

TEST(FriedmanH, FittedModelsMatchGenericPath) {
  const Dataset d = generate_synthetic({200, true, 4});
  const Matrix s = d.features.topRows(25);
  for (auto kind : kAllKinds) {
    LearnerSpec spec;
    spec.kind = kind;
    if (kind == LearnerKind::random_forest) spec.hyperparameters["n_trees"] = 15;
    const auto m = fit(spec, d);
    const FnClassifier plain(11, [m](RowView x) { return m->predict_row(x); });
    const auto a = friedman_h_all(*m, s), b = friedman_h_all(plain, s);
    for (std::size_t j = 0; j < 11; ++j) EXPECT_NEAR(a[j], b[j], 1e-9) << kind_name(kind);
  }
}

TEST(FriedmanH, ScaleFree) {
  Rng r(4);
  const Matrix s = random_matrix(12, 3, r);
  auto base = [](RowView x) { return x[0] * x[2] + std::sin(x[1]); };
  const FnClassifier f(3, base), g(3, [base](RowView x) { return 0.01 * base(x) + 4.0; });
  const auto a = friedman_h_all(f, s), b = friedman_h_all(g, s);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a[j], b[j], 1e-8);
}

TEST(InteractionProfile, SingleRepeatIsSingleEvaluation) {
  const Dataset d = generate_synthetic({120, true, 5});
  const FnClassifier f(11, [](RowView x) { return stats::sigmoid(x[0] * x[1] + x[2]); });
  const auto prof = interaction_profile(f, d, 1, 9, 40);
  const auto rows = sample_rows(d.n_rows(), 40, derive_seed(9, 0));
  const auto h = friedman_h_all(f, d.select_rows(rows).features);
  EXPECT_EQ(prof.median_h, h);
  EXPECT_EQ(prof.repeats, 1u);
  EXPECT_NEAR(friedman_h(f, d, "x1", derive_seed(9, 0), 40), h[0], 1e-10);
  for (std::size_t j = 0; j < 11; ++j) {
    EXPECT_EQ(prof.flag_low[j], h[j] >= 0.3);
    EXPECT_EQ(prof.flag_high[j], h[j] >= 0.5);
  }
  EXPECT_EQ(prof.count_at_least(0.3), static_cast<std::size_t>(std::count(prof.flag_low.begin(), prof.flag_low.end(), true)));
}

TEST(Synthetic, Defaults) {
  const SyntheticSpec spec;
  const Dataset d = generate_synthetic(spec);
  EXPECT_EQ(d.n_rows(), 1500u);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"x1", "x2", "x3", "x4", "x5", "n1", "n2", "n3", "n4", "n5", "n6"}));
  EXPECT_EQ(synthetic_ground_truth(), (std::vector<std::string>{"x1", "x2", "x3"}));
  const Dataset again = generate_synthetic(spec);
  EXPECT_EQ(d.features, again.features);
  EXPECT_EQ(d.labels, again.labels);
  for (Eigen::Index i = 0; i < 1500; ++i)
    for (Eigen::Index j = 6; j < 9; ++j) {
      EXPECT_GE(d.features(i, j), 0.0);
      EXPECT_LT(d.features(i, j), 1.0);
    }
}

TEST(Synthetic, SignalByHand) {
  SyntheticSpec spec;
  const std::vector<double> x{1, 1, 1, 0, 0};
  EXPECT_EQ(synthetic_signal(spec, x), 35.0);
  spec.with_interactions = true;
  EXPECT_EQ(synthetic_signal(spec, x), 38.0);
  EXPECT_EQ(stats::sigmoid(synthetic_signal(spec, std::vector<double>(5, 0.0))), 0.5);
  EXPECT_NE(synthetic_formula(spec).find("x1*x3 + x2*x3 + x2*x1"), std::string::npos);
}

TEST(Synthetic, LabelRateMatchesProbabilities) {
  const Dataset d = generate_synthetic({4000, false, 6});
  double expected = 0;
  for (Eigen::Index i = 0; i < 4000; ++i) expected += stats::sigmoid(synthetic_signal({}, std::span<const double>(d.features.row(i).data(), 5)));
  EXPECT_NEAR(static_cast<double>(d.n_positive()), expected, 4 * std::sqrt(4000 * 0.25));
}
