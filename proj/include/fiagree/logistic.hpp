#pragma once

#include <span>
#include <vector>

#include "fiagree/learners.hpp"

namespace fiagree {

// Elastic-net penalised mean negative log-likelihood
//   -(1/n) sum_i [y_i eta_i - log(1 + e^eta_i)] + lambda ((1-alpha)/2 |beta|^2 + alpha |beta|_1)
// with eta_i = intercept + z_i . beta. The intercept is not penalised.
double penalized_loss(const Matrix& z, std::span<const int> y, double intercept,
                      std::span<const double> beta, double lambda, double alpha);

// Gradient of penalized_loss: element 0 is d/d intercept, then d/d beta_j.
// The L1 term contributes alpha * lambda * sign(beta_j) (0 at beta_j = 0).
std::vector<double> penalized_gradient(const Matrix& z, std::span<const int> y, double intercept,
                                       std::span<const double> beta, double lambda, double alpha);

struct LogisticFitInfo {
  std::size_t iterations = 0;
  double kkt_violation = 0.0;  // max subgradient residual at the solution
  bool converged = false;
};

// Regularised logistic regression on internally standardised features,
// fitted by penalised IRLS with a coordinate-descent inner solver.
class LogisticModel : public Classifier {
 public:
  static inline constexpr double kKktTolerance = 1e-7;

  LogisticModel(LearnerSpec spec, std::vector<std::string> feature_names, std::vector<double> center,
                std::vector<double> scale, double intercept, std::vector<double> beta,
                std::vector<double> wald, LogisticFitInfo info);

  std::size_t n_features() const override { return feature_names_.size(); }
  double predict_row(RowView row) const override;

  void coalition_values(RowView x, RowView reference, std::span<const Mask> masks,
                        std::span<double> out) const override;
  void coalition_table(RowView x, RowView reference, std::span<double> out) const override;

  // |beta_j / SE_j| on the standardised scale.
  std::vector<double> raw_cs_importance(const Dataset& train) const override;

  double intercept() const { return intercept_; }
  // Coefficients on the standardised scale.
  const std::vector<double>& beta() const { return beta_; }
  const LogisticFitInfo& fit_info() const { return info_; }

 private:
  std::vector<double> center_;
  std::vector<double> scale_;
  double intercept_;
  std::vector<double> beta_;
  std::vector<double> wald_;
  LogisticFitInfo info_;

  double margin(RowView row) const;
};

ClassifierPtr fit_logistic(const LearnerSpec& spec, const Dataset& train);

}  // namespace fiagree
