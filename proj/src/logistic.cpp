#include "fiagree/logistic.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include <Eigen/Cholesky>

#include "fiagree/stats.hpp"

namespace fiagree {

namespace {

double log1pexp(double eta) { return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

void check_shapes(const Matrix& z, std::span<const int> y, std::span<const double> beta) {
  if (static_cast<std::size_t>(z.rows()) != y.size() || static_cast<std::size_t>(z.cols()) != beta.size()) {
    throw UsageError("penalized loss: shape mismatch");
  }
}

}  // namespace

double penalized_loss(const Matrix& z, std::span<const int> y, double intercept,
                      std::span<const double> beta, double lambda, double alpha) {
  check_shapes(z, y, beta);
  const Eigen::Index n = z.rows();
  double nll = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double eta = intercept;
    for (Eigen::Index j = 0; j < z.cols(); ++j) eta += z(i, j) * beta[static_cast<std::size_t>(j)];
    nll += log1pexp(eta) - y[static_cast<std::size_t>(i)] * eta;
  }
  double l2 = 0.0, l1 = 0.0;
  for (double b : beta) {
    l2 += b * b;
    l1 += std::abs(b);
  }
  return nll / static_cast<double>(n) + lambda * (0.5 * (1.0 - alpha) * l2 + alpha * l1);
}

std::vector<double> penalized_gradient(const Matrix& z, std::span<const int> y, double intercept,
                                       std::span<const double> beta, double lambda, double alpha) {
  check_shapes(z, y, beta);
  const Eigen::Index n = z.rows();
  const std::size_t p = beta.size();
  std::vector<double> g(p + 1, 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    double eta = intercept;
    for (Eigen::Index j = 0; j < z.cols(); ++j) eta += z(i, j) * beta[static_cast<std::size_t>(j)];
    const double r = stats::sigmoid(eta) - y[static_cast<std::size_t>(i)];
    g[0] += r;
    for (std::size_t j = 0; j < p; ++j) g[j + 1] += r * z(i, static_cast<Eigen::Index>(j));
  }
  for (double& v : g) v /= static_cast<double>(n);
  for (std::size_t j = 0; j < p; ++j) {
    const double sign = beta[j] > 0 ? 1.0 : (beta[j] < 0 ? -1.0 : 0.0);
    g[j + 1] += lambda * ((1.0 - alpha) * beta[j] + alpha * sign);
  }
  return g;
}

LogisticModel::LogisticModel(LearnerSpec spec, std::vector<std::string> feature_names,
                             std::vector<double> center, std::vector<double> scale, double intercept,
                             std::vector<double> beta, std::vector<double> wald, LogisticFitInfo info)
    : center_(std::move(center)),
      scale_(std::move(scale)),
      intercept_(intercept),
      beta_(std::move(beta)),
      wald_(std::move(wald)),
      info_(info) {
  spec_ = std::move(spec);
  feature_names_ = std::move(feature_names);
}

double LogisticModel::margin(RowView row) const {
  double eta = intercept_;
  for (std::size_t j = 0; j < beta_.size(); ++j) eta += beta_[j] * (row[j] - center_[j]) / scale_[j];
  return eta;
}

double LogisticModel::predict_row(RowView row) const {
  check_row(row);
  return stats::sigmoid(margin(row));
}

void LogisticModel::coalition_values(RowView x, RowView reference, std::span<const Mask> masks,
                                     std::span<double> out) const {
  check_row(x);
  check_row(reference);
  if (n_features() > kMaxMaskFeatures) throw UsageError("coalition queries support at most 64 features");
  const double base = margin(reference);
  std::vector<double> delta(beta_.size());
  for (std::size_t j = 0; j < beta_.size(); ++j) delta[j] = beta_[j] * (x[j] - reference[j]) / scale_[j];
  for (std::size_t k = 0; k < masks.size(); ++k) {
    double eta = base;
    for (std::size_t j = 0; j < delta.size(); ++j) {
      if ((masks[k] >> j) & 1U) eta += delta[j];
    }
    out[k] = stats::sigmoid(eta);
  }
}

void LogisticModel::coalition_table(RowView x, RowView reference, std::span<double> out) const {
  const std::size_t p = n_features();
  if (p > 20) throw UsageError("full coalition tables support at most 20 features");
  check_row(x);
  check_row(reference);
  const std::size_t size = std::size_t{1} << p;
  std::vector<double> eta(size);
  eta[0] = margin(reference);
  for (std::size_t m = 1; m < size; ++m) {
    const std::size_t j = static_cast<std::size_t>(std::countr_zero(m));
    eta[m] = eta[m & (m - 1)] + beta_[j] * (x[j] - reference[j]) / scale_[j];
  }
  for (std::size_t m = 0; m < size; ++m) out[m] = stats::sigmoid(eta[m]);
}

std::vector<double> LogisticModel::raw_cs_importance(const Dataset&) const { return wald_; }

ClassifierPtr fit_logistic(const LearnerSpec& spec, const Dataset& train) {
  const double lambda = spec.param("lambda");
  const double alpha = spec.param("alpha");
  const Eigen::Index n = static_cast<Eigen::Index>(train.n_rows());
  const std::size_t p = train.n_features();
  const double nd = static_cast<double>(n);

  std::vector<double> center(p), scale(p);
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = train.column(j);
    center[j] = stats::mean(col);
    double ss = 0.0;
    for (double v : col) ss += (v - center[j]) * (v - center[j]);
    const double sd = std::sqrt(ss / nd);
    scale[j] = sd > 1e-12 * std::max(1.0, std::abs(center[j])) ? sd : 1.0;
    for (Eigen::Index i = 0; i < n; ++i) z(i, static_cast<Eigen::Index>(j)) = (col[static_cast<std::size_t>(i)] - center[j]) / scale[j];
    if (sd <= 1e-12 * std::max(1.0, std::abs(center[j]))) z.col(static_cast<Eigen::Index>(j)).setZero();
  }
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = train.labels[static_cast<std::size_t>(i)];

  const double ybar = y.mean();
  double b0 = std::log(ybar / (1.0 - ybar));
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  const double l1 = lambda * alpha;
  const double l2 = lambda * (1.0 - alpha);

  auto objective = [&](double a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = (z * b).array() + a;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) nll += log1pexp(eta(i)) - y(i) * eta(i);
    return nll / nd + 0.5 * l2 * b.squaredNorm() + l1 * b.lpNorm<1>();
  };
  auto kkt = [&](double a, const Eigen::VectorXd& b) {
    const Eigen::VectorXd eta = (z * b).array() + a;
    Eigen::VectorXd r(n);
    for (Eigen::Index i = 0; i < n; ++i) r(i) = stats::sigmoid(eta(i)) - y(i);
    double worst = std::abs(r.mean());
    const Eigen::VectorXd g = z.transpose() * r / nd + l2 * b;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      const double v = b(j) != 0.0 ? std::abs(g(j) + l1 * (b(j) > 0 ? 1.0 : -1.0))
                                   : std::max(0.0, std::abs(g(j)) - l1);
      worst = std::max(worst, v);
    }
    return worst;
  };

  LogisticFitInfo info;
  double obj = objective(b0, beta);
  Eigen::VectorXd w(n), work(n), resid(n);
  for (std::size_t it = 0; it < 200; ++it) {
    info.iterations = it + 1;
    info.kkt_violation = kkt(b0, beta);
    if (info.kkt_violation <= LogisticModel::kKktTolerance) {
      info.converged = true;
      break;
    }
    // Quadratic approximation at the current point.
    const Eigen::VectorXd eta = (z * beta).array() + b0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pr = stats::sigmoid(eta(i));
      w(i) = std::max(pr * (1.0 - pr), 1e-5);
      work(i) = eta(i) + (y(i) - pr) / w(i);
    }
    const double wsum = w.sum();
    Eigen::VectorXd xwx(static_cast<Eigen::Index>(p));
    for (Eigen::Index j = 0; j < xwx.size(); ++j) xwx(j) = (z.col(j).array().square() * w.array()).sum() / nd;

    double a = b0;
    Eigen::VectorXd b = beta;
    resid = work - z * b;
    resid.array() -= a;
    for (int sweep = 0; sweep < 5000; ++sweep) {
      double change = 0.0;
      for (Eigen::Index j = 0; j < b.size(); ++j) {
        if (xwx(j) == 0.0) continue;
        const double old = b(j);
        const double rho = (z.col(j).array() * w.array() * resid.array()).sum() / nd + xwx(j) * old;
        const double next = soft_threshold(rho, l1) / (xwx(j) + l2);
        if (next != old) {
          resid -= z.col(j) * (next - old);
          b(j) = next;
          change = std::max(change, xwx(j) * (next - old) * (next - old));
        }
      }
      const double shift = (w.array() * resid.array()).sum() / wsum;
      a += shift;
      resid.array() -= shift;
      change = std::max(change, wsum / nd * shift * shift);
      if (change < 1e-20) break;
    }

    // Step halving keeps the penalised objective from increasing.
    double next_obj = objective(a, b);
    for (int halve = 0; halve < 40 && next_obj > obj; ++halve) {
      a = 0.5 * (a + b0);
      b = 0.5 * (b + beta);
      next_obj = objective(a, b);
    }
    if (next_obj > obj) break;
    const bool stalled = (b - beta).cwiseAbs().maxCoeff() < 1e-14 && std::abs(a - b0) < 1e-14;
    b0 = a;
    beta = b;
    obj = next_obj;
    if (stalled) {
      info.kkt_violation = kkt(b0, beta);
      info.converged = info.kkt_violation <= LogisticModel::kKktTolerance;
      break;
    }
  }

  // Wald statistics from the inverse penalised information (sum scale).
  const std::size_t q = p + 1;
  Eigen::MatrixXd x1(n, static_cast<Eigen::Index>(q));
  x1.col(0).setOnes();
  x1.rightCols(static_cast<Eigen::Index>(p)) = z;
  const Eigen::VectorXd eta = (z * beta).array() + b0;
  Eigen::VectorXd wt(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double pr = stats::sigmoid(eta(i));
    wt(i) = pr * (1.0 - pr);
  }
  Eigen::MatrixXd info_mat = x1.transpose() * wt.asDiagonal() * x1;
  for (std::size_t j = 1; j < q; ++j) info_mat(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += nd * l2;
  const double jitter = 1e-10 * std::max(1.0, info_mat.diagonal().mean());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info_mat);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= jitter) {
    info_mat.diagonal().array() += jitter;
    ldlt.compute(info_mat);
  }
  const Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q)));
  std::vector<double> wald(p, 0.0);
  for (std::size_t j = 0; j < p; ++j) {
    const double var = cov(static_cast<Eigen::Index>(j + 1), static_cast<Eigen::Index>(j + 1));
    if (beta(static_cast<Eigen::Index>(j)) != 0.0 && var > 0.0 && std::isfinite(var)) {
      wald[j] = std::abs(beta(static_cast<Eigen::Index>(j))) / std::sqrt(var);
    }
  }

  std::vector<double> coef(beta.data(), beta.data() + beta.size());
  return std::make_shared<LogisticModel>(spec, train.feature_names, std::move(center), std::move(scale), b0,
                                         std::move(coef), std::move(wald), info);
}

}  // namespace fiagree
