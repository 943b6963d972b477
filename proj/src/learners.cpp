#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fiagree/learners.hpp"
#include "fiagree/logistic.hpp"
#include "fiagree/stats.hpp"
#include "fiagree/tree.hpp"

namespace fiagree {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::string_view kind_name(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::logistic: return "logistic";
    case LearnerKind::cart: return "cart";
    case LearnerKind::random_forest: return "random_forest";
    case LearnerKind::gbt: return "gbt";
  }
  return "?";
}

LearnerKind parse_kind(std::string_view name) {
  const std::string n = lower(name);
  for (LearnerKind k : kAllKinds) {
    if (n == kind_name(k)) return k;
  }
  throw UsageError("unknown classifier '" + std::string(name) +
                   "' (expected logistic, cart, random_forest or gbt)");
}

const std::vector<HyperparameterDef>& hyperparameter_defs(LearnerKind kind) {
  // name, default, admissible [min, max], search [low, high], integer, log, tuned, grid values
  static const std::vector<HyperparameterDef> logistic = {
      {"lambda", 1e-3, 0.0, kInf, 1e-4, 10.0, false, true, true, {}},
      {"alpha", 0.5, 0.0, 1.0, 0.0, 1.0, false, false, true, {0.0, 0.25, 0.5, 0.75, 1.0}},
  };
  static const std::vector<HyperparameterDef> cart = {
      {"cp", 0.01, 0.0, 1.0, 1e-4, 0.2, false, true, true, {}},
      {"min_split", 20, 2, kInf, 20, 20, true, false, false, {}},
      {"min_bucket", 7, 1, kInf, 7, 7, true, false, false, {}},
  };
  // mtry 0 means floor(sqrt(p)); its search range is 1..p.
  static const std::vector<HyperparameterDef> forest = {
      {"mtry", 0, 0, kInf, 1, kInf, true, false, true, {}},
      {"n_trees", 100, 1, kInf, 100, 100, true, false, false, {}},
      {"min_node", 1, 1, kInf, 1, 1, true, false, false, {}},
  };
  static const std::vector<HyperparameterDef> gbt = {
      {"nrounds", 100, 1, 10000, 50, 300, true, false, true, {50, 100, 150, 200, 250, 300}},
      {"max_depth", 6, 1, 20, 1, 6, true, false, true, {}},
      {"eta", 0.3, 1e-6, 1.0, 0.01, 0.3, false, false, true, {}},
      {"lambda", 1.0, 0.0, kInf, 1.0, 1.0, false, false, false, {}},
      {"gamma", 0.0, 0.0, kInf, 0.0, 0.0, false, false, false, {}},
      {"min_child_weight", 1.0, 0.0, kInf, 1.0, 1.0, false, false, false, {}},
  };
  switch (kind) {
    case LearnerKind::logistic: return logistic;
    case LearnerKind::cart: return cart;
    case LearnerKind::random_forest: return forest;
    case LearnerKind::gbt: return gbt;
  }
  throw InvariantError("unknown learner kind");
}

double LearnerSpec::param(std::string_view name) const {
  if (auto it = hyperparameters.find(std::string(name)); it != hyperparameters.end()) return it->second;
  for (const auto& def : hyperparameter_defs(kind)) {
    if (def.name == name) return def.default_value;
  }
  throw UsageError("classifier " + std::string(kind_name(kind)) + " has no hyperparameter '" +
                   std::string(name) + "'");
}

void LearnerSpec::validate(std::optional<std::size_t> n_features) const {
  const auto& defs = hyperparameter_defs(kind);
  for (const auto& [name, value] : hyperparameters) {
    auto it = std::find_if(defs.begin(), defs.end(), [&](const auto& d) { return d.name == name; });
    if (it == defs.end()) {
      throw UsageError("classifier " + std::string(kind_name(kind)) + " has no hyperparameter '" + name + "'");
    }
    if (!std::isfinite(value) || value < it->min_value || value > it->max_value) {
      throw UsageError(std::string(kind_name(kind)) + " hyperparameter " + name + "=" + std::to_string(value) +
                       " is outside its admissible range");
    }
    if (it->integer && value != std::floor(value)) {
      throw UsageError(std::string(kind_name(kind)) + " hyperparameter " + name + " must be an integer");
    }
  }
  if (kind == LearnerKind::random_forest && n_features && param("mtry") > static_cast<double>(*n_features)) {
    throw UsageError("mtry exceeds the number of features");
  }
}

std::string LearnerSpec::describe() const {
  std::ostringstream out;
  out << kind_name(kind) << '(';
  bool first = true;
  for (const auto& def : hyperparameter_defs(kind)) {
    out << (first ? "" : ", ") << def.name << '=' << param(def.name);
    first = false;
  }
  out << ')';
  return out.str();
}

std::string_view method_name(ImportanceMethod m) {
  switch (m) {
    case ImportanceMethod::lrfi: return "LRFI";
    case ImportanceMethod::rfi: return "RFI";
    case ImportanceMethod::rffi: return "RFFI";
    case ImportanceMethod::xgfi: return "XGFI";
    case ImportanceMethod::permutation: return "permutation";
    case ImportanceMethod::shap: return "shap";
  }
  return "?";
}

ImportanceMethod parse_method(std::string_view name) {
  const std::string n = lower(name);
  for (auto m : {ImportanceMethod::lrfi, ImportanceMethod::rfi, ImportanceMethod::rffi, ImportanceMethod::xgfi,
                 ImportanceMethod::permutation, ImportanceMethod::shap}) {
    if (n == lower(method_name(m))) return m;
  }
  throw UsageError("unknown importance method '" + std::string(name) + "'");
}

bool is_classifier_specific(ImportanceMethod m) {
  return m != ImportanceMethod::permutation && m != ImportanceMethod::shap;
}

ImportanceMethod cs_method_for(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::logistic: return ImportanceMethod::lrfi;
    case LearnerKind::cart: return ImportanceMethod::rfi;
    case LearnerKind::random_forest: return ImportanceMethod::rffi;
    case LearnerKind::gbt: return ImportanceMethod::xgfi;
  }
  throw InvariantError("unknown learner kind");
}

double ImportanceScores::value(std::string_view feature) const {
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (features[j] == feature) return values[j];
  }
  throw DataError("no importance score for feature '" + std::string(feature) + "'");
}

std::vector<double> rescale_max_100(std::span<const double> raw) {
  std::vector<double> out(raw.begin(), raw.end());
  if (out.empty()) return out;
  double top = *std::max_element(out.begin(), out.end());
  if (!(top > 0.0)) {
    top = 0.0;
    for (double v : out) top = std::max(top, std::abs(v));
  }
  if (top == 0.0) return out;
  for (double& v : out) v = v / top * 100.0;
  return out;
}

namespace {

void check_trainable(const Dataset& train) {
  const std::size_t pos = train.n_positive();
  if (train.labels.size() != train.n_rows()) throw DataError("label count differs from row count");
  if (pos < 2 || train.n_rows() - pos < 2) {
    throw DataError("training data needs at least two rows of each class (got " + std::to_string(pos) +
                    " positive of " + std::to_string(train.n_rows()) + ")");
  }
  if (train.n_features() == 0) throw DataError("training data has no features");
  if (!train.features.allFinite()) throw DataError("training data contains non-finite feature values");
}

std::size_t resolved_mtry(const LearnerSpec& spec, std::size_t p) {
  const auto m = static_cast<std::size_t>(spec.param("mtry"));
  if (m > 0) return std::min(m, p);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(p)))));
}

ClassifierPtr fit_cart(const LearnerSpec& spec, const Dataset& train) {
  GiniTreeParams params;
  params.cp = spec.param("cp");
  params.min_split = static_cast<std::size_t>(spec.param("min_split"));
  params.min_bucket = static_cast<std::size_t>(spec.param("min_bucket"));
  std::vector<std::size_t> rows(train.n_rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<Tree> trees{grow_gini_tree(train.features, train.labels, rows, params, nullptr)};
  return std::make_shared<TreeEnsemble>(spec, train.feature_names, std::move(trees),
                                        TreeEnsemble::Link::mean_probability);
}

ClassifierPtr fit_forest(const LearnerSpec& spec, const Dataset& train) {
  const std::size_t n = train.n_rows();
  const auto n_trees = static_cast<std::size_t>(spec.param("n_trees"));
  GiniTreeParams params;
  params.mtry = resolved_mtry(spec, train.n_features());
  params.min_split = 2 * static_cast<std::size_t>(spec.param("min_node"));
  params.min_bucket = static_cast<std::size_t>(spec.param("min_node"));
  std::vector<Tree> trees;
  std::vector<std::vector<std::size_t>> oob(n_trees);
  std::vector<std::size_t> rows(n);
  std::vector<char> drawn(n);
  for (std::size_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(spec.seed, 0x7265, t));
    std::fill(drawn.begin(), drawn.end(), 0);
    for (auto& r : rows) {
      r = static_cast<std::size_t>(rng.below(n));
      drawn[r] = 1;
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!drawn[i]) oob[t].push_back(i);
    }
    trees.push_back(grow_gini_tree(train.features, train.labels, rows, params, &rng));
  }
  auto model = std::make_shared<TreeEnsemble>(spec, train.feature_names, std::move(trees),
                                              TreeEnsemble::Link::mean_probability);
  model->set_out_of_bag(std::move(oob));
  return model;
}

ClassifierPtr fit_gbt(const LearnerSpec& spec, const Dataset& train) {
  const std::size_t n = train.n_rows();
  BoostTreeParams params;
  params.max_depth = static_cast<std::size_t>(spec.param("max_depth"));
  params.eta = spec.param("eta");
  params.lambda = spec.param("lambda");
  params.gamma = spec.param("gamma");
  params.min_child_weight = spec.param("min_child_weight");
  const auto rounds = static_cast<std::size_t>(spec.param("nrounds"));

  const double ybar = static_cast<double>(train.n_positive()) / static_cast<double>(n);
  const double base = std::log(ybar / (1.0 - ybar));
  std::vector<double> margin(n, base), grad(n), hess(n);
  std::vector<Tree> trees;
  trees.reserve(rounds);
  for (std::size_t r = 0; r < rounds; ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      const double p = stats::sigmoid(margin[i]);
      grad[i] = p - train.labels[i];
      hess[i] = std::max(p * (1.0 - p), 1e-16);
    }
    Tree tree = grow_boost_tree(train.features, grad, hess, params);
    for (std::size_t i = 0; i < n; ++i) {
      margin[i] += tree.predict(row_view(train.features, static_cast<Eigen::Index>(i)));
    }
    trees.push_back(std::move(tree));
  }
  return std::make_shared<TreeEnsemble>(spec, train.feature_names, std::move(trees),
                                        TreeEnsemble::Link::logistic_sum, base);
}

}  // namespace

ClassifierPtr fit(const LearnerSpec& spec, const Dataset& train) {
  spec.validate(train.n_features());
  check_trainable(train);
  switch (spec.kind) {
    case LearnerKind::logistic: return fit_logistic(spec, train);
    case LearnerKind::cart: return fit_cart(spec, train);
    case LearnerKind::random_forest: return fit_forest(spec, train);
    case LearnerKind::gbt: return fit_gbt(spec, train);
  }
  throw InvariantError("unknown learner kind");
}

ImportanceScores cs_importance(const Classifier& c, const Dataset& train) {
  if (train.feature_names != c.feature_names()) {
    throw DataError("importance data does not match the classifier's training features");
  }
  ImportanceScores s;
  s.method = cs_method_for(c.spec().kind);
  s.features = c.feature_names();
  s.raw = c.raw_cs_importance(train);
  for (double v : s.raw) {
    if (!std::isfinite(v)) throw InvariantError("non-finite classifier-specific importance");
  }
  s.values = rescale_max_100(s.raw);
  return s;
}

}  // namespace fiagree
