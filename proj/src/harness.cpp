#include "fiagree/harness.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include "fiagree/explain.hpp"
#include "fiagree/stats.hpp"

namespace fiagree {

std::string_view preprocessing_name(Preprocessing p) {
  return p == Preprocessing::autospearman_only ? "autospearman_only" : "autospearman_then_cfs";
}

Preprocessing parse_preprocessing(std::string_view name) {
  if (name == "autospearman_only") return Preprocessing::autospearman_only;
  if (name == "autospearman_then_cfs") return Preprocessing::autospearman_then_cfs;
  throw UsageError("unknown preprocessing '" + std::string(name) +
                   "' (expected autospearman_only or autospearman_then_cfs)");
}

std::string_view family_name(MethodFamily m) {
  switch (m) {
    case MethodFamily::cs: return "cs";
    case MethodFamily::permutation: return "permutation";
    case MethodFamily::shap: return "shap";
  }
  return "?";
}

MethodFamily parse_family(std::string_view name) {
  for (auto m : {MethodFamily::cs, MethodFamily::permutation, MethodFamily::shap}) {
    if (name == family_name(m)) return m;
  }
  throw UsageError("unknown method '" + std::string(name) + "' (expected cs, permutation or shap)");
}

void AuditConfig::validate() const {
  if (classifiers.empty()) throw UsageError("at least one classifier is required");
  if (methods.empty()) throw UsageError("at least one importance method is required");
  auto unique = [](auto v) {
    std::sort(v.begin(), v.end());
    return std::adjacent_find(v.begin(), v.end()) == v.end();
  };
  if (!unique(classifiers)) throw UsageError("classifiers are listed more than once");
  if (!unique(methods)) throw UsageError("methods are listed more than once");
  if (bootstrap_k < 2) throw UsageError("bootstrap_k must be at least 2");
  if (tune_budget < 1) throw UsageError("tune_budget must be at least 1");
  if (tune_folds < 2) throw UsageError("tune_folds must be at least 2");
  if (top_k.empty() || std::find(top_k.begin(), top_k.end(), std::size_t{0}) != top_k.end()) {
    throw UsageError("top_k values must be positive");
  }
  if (!(rho_threshold > 0.0 && rho_threshold <= 1.0)) throw UsageError("rho threshold must be in (0, 1]");
  if (!(vif_threshold > 1.0)) throw UsageError("VIF threshold must exceed 1");
  if (!(sk_esd.d_threshold > 0.0)) throw UsageError("SK-ESD d threshold must be positive");
  if (interaction_repeats < 1 || interaction_subsample < 2) throw UsageError("interaction settings out of range");
  if (shap_background < 1 || shap_max_rows < 1) throw UsageError("SHAP sample sizes must be positive");
  if (shap_exact_max_features > kMaxExactShapFeatures) {
    throw UsageError("shap_exact_max_features cannot exceed " + std::to_string(kMaxExactShapFeatures));
  }
  if (threads < 1) throw UsageError("threads must be at least 1");
}

bool AuditConfig::has(MethodFamily m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

const RankList* AuditResult::find_rank(LearnerKind kind, ImportanceMethod method) const {
  for (const auto& r : ranks) {
    if (r.classifier == kind_name(kind) && r.method == method_name(method)) return &r;
  }
  return nullptr;
}

std::vector<LearnerKind> AuditResult::passing() const {
  std::vector<LearnerKind> out;
  for (const auto& c : classifiers) {
    if (c.gate.passed) out.push_back(c.kind);
  }
  return out;
}

std::vector<AgreementReport> AuditResult::all_reports() const {
  std::vector<AgreementReport> out = rq1;
  out.insert(out.end(), rq2.begin(), rq2.end());
  if (rq3) out.push_back(*rq3);
  return out;
}

AgreementReport run_rq3(std::span<const RankList> cs_lists, const std::string& dataset,
                        std::span<const std::size_t> ks) {
  if (cs_lists.size() < 2) {
    throw DataError("comparing classifier-specific ranks needs at least two gate-passing classifiers");
  }
  std::vector<std::string> members;
  for (const auto& l : cs_lists) members.push_back(l.classifier + ":" + l.method);
  return compare_group(cs_lists, dataset, "rq3", std::move(members), ks);
}

namespace {

struct IterationOutput {
  IterationProvenance provenance;
  std::vector<PerfRecord> perf;                           // per classifier
  std::vector<LearnerSpec> specs;                         // per classifier
  std::vector<std::vector<std::vector<double>>> scores;  // [classifier][method] -> per feature
};

std::uint64_t kind_stream(LearnerKind k) { return static_cast<std::uint64_t>(k); }

Dataset preprocess(const Dataset& d, const AuditConfig& cfg, std::vector<std::string>& removed) {
  auto filtered = spearman_redundancy_filter(d, cfg.rho_threshold, cfg.vif_threshold);
  removed = filtered.removed;
  if (cfg.preprocessing == Preprocessing::autospearman_only) return std::move(filtered.dataset);
  auto cfs = cfs_select(filtered.dataset, cfg.cfs_max_stale);
  for (const auto& f : filtered.dataset.feature_names) {
    if (std::find(cfs.selected.begin(), cfs.selected.end(), f) == cfs.selected.end()) removed.push_back(f);
  }
  return std::move(cfs.dataset);
}

IterationOutput run_iteration(const Dataset& data, const BootstrapSplit& split, const AuditConfig& cfg,
                              const std::vector<std::optional<LearnerSpec>>& fixed_specs) {
  IterationOutput out;
  const std::uint64_t seed = derive_seed(cfg.seed, 100, split.iteration);
  std::vector<char> in_train(data.n_rows(), 0);
  for (std::size_t r : split.train_indices) in_train[r] = 1;
  for (std::size_t r : split.test_indices) {
    if (in_train[r]) throw InvariantError("bootstrap test row also appears in the train split");
  }
  out.provenance = {split.iteration, seed, split.train_indices.size(), split.test_indices.size()};
  const Dataset train = data.select_rows(split.train_indices);
  const Dataset test = data.select_rows(split.test_indices);

  for (std::size_t ci = 0; ci < cfg.classifiers.size(); ++ci) {
    const LearnerKind kind = cfg.classifiers[ci];
    const std::uint64_t ks = kind_stream(kind);
    LearnerSpec spec;
    if (fixed_specs[ci]) {
      spec = *fixed_specs[ci];
    } else {
      TuneOptions topt{cfg.tune_budget, cfg.tune_folds, derive_seed(seed, 1, ks)};
      spec = tune_random_search(kind, train, topt);
    }
    spec.seed = derive_seed(seed, 2, ks);
    const auto model = fit(spec, train);

    const auto prob = model->predict_proba(test.features);
    PerfRecord rec;
    rec.dataset = data.name;
    rec.classifier = std::string(kind_name(kind));
    rec.iteration = split.iteration;
    rec.auc = auc(prob, test.labels);
    rec.ifa = ifa(prob, test.labels);
    rec.n_test = test.n_rows();
    out.perf.push_back(rec);
    out.specs.push_back(spec);

    std::vector<std::vector<double>> per_method;
    for (MethodFamily m : cfg.methods) {
      switch (m) {
        case MethodFamily::cs:
          per_method.push_back(cs_importance(*model, train).values);
          break;
        case MethodFamily::permutation:
          per_method.push_back(
              permutation_importance(*model, cfg.permute_test_set ? test : train, derive_seed(seed, 3, ks)).values);
          break;
        case MethodFamily::shap: {
          const auto bg = sample_rows(train.n_rows(), cfg.shap_background, derive_seed(seed, 4, ks));
          const auto rows = sample_rows(train.n_rows(), cfg.shap_max_rows, derive_seed(seed, 5, ks));
          ShapOptions so;
          if (train.n_features() > cfg.shap_exact_max_features) {
            so.mode = ShapMode::sampled;
            so.n_coalitions = std::max(cfg.shap_sampled_coalitions, train.n_features() + 2);
            so.seed = derive_seed(seed, 6, ks);
          }
          auto e = shap_values(*model, train.select_rows(rows).features, train.select_rows(bg).features, so);
          e.background = bg;
          per_method.push_back(shap_importance(e, train.feature_names).values);
          break;
        }
      }
    }
    out.scores.push_back(std::move(per_method));
  }
  return out;
}

ImportanceMethod method_for(MethodFamily m, LearnerKind kind) {
  switch (m) {
    case MethodFamily::cs: return cs_method_for(kind);
    case MethodFamily::permutation: return ImportanceMethod::permutation;
    case MethodFamily::shap: return ImportanceMethod::shap;
  }
  throw InvariantError("unknown method family");
}

}  // namespace

AuditResult run_audit(const Dataset& d, const AuditConfig& cfg) {
  cfg.validate();
  d.validate();
  AuditResult result;
  result.dataset = d.name;
  result.config = cfg;
  result.input_features = d.feature_names;
  result.admission = admission_check(d);
  if (!result.admission.admitted) {
    if (!cfg.override_admission) throw DataError("dataset not admitted: " + result.admission.reason);
    result.warnings.push_back("admission overridden: " + result.admission.reason);
  }

  const Dataset data = preprocess(d, cfg, result.removed_features);
  result.features = data.feature_names;
  const auto splits = bootstrap_splits(data.n_rows(), cfg.bootstrap_k, derive_seed(cfg.seed, 1), data.labels);

  std::vector<std::optional<LearnerSpec>> fixed(cfg.classifiers.size());
  if (cfg.tune_once) {
    const Dataset first = data.select_rows(splits.front().train_indices);
    for (std::size_t ci = 0; ci < cfg.classifiers.size(); ++ci) {
      TuneOptions topt{cfg.tune_budget, cfg.tune_folds, derive_seed(cfg.seed, 200, kind_stream(cfg.classifiers[ci]))};
      fixed[ci] = tune_random_search(cfg.classifiers[ci], first, topt);
    }
  }

  // Iterations are independent; results are stored by iteration index.
  std::vector<IterationOutput> outputs(splits.size());
  std::vector<std::exception_ptr> errors(splits.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < splits.size(); i = next++) {
      try {
        outputs[i] = run_iteration(data, splits[i], cfg, fixed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(cfg.threads, splits.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  for (const auto& o : outputs) result.iterations.push_back(o.provenance);

  for (std::size_t ci = 0; ci < cfg.classifiers.size(); ++ci) {
    ClassifierOutcome oc;
    oc.kind = cfg.classifiers[ci];
    for (const auto& o : outputs) {
      oc.perf.push_back(o.perf[ci]);
      oc.specs.push_back(o.specs[ci]);
    }
    oc.gate = gate(oc.perf);
    if (!oc.gate.passed) {
      result.warnings.push_back(std::string(kind_name(oc.kind)) + " failed the performance gate: " + oc.gate.reason);
    }
    result.classifiers.push_back(std::move(oc));
  }

  for (std::size_t ci = 0; ci < cfg.classifiers.size(); ++ci) {
    if (!result.classifiers[ci].gate.passed) continue;
    const LearnerKind kind = cfg.classifiers[ci];
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      MethodScores ms;
      ms.kind = kind;
      ms.method = method_for(cfg.methods[mi], kind);
      ms.dists.features = data.feature_names;
      ms.dists.scores.assign(data.n_features(), {});
      for (const auto& o : outputs) {
        for (std::size_t j = 0; j < data.n_features(); ++j) ms.dists.scores[j].push_back(o.scores[ci][mi][j]);
      }
      RankList rl = sk_esd(ms.dists, cfg.sk_esd);
      rl.dataset = d.name;
      rl.classifier = std::string(kind_name(kind));
      rl.method = std::string(method_name(ms.method));
      result.ranks.push_back(std::move(rl));
      result.scores.push_back(std::move(ms));
    }
  }
  if (result.ranks.empty()) result.warnings.push_back("no classifier passed the performance gate; no ranks computed");

  std::vector<RankList> cs_lists;
  for (LearnerKind kind : result.passing()) {
    const std::string scope(kind_name(kind));
    const RankList* cs = cfg.has(MethodFamily::cs) ? result.find_rank(kind, cs_method_for(kind)) : nullptr;
    const RankList* perm = result.find_rank(kind, ImportanceMethod::permutation);
    const RankList* shap = result.find_rank(kind, ImportanceMethod::shap);
    if (cs) {
      cs_lists.push_back(*cs);
      for (const RankList* ca : {perm, shap}) {
        if (ca) result.rq1.push_back(compare_pair(*cs, *ca, d.name, "rq1:" + scope, cs->method, ca->method, cfg.top_k));
      }
    }
    if (perm && shap) {
      result.rq2.push_back(compare_pair(*perm, *shap, d.name, "rq2:" + scope, perm->method, shap->method, cfg.top_k));
    }
  }
  if (cs_lists.size() >= 2) result.rq3 = run_rq3(cs_lists, d.name, cfg.top_k);

  if (cfg.interaction_profile) {
    LearnerSpec surrogate;
    surrogate.kind = LearnerKind::random_forest;
    surrogate.seed = derive_seed(cfg.seed, 300);
    const auto model = fit(surrogate, data);
    result.interactions = interaction_profile(*model, data, cfg.interaction_repeats, derive_seed(cfg.seed, 301),
                                              cfg.interaction_subsample);
  }
  return result;
}

std::vector<StudyRow> summarize_agreement(const AuditResult& r) {
  std::vector<StudyRow> rows;
  auto add_median = [&](const std::vector<AgreementReport>& reports, const std::string& comparison) {
    if (reports.empty()) return;
    std::vector<double> t1, t3;
    for (const auto& rep : reports) {
      t1.push_back(rep.top1);
      t3.push_back(rep.top3);
    }
    rows.push_back({r.dataset, comparison, "top1", stats::median(t1)});
    rows.push_back({r.dataset, comparison, "top3", stats::median(t3)});
  };
  add_median(r.rq1, "ca_vs_cs");
  add_median(r.rq2, "ca_vs_ca");
  if (r.rq3) {
    rows.push_back({r.dataset, "cs_vs_cs", "top1", r.rq3->top1});
    rows.push_back({r.dataset, "cs_vs_cs", "top3", r.rq3->top3});
  }
  return rows;
}

InteractionStudy run_interaction_study(std::uint64_t seed, const AuditConfig& cfg, std::size_t n_rows) {
  InteractionStudy study;
  AuditConfig c = cfg;
  c.seed = seed;
  c.override_admission = true;  // synthetic labels sit near 50% defective
  for (bool with : {false, true}) {
    SyntheticSpec spec;
    spec.n_rows = n_rows;
    spec.with_interactions = with;
    spec.seed = derive_seed(seed, with ? 2 : 1);
    AuditResult r = run_audit(generate_synthetic(spec), c);
    auto rows = summarize_agreement(r);
    study.rows.insert(study.rows.end(), rows.begin(), rows.end());
    (with ? study.interaction : study.additive) = std::move(r);
  }
  return study;
}

namespace {

std::optional<double> ca_vs_cs_top3(const std::vector<StudyRow>& rows) {
  for (const auto& r : rows) {
    if (r.comparison == "ca_vs_cs" && r.metric == "top3") return r.value;
  }
  return std::nullopt;
}

}  // namespace

CfsStudy run_cfs_study(const Dataset& d, const AuditConfig& cfg) {
  CfsStudy study;
  AuditConfig before = cfg;
  before.preprocessing = Preprocessing::autospearman_only;
  study.before = run_audit(d, before);
  study.before_rows = summarize_agreement(study.before);
  study.before_top3 = ca_vs_cs_top3(study.before_rows);

  AuditConfig after = cfg;
  after.preprocessing = Preprocessing::autospearman_then_cfs;
  try {
    study.after = run_audit(d, after);
  } catch (const InsufficientFeaturesError& e) {
    study.skipped = true;
    study.skip_reason = e.what();
    return study;
  }
  study.after_rows = summarize_agreement(*study.after);
  study.after_top3 = ca_vs_cs_top3(study.after_rows);
  return study;
}

}  // namespace fiagree
