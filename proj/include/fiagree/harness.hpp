#pragma once

#include <cstdint>
#include <iterator>
#include <optional>
#include <string>
#include <vector>

#include "fiagree/agreement.hpp"
#include "fiagree/data.hpp"
#include "fiagree/interactions.hpp"
#include "fiagree/learners.hpp"
#include "fiagree/perf.hpp"
#include "fiagree/ranking.hpp"

namespace fiagree {

enum class Preprocessing { autospearman_only, autospearman_then_cfs };
// Method families: the classifier's own importance, or one of the agnostic ones.
enum class MethodFamily { cs, permutation, shap };

std::string_view preprocessing_name(Preprocessing p);
Preprocessing parse_preprocessing(std::string_view name);
std::string_view family_name(MethodFamily m);
MethodFamily parse_family(std::string_view name);

struct AuditConfig {
  std::vector<LearnerKind> classifiers = std::vector<LearnerKind>(std::begin(kAllKinds), std::end(kAllKinds));
  std::vector<MethodFamily> methods{MethodFamily::cs, MethodFamily::permutation, MethodFamily::shap};
  std::size_t bootstrap_k = 100;
  std::size_t tune_budget = 10;
  std::size_t tune_folds = 3;
  bool tune_once = false;  // tune on the first split only and reuse the choice
  std::uint64_t seed = 0;
  Preprocessing preprocessing = Preprocessing::autospearman_only;
  std::vector<std::size_t> top_k{1, 3};
  double rho_threshold = 0.7;
  double vif_threshold = 5.0;
  std::size_t cfs_max_stale = 5;
  SkEsdOptions sk_esd;
  bool interaction_profile = true;
  std::size_t interaction_repeats = 10;
  std::size_t interaction_subsample = kDefaultHSubsample;
  std::size_t shap_background = 64;
  std::size_t shap_max_rows = 200;          // scored train rows per iteration
  std::size_t shap_exact_max_features = 12;  // sampled mode above this
  std::size_t shap_sampled_coalitions = 2048;
  bool permute_test_set = false;
  bool override_admission = false;
  std::size_t threads = 1;

  void validate() const;
  bool has(MethodFamily m) const;
};

// Train and test sizes of one bootstrap iteration; the harness checks that
// the two index sets are disjoint before any score is computed.
struct IterationProvenance {
  std::size_t iteration = 0;
  std::uint64_t seed = 0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct ClassifierOutcome {
  LearnerKind kind = LearnerKind::logistic;
  GateResult gate;
  std::vector<PerfRecord> perf;     // one per iteration
  std::vector<LearnerSpec> specs;  // fitted spec per iteration
};

struct MethodScores {
  LearnerKind kind = LearnerKind::logistic;
  ImportanceMethod method = ImportanceMethod::permutation;
  ScoreDistributions dists;
};

struct AuditResult {
  std::string dataset;
  AuditConfig config;
  AdmissionResult admission;
  std::vector<std::string> input_features;
  std::vector<std::string> features;          // after preprocessing
  std::vector<std::string> removed_features;  // in removal order
  std::vector<IterationProvenance> iterations;
  std::vector<ClassifierOutcome> classifiers;
  std::vector<MethodScores> scores;  // gate-passing classifiers only
  std::vector<RankList> ranks;       // gate-passing classifiers only
  std::vector<AgreementReport> rq1;  // CS vs each agnostic method, per classifier
  std::vector<AgreementReport> rq2;  // permutation vs SHAP, per classifier
  std::optional<AgreementReport> rq3;
  std::optional<InteractionProfile> interactions;
  std::vector<std::string> warnings;

  const RankList* find_rank(LearnerKind kind, ImportanceMethod method) const;
  std::vector<LearnerKind> passing() const;
  std::vector<AgreementReport> all_reports() const;
};

// Preprocess, bootstrap, tune and fit, gate, score, rank and compare.
// Deterministic in (d, cfg) regardless of cfg.threads.
AuditResult run_audit(const Dataset& d, const AuditConfig& cfg);

// Kendall's W and group overlaps across classifier-specific rank lists.
// Throws DataError with fewer than two lists.
AgreementReport run_rq3(std::span<const RankList> cs_lists, const std::string& dataset,
                        std::span<const std::size_t> ks = {});

struct StudyRow {
  std::string dataset;
  std::string comparison;  // ca_vs_cs, ca_vs_ca or cs_vs_cs
  std::string metric;      // top1 or top3
  double value = 0.0;      // median over the compared pairs, or the group value
};

// Median agreement per comparison family of one audit.
std::vector<StudyRow> summarize_agreement(const AuditResult& r);

struct InteractionStudy {
  AuditResult additive;
  AuditResult interaction;
  std::vector<StudyRow> rows;
};

// Audits both synthetic datasets (n rows each) under `cfg` with its seed.
InteractionStudy run_interaction_study(std::uint64_t seed, const AuditConfig& cfg, std::size_t n_rows = 1500);

struct CfsStudy {
  AuditResult before;
  std::optional<AuditResult> after;
  bool skipped = false;
  std::string skip_reason;
  std::vector<StudyRow> before_rows;
  std::vector<StudyRow> after_rows;
  // Median CA-vs-CS top-3 overlap over classifiers and agnostic methods.
  std::optional<double> before_top3;
  std::optional<double> after_top3;
};

// Runs the audit without and with CFS after the redundancy filter.
CfsStudy run_cfs_study(const Dataset& d, const AuditConfig& cfg);

}  // namespace fiagree
