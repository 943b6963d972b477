// fiagree: audit agreement between feature-importance methods on a CSV dataset.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fiagree/harness.hpp"
#include "fiagree/report.hpp"

using namespace fiagree;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t default_threads() {
  if (const char* env = std::getenv("FIAGREE_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("FIAGREE_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

void print_table(const CsvTable& t, std::ostream& out) {
  std::vector<std::size_t> width(t.header.size());
  for (std::size_t c = 0; c < t.header.size(); ++c) width[c] = t.header[c].size();
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
  }
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      out << std::left << std::setw(static_cast<int>(width[c])) << r[c] << (c + 1 < r.size() ? "  " : "\n");
    }
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
}

// Options shared by the commands that read a labelled CSV.
struct DataArgs {
  std::string path;
  std::string label;
  std::string positive = "1";

  void add(CLI::App* cmd) {
    cmd->add_option("data", path, "input CSV");
    cmd->add_option("--label", label, "label column name");
    cmd->add_option("--positive", positive, "label value marking a defective row")->capture_default_str();
  }
  void require() const {
    if (path.empty()) throw UsageError("missing input CSV path");
    if (label.empty()) throw UsageError("missing --label");
  }
  Dataset load(InputRecord& rec) const {
    require();
    const std::string bytes = read_file(path);
    std::string name = std::filesystem::path(path).stem().string();
    Dataset d = parse_csv(bytes, label, positive, name);
    rec = {path, label, positive, content_digest(bytes)};
    return d;
  }
};

// Audit options mapped onto AuditConfig.
struct AuditArgs {
  std::string config_path;
  std::string classifiers;
  std::string methods;
  std::optional<std::size_t> bootstrap;
  std::optional<std::size_t> tune_budget;
  std::optional<std::uint64_t> seed;
  std::string cfs;
  bool tune_once = false;
  bool override_admission = false;
  bool no_interactions = false;
  std::optional<std::size_t> repeats;
  std::optional<std::size_t> threads;
  bool print_config = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON file with audit settings");
    cmd->add_option("--classifiers", classifiers, "comma list of logistic,cart,random_forest,gbt");
    cmd->add_option("--methods", methods, "comma list of cs,permutation,shap");
    cmd->add_option("--bootstrap", bootstrap, "bootstrap iterations");
    cmd->add_option("--tune-budget", tune_budget, "random-search candidates per tuning");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--cfs", cfs, "on or off: apply CFS after the redundancy filter");
    cmd->add_flag("--tune-once", tune_once, "tune on the first split only");
    cmd->add_flag("--override-admission", override_admission, "audit datasets failing EPV/defective-ratio checks");
    cmd->add_flag("--no-interactions", no_interactions, "skip the interaction profile");
    cmd->add_option("--repeats", repeats, "interaction profile repeats");
    cmd->add_option("--threads", threads, "worker threads (default: FIAGREE_THREADS or 1)");
    cmd->add_flag("--print-config", print_config, "print the effective configuration and exit");
  }

  AuditConfig build() const {
    AuditConfig cfg;
    cfg.threads = default_threads();
    if (!config_path.empty()) cfg = config_from_json(read_file(config_path), cfg);
    if (!classifiers.empty()) {
      cfg.classifiers.clear();
      for (const auto& c : split_list(classifiers)) cfg.classifiers.push_back(parse_kind(c));
    }
    if (!methods.empty()) {
      cfg.methods.clear();
      for (const auto& m : split_list(methods)) cfg.methods.push_back(parse_family(m));
    }
    if (bootstrap) cfg.bootstrap_k = *bootstrap;
    if (tune_budget) cfg.tune_budget = *tune_budget;
    if (seed) cfg.seed = *seed;
    if (cfs == "on") {
      cfg.preprocessing = Preprocessing::autospearman_then_cfs;
    } else if (cfs == "off") {
      cfg.preprocessing = Preprocessing::autospearman_only;
    } else if (!cfs.empty()) {
      throw UsageError("--cfs takes on or off");
    }
    if (tune_once) cfg.tune_once = true;
    if (override_admission) cfg.override_admission = true;
    if (no_interactions) cfg.interaction_profile = false;
    if (repeats) cfg.interaction_repeats = *repeats;
    if (threads) cfg.threads = *threads;
    cfg.validate();
    return cfg;
  }
};

void print_summary(const AuditResult& r, std::ostream& out) {
  out << "dataset " << r.dataset << ": " << r.features.size() << " features after preprocessing";
  if (!r.removed_features.empty()) out << " (" << r.removed_features.size() << " removed)";
  out << "\n";
  for (const auto& c : r.classifiers) {
    out << "  " << std::left << std::setw(14) << kind_name(c.kind) << " median AUC " << format_double(c.gate.median_auc)
        << ", median IFA " << format_double(c.gate.median_ifa) << (c.gate.passed ? "  pass" : "  fail: " + c.gate.reason)
        << "\n";
  }
  const auto reports = r.all_reports();
  if (!reports.empty()) print_table(agreement_table(reports), out);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
}

bool is_simulated(const std::string& data_path) {
  const std::filesystem::path sidecar = data_path + ".meta.json";
  if (!std::filesystem::exists(sidecar)) return false;
  const auto meta = nlohmann::json::parse(read_file(sidecar.string()), nullptr, false);
  return meta.is_object() && meta.value("generator", "") == "synthetic";
}

int cmd_audit(const DataArgs& data, const AuditArgs& args, const std::string& out_dir) {
  AuditConfig cfg = args.build();
  if (args.print_config) {
    std::cout << config_to_json(cfg);
    return 0;
  }
  if (out_dir.empty()) throw UsageError("missing --out directory");
  InputRecord rec;
  const Dataset d = data.load(rec);
  // Files written by `simulate` are balanced by construction and would fail
  // the defective-ratio check, so their sidecar acts as an override.
  if (!cfg.override_admission && is_simulated(data.path)) {
    cfg.override_admission = true;
    std::cerr << "note: " << data.path << " was written by simulate; admission check is advisory\n";
  }
  const AuditResult r = run_audit(d, cfg);
  write_bundle(r, rec, out_dir);
  print_summary(r, std::cout);
  return 0;
}

int cmd_simulate(bool interactions, std::size_t n, std::uint64_t seed, const std::string& out) {
  if (n < 20) throw UsageError("--n must be at least 20");
  if (out.empty()) throw UsageError("missing --out file");
  SyntheticSpec spec;
  spec.n_rows = n;
  spec.with_interactions = interactions;
  spec.seed = seed;
  const Dataset d = generate_synthetic(spec);
  CsvTable t;
  t.header = d.feature_names;
  t.header.push_back("y");
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < d.n_features(); ++j) {
      row.push_back(format_double(d.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))));
    }
    row.push_back(std::to_string(d.labels[i]));
    t.rows.push_back(std::move(row));
  }
  write_atomic(out, write_csv(t));
  nlohmann::json meta;
  meta["generator"] = "synthetic";
  meta["seed"] = seed;
  meta["n_rows"] = n;
  meta["with_interactions"] = interactions;
  meta["signal"] = synthetic_formula(spec);
  meta["interaction_terms"] = interactions ? std::vector<std::string>{"x1*x3", "x2*x3", "x2*x1"} : std::vector<std::string>{};
  meta["ground_truth_top3"] = synthetic_ground_truth();
  meta["label_column"] = "y";
  meta["positive_label"] = "1";
  write_atomic(out + ".meta.json", meta.dump(2) + "\n");
  std::cout << "wrote " << n << " rows to " << out << "\n";
  return 0;
}

int cmd_interactions(const DataArgs& data, std::size_t repeats, std::uint64_t seed, std::size_t subsample,
                     const std::string& out_dir) {
  InputRecord rec;
  const Dataset d = data.load(rec);
  d.validate();
  LearnerSpec surrogate;
  surrogate.kind = LearnerKind::random_forest;
  surrogate.seed = derive_seed(seed, 300);
  const auto model = fit(surrogate, d);
  const auto prof = interaction_profile(*model, d, repeats, derive_seed(seed, 301), subsample);
  const CsvTable t = interactions_table(d.name, prof);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_atomic(std::filesystem::path(out_dir) / "interactions.csv", write_csv(t));
  }
  print_table(t, std::cout);
  std::cout << "features with H >= 0.3: " << prof.count_at_least(kInteractionFlagLow)
            << "\nfeatures with H >= 0.5: " << prof.count_at_least(kInteractionFlagHigh) << "\n";
  return 0;
}

int cmd_compare(const std::string& a_path, const std::string& b_path, const std::string& top_k,
                const std::string& out) {
  if (a_path.empty() || b_path.empty()) throw UsageError("compare needs two rank files");
  std::vector<std::size_t> ks;
  for (const auto& k : split_list(top_k)) {
    try {
      ks.push_back(static_cast<std::size_t>(std::stoul(k)));
    } catch (const std::exception&) {
      throw UsageError("--top-k takes a comma list of positive integers");
    }
    if (ks.back() == 0) throw UsageError("--top-k values must be positive");
  }
  const auto la = parse_ranks_csv(read_file(a_path));
  const auto lb = parse_ranks_csv(read_file(b_path));
  std::vector<AgreementReport> reports;
  auto label = [](const RankList& r) { return r.classifier + ":" + r.method; };
  if (la.size() == 1 && lb.size() == 1) {
    reports.push_back(compare_pair(la[0], lb[0], la[0].dataset, "compare", label(la[0]), label(lb[0]), ks));
  } else {
    for (const auto& a : la) {
      for (const auto& b : lb) {
        if (a.classifier == b.classifier && a.method == b.method) {
          reports.push_back(compare_pair(a, b, a.dataset, "compare", label(a), label(b), ks));
        }
      }
    }
    if (reports.empty()) throw DataError("the two rank files share no (classifier, method) list");
  }
  const CsvTable t = agreement_table(reports);
  if (!out.empty()) write_atomic(out, write_csv(t));
  print_table(t, std::cout);
  return 0;
}

CsvTable study_table(const std::vector<StudyRow>& rows, const std::string& arm) {
  CsvTable t{{"dataset", "arm", "comparison", "metric", "value"}, {}};
  for (const auto& r : rows) t.rows.push_back({r.dataset, arm, r.comparison, r.metric, format_double(r.value)});
  return t;
}

int cmd_cfs_study(const DataArgs& data, const AuditArgs& args, const std::string& out_dir) {
  const AuditConfig cfg = args.build();
  if (out_dir.empty()) throw UsageError("missing --out directory");
  InputRecord rec;
  const Dataset d = data.load(rec);
  const CfsStudy s = run_cfs_study(d, cfg);
  const std::filesystem::path dir(out_dir);
  write_bundle(s.before, rec, dir / "before");
  CsvTable t = study_table(s.before_rows, "before");
  if (s.skipped) {
    std::cerr << "warning: CFS arm skipped: " << s.skip_reason << "\n";
    t.rows.push_back({d.name, "after", "skipped", "", ""});
  } else {
    write_bundle(*s.after, rec, dir / "after");
    const CsvTable after = study_table(s.after_rows, "after");
    t.rows.insert(t.rows.end(), after.rows.begin(), after.rows.end());
    for (const auto& b : s.before_rows) {
      for (const auto& a : s.after_rows) {
        if (a.comparison == b.comparison && a.metric == b.metric) {
          t.rows.push_back({d.name, "delta", b.comparison, b.metric, format_double(a.value - b.value)});
        }
      }
    }
  }
  write_atomic(dir / "cfs_study.csv", write_csv(t));
  print_table(t, std::cout);
  return 0;
}

int cmd_interaction_study(const AuditArgs& args, std::size_t n, const std::string& out_dir) {
  const AuditConfig cfg = args.build();
  if (out_dir.empty()) throw UsageError("missing --out directory");
  const InteractionStudy s = run_interaction_study(cfg.seed, cfg, n);
  const std::filesystem::path dir(out_dir);
  const InputRecord rec{"(generated)", "y", "1", ""};
  write_bundle(s.additive, rec, dir / "additive");
  write_bundle(s.interaction, rec, dir / "interaction");
  const CsvTable t = study_table(s.rows, "audit");
  write_atomic(dir / "study.csv", write_csv(t));
  print_table(t, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Measure agreement between feature-importance methods"};
  app.require_subcommand(1);

  DataArgs data;
  AuditArgs audit_args;
  std::string out;

  auto* audit = app.add_subcommand("audit", "run the full audit on a CSV dataset");
  data.add(audit);
  audit_args.add(audit);
  audit->add_option("--out", out, "output directory for the report bundle");

  bool with_interactions = false;
  std::size_t n_rows = 1500;
  std::uint64_t sim_seed = 0;
  auto* simulate = app.add_subcommand("simulate", "write a synthetic dataset with known ground truth");
  simulate->add_flag("--interactions,!--no-interactions", with_interactions, "add the pairwise interaction terms");
  simulate->add_option("--n", n_rows, "rows")->capture_default_str();
  simulate->add_option("--seed", sim_seed, "seed")->capture_default_str();
  simulate->add_option("--out", out, "output CSV path");

  DataArgs inter_data;
  std::size_t repeats = 10, subsample = kDefaultHSubsample;
  std::uint64_t inter_seed = 0;
  std::string inter_out;
  auto* interactions = app.add_subcommand("interactions", "Friedman H profile with a random-forest surrogate");
  inter_data.add(interactions);
  interactions->add_option("--repeats", repeats, "subsample repeats")->capture_default_str();
  interactions->add_option("--subsample", subsample, "rows per repeat")->capture_default_str();
  interactions->add_option("--seed", inter_seed, "seed")->capture_default_str();
  interactions->add_option("--out", inter_out, "output directory for interactions.csv");

  std::string rank_a, rank_b, top_k = "1,3", compare_out;
  auto* compare = app.add_subcommand("compare", "compare two ranks.csv files");
  compare->add_option("ranks_a", rank_a, "first rank file");
  compare->add_option("ranks_b", rank_b, "second rank file");
  compare->add_option("--top-k", top_k, "comma list of k values")->capture_default_str();
  compare->add_option("--out", compare_out, "write agreement rows to this CSV");

  DataArgs cfs_data;
  AuditArgs cfs_args;
  std::string cfs_out;
  auto* cfs = app.add_subcommand("cfs-study", "audit before and after CFS feature selection");
  cfs_data.add(cfs);
  cfs_args.add(cfs);
  cfs->add_option("--out", cfs_out, "output directory");

  AuditArgs study_args;
  std::size_t study_n = 1500;
  std::string study_out;
  auto* study = app.add_subcommand("interaction-study", "audit both synthetic datasets");
  study_args.add(study);
  study->add_option("--n", study_n, "rows per synthetic dataset")->capture_default_str();
  study->add_option("--out", study_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*audit) return cmd_audit(data, audit_args, out);
    if (*simulate) return cmd_simulate(with_interactions, n_rows, sim_seed, out);
    if (*interactions) return cmd_interactions(inter_data, repeats, inter_seed, subsample, inter_out);
    if (*compare) return cmd_compare(rank_a, rank_b, top_k, compare_out);
    if (*cfs) {
      if (cfs_args.print_config) {
        std::cout << config_to_json(cfs_args.build());
        return 0;
      }
      return cmd_cfs_study(cfs_data, cfs_args, cfs_out);
    }
    if (*study) {
      if (study_args.print_config) {
        std::cout << config_to_json(study_args.build());
        return 0;
      }
      return cmd_interaction_study(study_args, study_n, study_out);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
