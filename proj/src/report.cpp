#include "fiagree/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

namespace fiagree {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc{}) throw InvariantError("could not format a double");
  return std::string(buf, ptr);
}

namespace {

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string write_csv(const CsvTable& table) {
  std::string out;
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += quote(fields[i]);
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

CsvTable read_csv_table(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> current;
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t line = 1;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      any = true;
    } else if (c == ',') {
      current.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      current.push_back(std::move(field));
      field.clear();
      if (any || current.size() > 1 || !current[0].empty()) records.push_back(std::move(current));
      current.clear();
      any = false;
      ++line;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw DataError("unterminated quoted field at line " + std::to_string(line));
  if (any || !field.empty()) {
    current.push_back(std::move(field));
    records.push_back(std::move(current));
  }
  if (records.empty()) throw DataError("CSV text has no header row");
  CsvTable t;
  t.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw DataError("CSV record " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

CsvTable ranks_table(std::span<const RankList> ranks) {
  CsvTable t;
  t.header = {"dataset", "classifier", "method", "feature", "rank"};
  for (const auto& r : ranks) {
    for (const auto& f : r.ordered_features()) {
      t.rows.push_back({r.dataset, r.classifier, r.method, f, std::to_string(r.ranks.at(f))});
    }
  }
  return t;
}

std::vector<RankList> parse_ranks_csv(std::string_view text) {
  const CsvTable t = read_csv_table(text);
  const std::vector<std::string> expected{"dataset", "classifier", "method", "feature", "rank"};
  if (t.header != expected) throw DataError("rank file header must be dataset,classifier,method,feature,rank");
  std::vector<RankList> out;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& row = t.rows[i];
    const auto key = std::make_tuple(row[0], row[1], row[2]);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back(RankList{row[0], row[1], row[2], {}});
    }
    int rank = 0;
    auto [ptr, ec] = std::from_chars(row[4].data(), row[4].data() + row[4].size(), rank);
    if (ec != std::errc{} || ptr != row[4].data() + row[4].size() || rank < 1) {
      throw DataError("rank file line " + std::to_string(i + 2) + ": invalid rank '" + row[4] + "'");
    }
    if (!out[it->second].ranks.emplace(row[3], rank).second) {
      throw DataError("rank file line " + std::to_string(i + 2) + ": duplicate feature '" + row[3] + "'");
    }
  }
  if (out.empty()) throw DataError("rank file has no rows");
  return out;
}

CsvTable agreement_table(std::span<const AgreementReport> reports) {
  CsvTable t;
  t.header = {"dataset", "scope", "method_a", "method_b", "metric", "value", "label"};
  for (const auto& r : reports) {
    std::string a, b;
    if (r.w) {
      a = "group";
      for (const auto& m : r.members) b += (b.empty() ? "" : "|") + m;
    } else {
      a = r.members.size() > 0 ? r.members[0] : "";
      b = r.members.size() > 1 ? r.members[1] : "";
    }
    auto row = [&](const std::string& metric, double value, std::string label) {
      t.rows.push_back({r.dataset, r.scope, a, b, metric, format_double(value), std::move(label)});
    };
    if (r.tau) row("tau", *r.tau, r.tau_degenerate ? "degenerate" : interpret(Metric::tau, *r.tau));
    if (r.w) row("w", *r.w, interpret(Metric::w, *r.w));
    std::map<std::size_t, double> overlaps = r.top_k;
    overlaps.emplace(1, r.top1);
    overlaps.emplace(3, r.top3);
    for (const auto& [k, v] : overlaps) {
      std::string label;
      if (k == 1) label = interpret(Metric::top1, v);
      if (k == 3) label = interpret(Metric::top3, v);
      row("top" + std::to_string(k), v, label);
    }
  }
  return t;
}

CsvTable perf_table(const AuditResult& result) {
  CsvTable t;
  t.header = {"dataset", "classifier", "iteration", "auc", "ifa"};
  for (const auto& c : result.classifiers) {
    for (const auto& p : c.perf) {
      t.rows.push_back({p.dataset, p.classifier, std::to_string(p.iteration), format_double(p.auc), std::to_string(p.ifa)});
    }
  }
  return t;
}

CsvTable interactions_table(const std::string& dataset, const InteractionProfile& profile) {
  CsvTable t;
  t.header = {"dataset", "feature", "median_h", "flags"};
  for (std::size_t j = 0; j < profile.features.size(); ++j) {
    std::string flags;
    if (profile.flag_low[j]) flags = "h>=0.3";
    if (profile.flag_high[j]) flags += "|h>=0.5";
    t.rows.push_back({dataset, profile.features[j], format_double(profile.median_h[j]), flags});
  }
  return t;
}

namespace {

json config_json(const AuditConfig& cfg) {
  json j;
  std::vector<std::string> classifiers, methods;
  for (auto k : cfg.classifiers) classifiers.emplace_back(kind_name(k));
  for (auto m : cfg.methods) methods.emplace_back(family_name(m));
  j["classifiers"] = classifiers;
  j["methods"] = methods;
  j["bootstrap_k"] = cfg.bootstrap_k;
  j["tune_budget"] = cfg.tune_budget;
  j["tune_folds"] = cfg.tune_folds;
  j["tune_once"] = cfg.tune_once;
  j["seed"] = cfg.seed;
  j["preprocessing"] = std::string(preprocessing_name(cfg.preprocessing));
  j["top_k"] = cfg.top_k;
  j["rho_threshold"] = cfg.rho_threshold;
  j["vif_threshold"] = cfg.vif_threshold;
  j["cfs_max_stale"] = cfg.cfs_max_stale;
  j["sk_d_threshold"] = cfg.sk_esd.d_threshold;
  j["sk_log_transform"] = cfg.sk_esd.log_transform;
  j["interaction_profile"] = cfg.interaction_profile;
  j["interaction_repeats"] = cfg.interaction_repeats;
  j["interaction_subsample"] = cfg.interaction_subsample;
  j["shap_background"] = cfg.shap_background;
  j["shap_max_rows"] = cfg.shap_max_rows;
  j["shap_exact_max_features"] = cfg.shap_exact_max_features;
  j["shap_sampled_coalitions"] = cfg.shap_sampled_coalitions;
  j["permute_test_set"] = cfg.permute_test_set;
  j["override_admission"] = cfg.override_admission;
  j["threads"] = cfg.threads;
  return j;
}

}  // namespace

std::string config_to_json(const AuditConfig& cfg) { return config_json(cfg).dump(2) + "\n"; }

AuditConfig config_from_json(std::string_view text, const AuditConfig& base) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  AuditConfig cfg = base;
  const std::set<std::string> known = [] {
    std::set<std::string> k;
    const json defaults = config_json(AuditConfig{});
    for (const auto& [key, _] : defaults.items()) k.insert(key);
    return k;
  }();
  try {
    for (const auto& [key, value] : j.items()) {
      if (!known.count(key)) throw UsageError("unknown config key '" + key + "'");
      if (key == "classifiers") {
        cfg.classifiers.clear();
        for (const auto& v : value) cfg.classifiers.push_back(parse_kind(v.get<std::string>()));
      } else if (key == "methods") {
        cfg.methods.clear();
        for (const auto& v : value) cfg.methods.push_back(parse_family(v.get<std::string>()));
      } else if (key == "bootstrap_k") {
        cfg.bootstrap_k = value.get<std::size_t>();
      } else if (key == "tune_budget") {
        cfg.tune_budget = value.get<std::size_t>();
      } else if (key == "tune_folds") {
        cfg.tune_folds = value.get<std::size_t>();
      } else if (key == "tune_once") {
        cfg.tune_once = value.get<bool>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "preprocessing") {
        cfg.preprocessing = parse_preprocessing(value.get<std::string>());
      } else if (key == "top_k") {
        cfg.top_k = value.get<std::vector<std::size_t>>();
      } else if (key == "rho_threshold") {
        cfg.rho_threshold = value.get<double>();
      } else if (key == "vif_threshold") {
        cfg.vif_threshold = value.get<double>();
      } else if (key == "cfs_max_stale") {
        cfg.cfs_max_stale = value.get<std::size_t>();
      } else if (key == "sk_d_threshold") {
        cfg.sk_esd.d_threshold = value.get<double>();
      } else if (key == "sk_log_transform") {
        cfg.sk_esd.log_transform = value.get<bool>();
      } else if (key == "interaction_profile") {
        cfg.interaction_profile = value.get<bool>();
      } else if (key == "interaction_repeats") {
        cfg.interaction_repeats = value.get<std::size_t>();
      } else if (key == "interaction_subsample") {
        cfg.interaction_subsample = value.get<std::size_t>();
      } else if (key == "shap_background") {
        cfg.shap_background = value.get<std::size_t>();
      } else if (key == "shap_max_rows") {
        cfg.shap_max_rows = value.get<std::size_t>();
      } else if (key == "shap_exact_max_features") {
        cfg.shap_exact_max_features = value.get<std::size_t>();
      } else if (key == "shap_sampled_coalitions") {
        cfg.shap_sampled_coalitions = value.get<std::size_t>();
      } else if (key == "permute_test_set") {
        cfg.permute_test_set = value.get<bool>();
      } else if (key == "override_admission") {
        cfg.override_admission = value.get<bool>();
      } else if (key == "threads") {
        cfg.threads = value.get<std::size_t>();
      }
    }
  } catch (const json::exception& e) {
    throw UsageError(std::string("config has a value of the wrong type: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string manifest_json(const AuditResult& result, const InputRecord& input) {
  json j;
  j["tool"] = "fiagree";
  j["version"] = std::string(kToolVersion);
  j["dataset"] = result.dataset;
  j["input"] = {{"path", input.path},
                {"label_column", input.label_column},
                {"positive_label", input.positive_label},
                {"digest", input.digest}};
  j["config"] = config_json(result.config);
  j["admission"] = {{"admitted", result.admission.admitted}, {"reason", result.admission.reason}};
  j["input_features"] = result.input_features;
  j["features"] = result.features;
  j["removed_features"] = result.removed_features;
  json iterations = json::array();
  for (const auto& it : result.iterations) {
    iterations.push_back({{"iteration", it.iteration}, {"seed", it.seed}, {"n_train", it.n_train}, {"n_test", it.n_test}});
  }
  j["iterations"] = iterations;
  json classifiers = json::array();
  for (const auto& c : result.classifiers) {
    std::vector<std::string> specs;
    for (const auto& s : c.specs) specs.push_back(s.describe());
    classifiers.push_back({{"classifier", std::string(kind_name(c.kind))},
                           {"gate_passed", c.gate.passed},
                           {"median_auc", c.gate.median_auc},
                           {"median_ifa", c.gate.median_ifa},
                           {"gate_reason", c.gate.reason},
                           {"specs", specs}});
  }
  j["classifiers"] = classifiers;
  if (result.interactions) {
    j["interaction_counts"] = {{"h>=0.3", result.interactions->count_at_least(kInteractionFlagLow)},
                               {"h>=0.5", result.interactions->count_at_least(kInteractionFlagHigh)}};
  }
  j["warnings"] = result.warnings;
  return j.dump(2) + "\n";
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move " + tmp.string() + " into place: " + ec.message());
  }
}

void write_bundle(const AuditResult& result, const InputRecord& input, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
  write_atomic(dir / "ranks.csv", write_csv(ranks_table(result.ranks)));
  const auto reports = result.all_reports();
  write_atomic(dir / "agreement.csv", write_csv(agreement_table(reports)));
  write_atomic(dir / "perf.csv", write_csv(perf_table(result)));
  CsvTable inter{{"dataset", "feature", "median_h", "flags"}, {}};
  if (result.interactions) inter = interactions_table(result.dataset, *result.interactions);
  write_atomic(dir / "interactions.csv", write_csv(inter));
  write_atomic(dir / "manifest.json", manifest_json(result, input));
}

std::string content_digest(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace fiagree
