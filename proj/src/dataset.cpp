#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "fiagree/data.hpp"

namespace fiagree {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

struct Record {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based line where the record starts
};

std::vector<Record> read_records(std::string_view text) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = 1;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].empty();
    if (!blank) records.push_back(std::move(current));
    current = Record{};
    current.line = line;
  };

  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (field_started && !trim(field).empty()) {
          throw DataError("line " + std::to_string(line) + ": stray quote inside unquoted field");
        }
        field.clear();
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field at end of input");
  if (field_started || !field.empty() || !current.fields.empty()) end_record();
  return records;
}

}  // namespace

std::size_t Dataset::n_positive() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

DatasetMeta Dataset::meta() const {
  DatasetMeta m;
  m.n_rows = n_rows();
  m.n_features = n_features();
  const double pos = static_cast<double>(n_positive());
  m.defective_ratio = m.n_rows == 0 ? 0.0 : 100.0 * pos / static_cast<double>(m.n_rows);
  m.epv = m.n_features == 0 ? 0.0 : pos / static_cast<double>(m.n_features);
  return m;
}

void Dataset::validate(std::size_t min_rows, std::size_t min_features) const {
  if (labels.size() != n_rows()) {
    throw DataError("dataset '" + name + "': " + std::to_string(n_rows()) + " feature rows but " +
                    std::to_string(labels.size()) + " labels");
  }
  if (feature_names.size() != n_features()) {
    throw DataError("dataset '" + name + "': feature name count does not match column count");
  }
  if (n_rows() < min_rows) {
    throw DataError("dataset '" + name + "': needs at least " + std::to_string(min_rows) +
                    " rows, has " + std::to_string(n_rows()));
  }
  if (n_features() < min_features) {
    throw DataError("dataset '" + name + "': needs at least " + std::to_string(min_features) +
                    " features, has " + std::to_string(n_features()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& f : feature_names) {
    if (!seen.insert(f).second) throw DataError("dataset '" + name + "': duplicate feature '" + f + "'");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("dataset '" + name + "': labels must be 0 or 1");
  }
  if (!features.allFinite()) throw DataError("dataset '" + name + "': non-finite feature value");
}

std::optional<std::size_t> Dataset::find_feature(std::string_view feature) const {
  for (std::size_t j = 0; j < feature_names.size(); ++j) {
    if (feature_names[j] == feature) return j;
  }
  return std::nullopt;
}

std::size_t Dataset::feature_index(std::string_view feature) const {
  if (auto j = find_feature(feature)) return *j;
  throw DataError("dataset '" + name + "': no feature named '" + std::string(feature) + "'");
}

std::vector<double> Dataset::column(std::size_t j) const {
  std::vector<double> out(n_rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

Dataset Dataset::select_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.name = name;
  out.feature_names = feature_names;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= n_rows()) throw InvariantError("select_rows: row index out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(static_cast<Eigen::Index>(rows[i]));
    out.labels[i] = labels[rows[i]];
  }
  return out;
}

Dataset Dataset::select_features(std::span<const std::string> names) const {
  Dataset out;
  out.name = name;
  out.labels = labels;
  out.feature_names.assign(names.begin(), names.end());
  out.features.resize(features.rows(), static_cast<Eigen::Index>(names.size()));
  for (std::size_t k = 0; k < names.size(); ++k) {
    out.features.col(static_cast<Eigen::Index>(k)) = features.col(static_cast<Eigen::Index>(feature_index(names[k])));
  }
  return out;
}

Dataset Dataset::drop_features(std::span<const std::string> names) const {
  std::set<std::string> drop(names.begin(), names.end());
  std::vector<std::string> keep;
  for (const auto& f : feature_names) {
    if (!drop.count(f)) keep.push_back(f);
  }
  return select_features(keep);
}

std::vector<std::string> split_csv_record(std::string_view line) {
  auto records = read_records(line);
  if (records.empty()) return {};
  if (records.size() > 1) throw DataError("expected a single CSV record");
  return std::move(records.front().fields);
}

Dataset parse_csv(std::string_view text, std::string_view label_column,
                  std::string_view positive_label, std::string name) {
  auto records = read_records(text);
  if (records.empty()) throw DataError(name + ": empty file (header row required)");
  const auto& header = records.front().fields;

  std::optional<std::size_t> label_pos;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (trim(header[c]) == label_column) label_pos = c;
  }
  if (!label_pos) {
    throw DataError(name + ": label column '" + std::string(label_column) + "' not found in header");
  }

  Dataset d;
  d.name = std::move(name);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != *label_pos) d.feature_names.emplace_back(trim(header[c]));
  }

  const std::size_t n = records.size() - 1;
  const std::size_t p = d.feature_names.size();
  d.features.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  d.labels.resize(n);

  const auto positive_number = parse_number(positive_label);
  std::set<std::string> label_values;

  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    const std::string where = d.name + ": line " + std::to_string(rec.line);
    if (rec.fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) + " fields, found " +
                      std::to_string(rec.fields.size()));
    }
    std::size_t col = 0;
    for (std::size_t c = 0; c < rec.fields.size(); ++c) {
      const std::string_view cell = trim(rec.fields[c]);
      const std::string column_name(trim(header[c]));
      if (cell.empty()) {
        throw DataError(where + ", column '" + column_name + "': empty cell");
      }
      if (c == *label_pos) {
        label_values.emplace(cell);
        bool positive = cell == positive_label;
        if (!positive && positive_number) {
          auto v = parse_number(cell);
          positive = v && *v == *positive_number;
        }
        d.labels[r] = positive ? 1 : 0;
        continue;
      }
      auto value = parse_number(cell);
      if (!value) {
        throw DataError(where + ", column '" + column_name + "': cannot parse '" +
                        std::string(cell) + "' as a number");
      }
      d.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(col++)) = *value;
    }
  }

  if (label_values.size() > 2) {
    std::string listed;
    for (const auto& v : label_values) listed += (listed.empty() ? "" : ", ") + v;
    throw DataError(d.name + ", column '" + std::string(label_column) +
                    "': label column is not binary (values: " + listed + ")");
  }
  if (n > 0 && d.n_positive() == 0) {
    throw DataError(d.name + ", column '" + std::string(label_column) + "': positive label '" +
                    std::string(positive_label) + "' does not occur");
  }
  d.validate();
  return d;
}

Dataset load_csv(const std::filesystem::path& path, std::string_view label_column,
                 std::string_view positive_label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), label_column, positive_label, path.stem().string());
}

AdmissionResult admission_check(const DatasetMeta& meta) {
  AdmissionResult r;
  if (meta.defective_ratio >= kMaxDefectiveRatio) {
    r.admitted = false;
    r.reason = "defective ratio " + std::to_string(meta.defective_ratio) + " is not below " +
               std::to_string(kMaxDefectiveRatio);
  }
  if (meta.epv < kMinEpv) {
    r.admitted = false;
    if (!r.reason.empty()) r.reason += "; ";
    r.reason += "EPV " + std::to_string(meta.epv) + " is below " + std::to_string(kMinEpv);
  }
  return r;
}

}  // namespace fiagree
