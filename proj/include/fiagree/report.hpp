#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fiagree/harness.hpp"

namespace fiagree {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Fields containing a comma, quote or line break are quoted; records end in '\n'.
std::string write_csv(const CsvTable& table);
CsvTable read_csv_table(std::string_view text);

CsvTable ranks_table(std::span<const RankList> ranks);
// Rank lists in file order, grouped by (dataset, classifier, method).
std::vector<RankList> parse_ranks_csv(std::string_view text);

CsvTable agreement_table(std::span<const AgreementReport> reports);
CsvTable perf_table(const AuditResult& result);
CsvTable interactions_table(const std::string& dataset, const InteractionProfile& profile);

std::string config_to_json(const AuditConfig& cfg);
// Keys absent from `text` keep their value from `base`; unknown keys throw UsageError.
AuditConfig config_from_json(std::string_view text, const AuditConfig& base = {});

// How the audited dataset was obtained, echoed into the manifest.
struct InputRecord {
  std::string path;
  std::string label_column;
  std::string positive_label;
  std::string digest;  // content_digest of the input bytes
};

std::string manifest_json(const AuditResult& result, const InputRecord& input);

// Writes to a temporary sibling and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

// ranks.csv, agreement.csv, perf.csv, interactions.csv and manifest.json.
void write_bundle(const AuditResult& result, const InputRecord& input, const std::filesystem::path& dir);

// FNV-1a 64-bit digest as 16 hex digits.
std::string content_digest(std::string_view bytes);

}  // namespace fiagree
