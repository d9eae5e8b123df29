#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "irx/schema.hpp"
#include "irx/types.hpp"

namespace irx {

using Date = std::chrono::year_month_day;

struct IncidentReport {
  std::string report_id;
  Provider provider = Provider::Aws;
  std::string title;
  std::string status;
  std::string body_text;
  std::optional<Date> published_date;
  std::size_t word_count = 0;
  std::string source_path;

  friend bool operator==(const IncidentReport&, const IncidentReport&) = default;
};

// "YYYY-MM-DD".
std::string format_date(const Date& d);
// Accepts ISO dates (optionally followed by a time), "Month D, YYYY",
// "Mon D YYYY", "D Month YYYY" and "MM/DD/YYYY". Unparseable -> nullopt.
std::optional<Date> parse_date(std::string_view s);

// Whitespace tokens in title + status + body_text.
std::size_t compute_word_count(const IncidentReport& r);

// Hex SHA-256 over provider, title, status, date and full body. Equal for
// byte-identical entries; the dedup key of clean().
std::string content_hash(const IncidentReport& r);

// provider code + "-" + first 16 hex chars of SHA-256(title | date | first
// 512 bytes of body).
std::string make_report_id(const IncidentReport& r);

// Fills word_count and report_id.
IncidentReport finalize_report(IncidentReport r);

nlohmann::ordered_json to_json(const IncidentReport& r);
IncidentReport report_from_json(const nlohmann::json& j);

// dataset.jsonl: one IncidentReport per line, keys exactly as the struct.
std::vector<IncidentReport> read_dataset(const std::string& path);
std::string serialize_dataset(const std::vector<IncidentReport>& reports);
void write_dataset(const std::string& path, const std::vector<IncidentReport>& reports);

// Per-provider extraction rules. A field rule picks a node by selector (HTML)
// or a key (structured input), optionally reads an attribute, and optionally
// narrows the text with a regex (first capture group when present).
struct FieldRule {
  std::string selector;   // HTML selector relative to the entry, or JSON key
  std::string attribute;  // HTML attribute to read instead of text
  std::string regex;
  bool empty() const { return selector.empty(); }
  friend bool operator==(const FieldRule&, const FieldRule&) = default;
};

struct ExtractionRules {
  Provider provider = Provider::Aws;
  // HTML input.
  std::string html_entry;
  FieldRule html_title, html_status, html_body, html_date;
  // Structured input (JSON array, JSON object holding an array, or JSONL).
  std::string json_entries;  // key of the array inside a top-level object
  FieldRule json_title, json_status, json_body, json_date;

  static ExtractionRules defaults(Provider p);
  friend bool operator==(const ExtractionRules&, const ExtractionRules&) = default;
  static ExtractionRules from_json(const nlohmann::json& j);
  nlohmann::ordered_json to_json() const;
  // Reads <dir>/<provider code>.json, falling back to defaults.
  static ExtractionRules load(const std::string& dir, Provider p);
};

struct ArchiveParse {
  std::vector<IncidentReport> reports;
  std::vector<std::string> warnings;
};

// One IncidentReport per entry found in the archived page. Throws
// IngestError naming the path when the file cannot be read; an archive with
// no entries yields an empty list and a warning.
ArchiveParse parse_provider_archive(const std::string& path, Provider provider,
                                    const ExtractionRules& rules);
ArchiveParse parse_provider_archive(const std::string& path, Provider provider);
// Same, over in-memory content; `source` is recorded as source_path.
ArchiveParse parse_archive_content(std::string_view content, const std::string& source,
                                   Provider provider, const ExtractionRules& rules);

// Drops records with empty/"None" body or title, removes exact duplicates
// (same content hash), makes report_ids unique and sorts by report_id.
// Idempotent.
std::vector<IncidentReport> clean(std::vector<IncidentReport> records);

struct GroundTruthLabel {
  std::string report_id;
  FieldValues values;

  friend bool operator==(const GroundTruthLabel&, const GroundTruthLabel&) = default;
};

// Checks keys, vocabulary membership and the HH:MM:SS pattern. Throws
// ValidationError naming the report and field.
void validate_label(const GroundTruthLabel& label, const ExtractionSchema& schema);

bool is_time_of_day(std::string_view s);

nlohmann::ordered_json to_json(const GroundTruthLabel& label, const ExtractionSchema& schema);
GroundTruthLabel label_from_json(const nlohmann::json& j, const ExtractionSchema& schema);

std::vector<GroundTruthLabel> parse_labels(std::string_view content,
                                           const ExtractionSchema& schema);
std::vector<GroundTruthLabel> load_labels(const std::string& path,
                                          const ExtractionSchema& schema);
std::string serialize_labels(const std::vector<GroundTruthLabel>& labels,
                             const ExtractionSchema& schema);

// Two label values agree when they are equal under exact-match normalization
// (absent agrees only with absent).
bool labels_agree(const LabelValue& a, const LabelValue& b);

// Per-field fraction of reports on which the two annotators agree. Throws
// ValidationError listing the symmetric difference when the report_id sets
// differ.
std::map<std::string, double> agreement(const std::vector<GroundTruthLabel>& a,
                                        const std::vector<GroundTruthLabel>& b,
                                        const ExtractionSchema& schema);

}  // namespace irx
