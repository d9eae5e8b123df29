#pragma once

#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "irx/corpus.hpp"
#include "irx/decimal.hpp"
#include "irx/gateway.hpp"
#include "irx/promptkit.hpp"
#include "irx/schema.hpp"

namespace irx {

enum class ParseStatus { Ok, Repaired, Failed };

std::string_view to_string(ParseStatus s);  // "ok" / "repaired" / "failed"
ParseStatus parse_parse_status(std::string_view s);

struct ParseResult {
  FieldValues values;  // every schema key unless status is Failed
  ParseStatus status = ParseStatus::Failed;
  std::vector<std::string> warnings;
};

// Finds the answer object in a model response and maps it onto the schema.
// Never throws.
ParseResult parse_response(std::string_view text, const ExtractionSchema& schema);

// Best-effort conversion of near-JSON (code fences, prose around the object,
// single quotes, unquoted keys, trailing commas, Python literals, truncated
// tails) into a JSON object. Returns nullopt when no object can be recovered.
// `repaired` is set when the input was not a strict JSON object.
std::optional<nlohmann::json> recover_json_object(std::string_view text, bool& repaired);

// "H:MM", "HH:MM", "HH:MM:SS", with optional AM/PM and a trailing zone
// abbreviation, to "HH:MM:SS" (24-hour). Anything else gives nullopt.
std::optional<std::string> normalize_time(std::string_view raw);

struct CategoryMatch {
  LabelValue value;
  std::vector<std::string> out_of_vocabulary;  // kept verbatim in `value`
};

// Case-insensitive, trimmed match into the vocabulary. For multiclass fields a
// JSON list, a comma-separated string, or a single value are accepted.
// Placeholders such as "N/A" that are not vocabulary entries become absent.
CategoryMatch normalize_category(const nlohmann::json& raw, const Vocabulary& vocabulary, bool multiclass);

struct ExchangeStats {
  std::int64_t input_tokens = 0;
  std::int64_t output_tokens = 0;
  std::int64_t latency_ms = 0;
  Usd cost;         // token cost of the exchange, replayed or not
  Usd billed_cost;  // what this run paid: zero for cache hits unless replays are billed
  bool from_cache = false;
  bool tokens_estimated = false;
};

struct ExtractionRecord {
  std::string report_id;
  std::string model_alias;
  StrategyLabel strategy = StrategyLabel::FullZS;
  Provider provider = Provider::Aws;
  FieldValues values;
  ParseStatus parse_status = ParseStatus::Failed;
  std::string raw_response_ref;  // gateway cache key
  ExchangeStats stats;
  std::string failure;  // gateway or composition error; empty when a response arrived
  std::vector<std::string> warnings;
};

nlohmann::ordered_json to_json(const ExtractionRecord& r);
ExtractionRecord record_from_json(const nlohmann::json& j);

// Orders by report, then model alias, then strategy table order.
bool record_less(const ExtractionRecord& a, const ExtractionRecord& b);

// JSONL store of extraction records. append() is thread-safe and flushes
// each line; finalize() rewrites the file sorted with one line per cell.
class RecordStore {
 public:
  // With `resume` the existing file is loaded (later lines win); otherwise it
  // is truncated.
  RecordStore(std::string path, bool resume);

  const std::vector<ExtractionRecord>& existing() const { return existing_; }
  void append(const ExtractionRecord& r);
  void finalize(std::vector<ExtractionRecord> records);

 private:
  std::string path_;
  std::vector<ExtractionRecord> existing_;
  std::mutex mutex_;
};

std::vector<ExtractionRecord> read_records(const std::string& path);
void write_records(const std::string& path, std::vector<ExtractionRecord> records);

struct MatrixOptions {
  std::string out_path;  // empty: keep records in memory only
  bool resume = false;
  int workers = 4;
  GenerationSettings settings;
  bool bill_replays = false;
  std::vector<FewShotExample> examples;
  PromptTemplates templates = PromptTemplates::defaults();
  std::function<void(const ExtractionRecord&, std::size_t done, std::size_t total)> on_record;
};

// One record per (labeled report, model, strategy), sorted with record_less.
// Throws ConfigError when a labeled report is missing from the dataset, when a
// few-shot example is also an evaluation report, or when a few-shot strategy
// is requested without examples. Gateway errors on a cell produce a failed
// record and the run continues.
std::vector<ExtractionRecord> run_matrix(const std::vector<IncidentReport>& dataset,
                                         const std::vector<GroundTruthLabel>& labels,
                                         const std::vector<ModelProfile>& models,
                                         const std::vector<StrategyLabel>& strategies,
                                         const ExtractionSchema& schema, Gateway& gateway,
                                         const MatrixOptions& options = {});

}  // namespace irx
