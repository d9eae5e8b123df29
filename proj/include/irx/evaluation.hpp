#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "irx/corpus.hpp"
#include "irx/decimal.hpp"
#include "irx/extraction.hpp"
#include "irx/schema.hpp"

namespace irx {

// 1 when both values are absent or share a match key, else 0.
double exact_match(const LabelValue& pred, const LabelValue& gold);

// Set F1 over normalized elements; empty vs empty is 1, one side empty is 0.
double token_f1(const CategorySet& pred, const CategorySet& gold);
// Sets compare element-wise; strings compare as bags of word tokens; absent
// counts as empty.
double token_f1(const LabelValue& pred, const LabelValue& gold);

// Lowercased alphanumeric runs, the tokenization used for semantic scoring.
std::vector<std::string> semantic_tokens(std::string_view text);

// Maps tokens to vectors. Implementations must be safe to call from several
// threads and return finite entries.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::string name() const = 0;
  virtual int dimension() const = 0;
  // One row per token. Throws ScoringError when the backend cannot answer.
  virtual Eigen::MatrixXd embed(const std::vector<std::string>& tokens) const = 0;
};

// Deterministic signed feature hashing of character trigrams of "<token>"
// plus the whole token. Needs no model files or network, so results are
// reproducible bit for bit.
class HashingEmbedding final : public EmbeddingBackend {
 public:
  explicit HashingEmbedding(int dimension = 256);
  std::string name() const override;
  int dimension() const override { return dim_; }
  Eigen::MatrixXd embed(const std::vector<std::string>& tokens) const override;

 private:
  int dim_;
};

// Static word vectors from a whitespace-separated text file ("word v1 v2 ...",
// the GloVe/word2vec text layout). Unknown words map to the zero vector.
class WordVectorEmbedding final : public EmbeddingBackend {
 public:
  explicit WordVectorEmbedding(const std::string& path);
  std::string name() const override { return name_; }
  int dimension() const override { return dim_; }
  Eigen::MatrixXd embed(const std::vector<std::string>& tokens) const override;
  std::size_t vocabulary_size() const { return table_.size(); }

 private:
  std::string name_;
  int dim_ = 0;
  std::unordered_map<std::string, Eigen::VectorXd> table_;
};

// Any server speaking the OpenAI-style POST /v1/embeddings protocol, remote
// or local (e.g. a sentence-transformers or BERT server). Token vectors are
// memoized per process.
class RemoteEmbedding final : public EmbeddingBackend {
 public:
  RemoteEmbedding(std::string url, std::string model, std::string api_key,
                  std::shared_ptr<HttpTransport> transport, int dimension_hint = 0);
  std::string name() const override { return "remote:" + model_; }
  int dimension() const override;
  Eigen::MatrixXd embed(const std::vector<std::string>& tokens) const override;

 private:
  std::string url_, model_, api_key_;
  std::shared_ptr<HttpTransport> transport_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, Eigen::VectorXd> memo_;
  mutable int dim_;
};

// Greedy-matching semantic F1 over token embeddings: precision is the mean
// over predicted tokens of the best cosine against gold tokens, recall the
// converse, cosines clamped to [0, 1]. Both empty gives 1, one empty gives 0.
double semantic_f1(std::string_view pred, std::string_view gold, const EmbeddingBackend& backend);

struct FieldScore {
  std::string field;
  Metric metric = Metric::EM;
  double value = 0.0;  // fraction in [0, 1]
  std::size_t n = 0;
};

struct Scorecard {
  Provider dataset = Provider::Aws;
  std::string model_alias;
  StrategyLabel strategy = StrategyLabel::FullZS;
  std::vector<FieldScore> field_scores;  // schema order
  double average = 0.0;                  // unweighted mean of field values
  Usd total_cost;
  double mean_latency_ms = 0.0;  // over cells that got a response
  std::int64_t total_input_tokens = 0;
  std::int64_t total_output_tokens = 0;
  std::size_t n_records = 0;
  std::size_t failed_records = 0;
  std::size_t excluded_pairs = 0;  // semantic pairs dropped after backend errors

  const FieldScore* find(std::string_view field) const;
};

double mean(const std::vector<double>& values);

// Groups records by (model, strategy) and scores each field with its metric.
// Failed records score 0 on every field. Throws ScoringError for a record
// without a label or from another dataset.
std::vector<Scorecard> score_dataset(const std::vector<ExtractionRecord>& records,
                                     const std::vector<GroundTruthLabel>& labels, const ExtractionSchema& schema,
                                     const EmbeddingBackend& backend);

nlohmann::ordered_json to_json(const Scorecard& s);
Scorecard scorecard_from_json(const nlohmann::json& j);

// One row per scorecard. Field columns are "<field>[<metric>]" (fraction with
// ten decimals) and "<field>[n]"; fields a dataset lacks are left empty.
std::string scorecards_to_csv(const std::vector<Scorecard>& cards);
std::vector<Scorecard> scorecards_from_csv(std::string_view content);
std::string scorecards_to_jsonl(const std::vector<Scorecard>& cards);
std::vector<Scorecard> scorecards_from_jsonl(std::string_view content);
// Picks the format from the extension: ".csv" or anything else as JSONL.
std::vector<Scorecard> load_scorecards(const std::string& path);

}  // namespace irx
