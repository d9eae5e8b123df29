#pragma once

#include <optional>
#include <string>
#include <vector>

#include "irx/evaluation.hpp"
#include "irx/gateway.hpp"

namespace irx {

struct AccuracyCell {
  std::optional<double> value;  // fraction; empty when the scorecard lacks the field
  bool best = false;
  bool worst = false;
};

struct AccuracyColumn {
  std::string model_alias;
  StrategyLabel strategy;
};

// Fields x (model, strategy) grid for one dataset. Every row marks all cells
// that reach its maximum as best and all that reach its minimum as worst, so a
// row of equal values is marked both ways. Values within 1e-9 count as equal.
struct AccuracyTable {
  Provider dataset = Provider::Aws;
  std::vector<AccuracyColumn> columns;
  std::vector<std::string> fields;
  std::vector<Metric> metrics;
  std::vector<std::vector<AccuracyCell>> cells;  // [field][column]
  std::vector<AccuracyCell> average;             // mean of the rows shown, per column

  std::size_t rows() const { return fields.size(); }
  // Percentages with two decimals; **best**, _worst_.
  std::string to_markdown() const;
  // Long format: dataset,field,metric,model_alias,strategy,value,best,worst.
  std::string to_csv() const;
};

// Columns keep the order in which scorecards appear. With `metric` set only
// fields scored by that metric are shown and the average row covers just
// those. Throws ReportError when no scorecard matches the dataset.
AccuracyTable accuracy_table(const std::vector<Scorecard>& cards, Provider dataset,
                             std::optional<Metric> metric = std::nullopt);

struct TradeoffRow {
  Provider dataset = Provider::Aws;
  std::string model_alias;
  StrategyLabel strategy = StrategyLabel::FullZS;
  double average_accuracy = 0.0;
  Usd total_cost_usd;
  double mean_latency_ms = 0.0;
  std::optional<Tier> tier;  // empty for aliases the registry does not know
  std::size_t n_records = 0;
};

// One row per scorecard, sorted by dataset, cost, alias, then strategy.
std::vector<TradeoffRow> tradeoff_rows(const std::vector<Scorecard>& cards, const ModelRegistry& registry);
std::string tradeoff_csv(const std::vector<TradeoffRow>& rows);

// Ratio of the highest to the lowest total cost among the rows. Throws
// ReportError when there are no rows or the cheapest row costs nothing.
long double cost_ratio(const std::vector<TradeoffRow>& rows);

struct Weights {
  double accuracy = 1.0;
  double cost = 1.0;
  double latency = 1.0;
};

Weights parse_weights(std::string_view s);  // "a,c,l"

struct Recommendation {
  TradeoffRow row;
  double score = 0.0;  // weighted, divided by the weight sum: in [0, 1]
  std::size_t rank = 0;  // 1-based, within the dataset
  std::string rationale;
};

// Heuristic ranking within each dataset: min-max normalize accuracy, cost and
// latency, then score = wa*acc + wc*(1 - cost) + wl*(1 - latency). Ties go to
// the lower cost, then alias order. A dataset with a single row is returned
// with score 1. Throws ReportError for negative or all-zero weights.
std::vector<Recommendation> recommend(const std::vector<TradeoffRow>& rows, const Weights& weights);
std::string recommendations_markdown(const std::vector<Recommendation>& recs);

// Accuracy against total cost, one panel per dataset, marker area growing with
// mean latency.
std::string tradeoff_svg(const std::vector<TradeoffRow>& rows);

}  // namespace irx
