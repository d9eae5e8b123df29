#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include <spdlog/spdlog.h>

#include "irx/error.hpp"
#include "irx/extraction.hpp"
#include "irx/text.hpp"

namespace irx {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

int strategy_rank(StrategyLabel s) {
  auto m = strategy_matrix();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].label == s) return static_cast<int>(i);
  return static_cast<int>(m.size());
}

std::string cell_id(const std::string& report, const std::string& alias, StrategyLabel s) {
  return report + '\x1f' + alias + '\x1f' + std::string(to_string(s));
}

}  // namespace

bool record_less(const ExtractionRecord& a, const ExtractionRecord& b) {
  if (a.report_id != b.report_id) return a.report_id < b.report_id;
  if (a.model_alias != b.model_alias) return a.model_alias < b.model_alias;
  return strategy_rank(a.strategy) < strategy_rank(b.strategy);
}

ojson to_json(const ExtractionRecord& r) {
  ojson values = ojson::object();
  for (const auto& [k, v] : r.values) values[k] = v.to_json();
  return ojson{{"report_id", r.report_id},
               {"model_alias", r.model_alias},
               {"strategy", to_string(r.strategy)},
               {"provider", to_string(r.provider)},
               {"parse_status", to_string(r.parse_status)},
               {"values", values},
               {"raw_response_ref", r.raw_response_ref},
               {"stats",
                {{"input_tokens", r.stats.input_tokens},
                 {"output_tokens", r.stats.output_tokens},
                 {"latency_ms", r.stats.latency_ms},
                 {"cost", r.stats.cost.str()},
                 {"billed_cost", r.stats.billed_cost.str()},
                 {"from_cache", r.stats.from_cache},
                 {"tokens_estimated", r.stats.tokens_estimated}}},
               {"failure", r.failure},
               {"warnings", r.warnings}};
}

ExtractionRecord record_from_json(const json& j) {
  try {
    ExtractionRecord r;
    r.report_id = j.at("report_id").get<std::string>();
    r.model_alias = j.at("model_alias").get<std::string>();
    r.strategy = parse_strategy(j.at("strategy").get<std::string>());
    r.provider = parse_provider(j.at("provider").get<std::string>());
    r.parse_status = parse_parse_status(j.at("parse_status").get<std::string>());
    for (const auto& [k, v] : j.at("values").items()) r.values.emplace(k, LabelValue::from_json(v));
    r.raw_response_ref = j.value("raw_response_ref", "");
    const auto& s = j.at("stats");
    r.stats.input_tokens = s.at("input_tokens").get<std::int64_t>();
    r.stats.output_tokens = s.at("output_tokens").get<std::int64_t>();
    r.stats.latency_ms = s.at("latency_ms").get<std::int64_t>();
    r.stats.cost = Usd::parse(s.at("cost").get<std::string>());
    r.stats.billed_cost = Usd::parse(s.value("billed_cost", "0"));
    r.stats.from_cache = s.value("from_cache", false);
    r.stats.tokens_estimated = s.value("tokens_estimated", false);
    r.failure = j.value("failure", "");
    if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
    return r;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed extraction record: ") + e.what());
  }
}

std::vector<ExtractionRecord> read_records(const std::string& path) {
  std::vector<ExtractionRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(text::read_file(path), '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ValidationError(path + ":" + std::to_string(line_no) + ": not a JSON record");
    out.push_back(record_from_json(j));
  }
  return out;
}

void write_records(const std::string& path, std::vector<ExtractionRecord> records) {
  std::sort(records.begin(), records.end(), record_less);
  std::string content;
  for (const auto& r : records) content += to_json(r).dump() + "\n";
  text::write_file_atomic(path, content);
}

RecordStore::RecordStore(std::string path, bool resume) : path_(std::move(path)) {
  namespace fs = std::filesystem;
  if (resume && fs::exists(path_)) {
    // A killed run may leave a partial last line; skip what does not parse.
    std::map<std::string, ExtractionRecord> latest;
    std::size_t line_no = 0;
    for (const auto& line : text::split(text::read_file(path_), '\n')) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      json j = json::parse(line, nullptr, false);
      if (j.is_discarded()) {
        spdlog::warn("{}:{}: skipping unreadable record line", path_, line_no);
        continue;
      }
      auto r = record_from_json(j);
      latest.insert_or_assign(cell_id(r.report_id, r.model_alias, r.strategy), std::move(r));
    }
    for (auto& [_, r] : latest) existing_.push_back(std::move(r));
  } else {
    text::write_file_atomic(path_, "");
  }
}

void RecordStore::append(const ExtractionRecord& r) {
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  out << to_json(r).dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot append to " + path_);
}

void RecordStore::finalize(std::vector<ExtractionRecord> records) {
  std::lock_guard lock(mutex_);
  write_records(path_, std::move(records));
}

std::vector<ExtractionRecord> run_matrix(const std::vector<IncidentReport>& dataset,
                                         const std::vector<GroundTruthLabel>& labels,
                                         const std::vector<ModelProfile>& models,
                                         const std::vector<StrategyLabel>& strategies,
                                         const ExtractionSchema& schema, Gateway& gateway,
                                         const MatrixOptions& options) {
  std::map<std::string, const IncidentReport*> by_id;
  for (const auto& r : dataset) by_id.emplace(r.report_id, &r);
  std::set<std::string> example_ids;
  for (const auto& e : options.examples) example_ids.insert(e.report_id);

  std::vector<const IncidentReport*> reports;
  std::set<std::string> seen;
  for (const auto& l : labels) {
    auto it = by_id.find(l.report_id);
    if (it == by_id.end()) throw ConfigError("labeled report " + l.report_id + " is not in the dataset");
    if (example_ids.count(l.report_id))
      throw ConfigError("report " + l.report_id + " is both a few-shot example and an evaluation report");
    if (!seen.insert(l.report_id).second) throw ConfigError("duplicate label for report " + l.report_id);
    reports.push_back(it->second);
  }
  for (auto s : strategies)
    if (strategy(s).few_shot() && options.examples.empty())
      throw ConfigError(std::string(to_string(s)) + " needs few-shot examples");
  {
    std::set<std::string> aliases;
    for (const auto& m : models)
      if (!aliases.insert(m.alias).second) throw ConfigError("duplicate model alias " + m.alias);
  }

  std::optional<RecordStore> store;
  std::map<std::string, ExtractionRecord> done;
  if (!options.out_path.empty()) {
    store.emplace(options.out_path, options.resume);
    for (const auto& r : store->existing())
      if (r.failure.empty()) done.emplace(cell_id(r.report_id, r.model_alias, r.strategy), r);
  }

  struct Cell {
    const IncidentReport* report;
    const ModelProfile* model;
    StrategyLabel strategy;
  };
  std::vector<Cell> todo;
  std::vector<ExtractionRecord> results;
  for (const auto* r : reports)
    for (const auto& m : models)
      for (auto s : strategies) {
        auto it = done.find(cell_id(r->report_id, m.alias, s));
        if (it != done.end())
          results.push_back(it->second);
        else
          todo.push_back({r, &m, s});
      }
  const std::size_t total = reports.size() * models.size() * strategies.size();
  if (!done.empty()) spdlog::info("resuming: {} of {} cells already recorded", results.size(), total);

  std::vector<ExtractionRecord> fresh(todo.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{results.size()};
  std::mutex progress_mutex;

  auto work = [&] {
    for (std::size_t i = next++; i < todo.size(); i = next++) {
      const auto& cell = todo[i];
      ExtractionRecord rec;
      rec.report_id = cell.report->report_id;
      rec.model_alias = cell.model->alias;
      rec.strategy = cell.strategy;
      rec.provider = schema.provider();
      try {
        auto bundle = compose(*cell.report, cell.strategy, schema, options.examples, options.templates);
        auto ex = gateway.invoke(bundle, *cell.model, options.settings);
        rec.raw_response_ref = ex.cache_key;
        rec.stats.input_tokens = ex.input_tokens;
        rec.stats.output_tokens = ex.output_tokens;
        rec.stats.latency_ms = ex.latency_ms;
        rec.stats.cost = cost(ex, *cell.model);
        rec.stats.billed_cost = ex.from_cache && !options.bill_replays ? Usd{} : rec.stats.cost;
        rec.stats.from_cache = ex.from_cache;
        rec.stats.tokens_estimated = ex.tokens_estimated;
        auto parsed = parse_response(ex.response_text, schema);
        rec.values = std::move(parsed.values);
        rec.parse_status = parsed.status;
        rec.warnings = std::move(parsed.warnings);
      } catch (const Error& e) {
        rec.values.clear();
        rec.parse_status = ParseStatus::Failed;
        rec.failure = e.what();
        if (auto* refusal = dynamic_cast<const RefusalError*>(&e))
          rec.failure += std::string(": ") + refusal->provider_message();
        spdlog::warn("{} / {} / {}: {}", rec.report_id, rec.model_alias, to_string(rec.strategy), rec.failure);
      }
      if (store) store->append(rec);
      auto n = ++finished;
      if (options.on_record) {
        std::lock_guard lock(progress_mutex);
        options.on_record(rec, n, total);
      }
      fresh[i] = std::move(rec);
    }
  };
  const int workers = std::clamp<int>(options.workers, 1, 64);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < std::min<int>(workers, static_cast<int>(todo.size())); ++w) pool.emplace_back(work);
  }
  for (auto& r : fresh) results.push_back(std::move(r));
  std::sort(results.begin(), results.end(), record_less);
  if (store) store->finalize(results);
  return results;
}

}  // namespace irx
