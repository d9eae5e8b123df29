#include "irx/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "irx/error.hpp"
#include "irx/text.hpp"

namespace irx {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// ---- metrics -----------------------------------------------------------------

double exact_match(const LabelValue& pred, const LabelValue& gold) {
  if (pred.is_absent() || gold.is_absent()) return pred.is_absent() && gold.is_absent() ? 1.0 : 0.0;
  return match_key(pred) == match_key(gold) ? 1.0 : 0.0;
}

double token_f1(const CategorySet& pred, const CategorySet& gold) {
  std::set<std::string> p, g;
  for (const auto& e : pred) p.insert(text::normalize_for_match(e));
  for (const auto& e : gold) g.insert(text::normalize_for_match(e));
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  std::size_t common = 0;
  for (const auto& e : p) common += g.count(e);
  if (common == 0) return 0.0;
  double precision = static_cast<double>(common) / static_cast<double>(p.size());
  double recall = static_cast<double>(common) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

namespace {

double bag_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : gold) ++counts[t];
  std::size_t common = 0;
  for (const auto& t : pred) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  double precision = static_cast<double>(common) / static_cast<double>(pred.size());
  double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

std::string value_text(const LabelValue& v) {
  if (v.is_string()) return v.as_string();
  if (v.is_set()) return text::join(v.as_set(), " ");
  return {};
}

}  // namespace

double token_f1(const LabelValue& pred, const LabelValue& gold) {
  if ((pred.is_set() || pred.is_absent()) && (gold.is_set() || gold.is_absent()))
    return token_f1(pred.is_set() ? pred.as_set() : CategorySet{}, gold.is_set() ? gold.as_set() : CategorySet{});
  return bag_f1(text::word_tokens(value_text(pred)), text::word_tokens(value_text(gold)));
}

std::vector<std::string> semantic_tokens(std::string_view t) { return text::word_tokens(t); }

// ---- embedding backends ----------------------------------------------------

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

HashingEmbedding::HashingEmbedding(int dimension) : dim_(dimension) {
  if (dim_ <= 0) throw ConfigError("embedding dimension must be positive");
}

std::string HashingEmbedding::name() const { return "hashing-trigram-v1-d" + std::to_string(dim_); }

Eigen::MatrixXd HashingEmbedding::embed(const std::vector<std::string>& tokens) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tokens.size()), dim_);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto add = [&](std::string_view feature) {
      auto h = fnv1a(feature);
      auto col = static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(dim_));
      out(static_cast<Eigen::Index>(i), col) += (h >> 63) ? -1.0 : 1.0;
    };
    const std::string padded = "<" + tokens[i] + ">";
    for (std::size_t k = 0; k + 3 <= padded.size(); ++k) add(std::string_view(padded).substr(k, 3));
    add("w:" + tokens[i]);
  }
  return out;
}

WordVectorEmbedding::WordVectorEmbedding(const std::string& path) : name_("vectors:" + path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open word vectors " + path);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (line_no == 1 && v.size() == 1) continue;  // word2vec "count dim" header
    if (v.empty()) continue;
    if (dim_ == 0) dim_ = static_cast<int>(v.size());
    if (static_cast<int>(v.size()) != dim_)
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim_) + " values");
    for (double e : v)
      if (!std::isfinite(e)) throw ConfigError(path + ":" + std::to_string(line_no) + ": non-finite value");
    table_.emplace(text::lower(word), Eigen::Map<Eigen::VectorXd>(v.data(), dim_));
  }
  if (table_.empty()) throw ConfigError("no word vectors in " + path);
}

Eigen::MatrixXd WordVectorEmbedding::embed(const std::vector<std::string>& tokens) const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(tokens.size()), dim_);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = table_.find(tokens[i]);
    if (it != table_.end()) out.row(static_cast<Eigen::Index>(i)) = it->second.transpose();
  }
  return out;
}

RemoteEmbedding::RemoteEmbedding(std::string url, std::string model, std::string api_key,
                                 std::shared_ptr<HttpTransport> transport, int dimension_hint)
    : url_(std::move(url)),
      model_(std::move(model)),
      api_key_(std::move(api_key)),
      transport_(std::move(transport)),
      dim_(dimension_hint) {
  if (!transport_) throw ConfigError("remote embedding backend needs a transport");
}

int RemoteEmbedding::dimension() const {
  std::lock_guard lock(mutex_);
  return dim_;
}

Eigen::MatrixXd RemoteEmbedding::embed(const std::vector<std::string>& tokens) const {
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mutex_);
    std::set<std::string> seen;
    for (const auto& t : tokens)
      if (!memo_.count(t) && seen.insert(t).second) missing.push_back(t);
  }
  if (!missing.empty()) {
    HttpRequest req;
    req.url = url_;
    req.headers.emplace_back("Content-Type", "application/json");
    if (!api_key_.empty()) req.headers.emplace_back("Authorization", "Bearer " + api_key_);
    req.body = json{{"model", model_}, {"input", missing}}.dump();
    auto res = transport_->post(req);
    if (res.status != 200)
      throw ScoringError("embedding request failed with status " + std::to_string(res.status) + " " + res.error);
    json j = json::parse(res.body, nullptr, false);
    if (j.is_discarded() || !j.contains("data") || !j["data"].is_array() || j["data"].size() != missing.size())
      throw ScoringError("malformed embedding response");
    std::lock_guard lock(mutex_);
    for (std::size_t k = 0; k < j["data"].size(); ++k) {
      const auto& item = j["data"][k];
      std::size_t idx = item.value("index", k);
      if (idx >= missing.size() || !item.contains("embedding")) throw ScoringError("malformed embedding entry");
      auto v = item["embedding"].get<std::vector<double>>();
      if (dim_ == 0) dim_ = static_cast<int>(v.size());
      if (static_cast<int>(v.size()) != dim_) throw ScoringError("embedding dimension changed between calls");
      for (double e : v)
        if (!std::isfinite(e)) throw ScoringError("non-finite embedding value");
      memo_[missing[idx]] = Eigen::Map<Eigen::VectorXd>(v.data(), dim_);
    }
  }
  std::lock_guard lock(mutex_);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(tokens.size()), dim_);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto it = memo_.find(tokens[i]);
    if (it == memo_.end()) throw ScoringError("embedding missing for token '" + tokens[i] + "'");
    out.row(static_cast<Eigen::Index>(i)) = it->second.transpose();
  }
  return out;
}

double semantic_f1(std::string_view pred, std::string_view gold, const EmbeddingBackend& backend) {
  auto p = semantic_tokens(pred);
  auto g = semantic_tokens(gold);
  if (p.empty() && g.empty()) return 1.0;
  if (p.empty() || g.empty()) return 0.0;
  Eigen::MatrixXd ep = backend.embed(p);
  Eigen::MatrixXd eg = backend.embed(g);
  if (ep.rows() != static_cast<Eigen::Index>(p.size()) || eg.rows() != static_cast<Eigen::Index>(g.size()) ||
      ep.cols() != eg.cols())
    throw ScoringError("embedding backend " + backend.name() + " returned a matrix of the wrong shape");
  if (!ep.allFinite() || !eg.allFinite()) throw ScoringError("embedding backend returned non-finite values");
  auto normalize = [](Eigen::MatrixXd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      double n = m.row(i).norm();
      if (n > 0) m.row(i) /= n;
    }
  };
  normalize(ep);
  normalize(eg);
  Eigen::MatrixXd sim = (ep * eg.transpose()).cwiseMax(0.0).cwiseMin(1.0);
  // A token always matches an identical token fully, even when the backend
  // has no vector for it.
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j)
      if (p[i] == g[j]) sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0;
  double precision = sim.rowwise().maxCoeff().mean();
  double recall = sim.colwise().maxCoeff().mean();
  if (precision + recall <= 0.0) return 0.0;
  return std::clamp(2.0 * precision * recall / (precision + recall), 0.0, 1.0);
}

// ---- scoring ------------------------------------------------------------------

const FieldScore* Scorecard::find(std::string_view field) const {
  for (const auto& f : field_scores)
    if (f.field == field) return &f;
  return nullptr;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

namespace {

int strategy_rank(StrategyLabel s) {
  auto m = strategy_matrix();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].label == s) return static_cast<int>(i);
  return 99;
}

}  // namespace

std::vector<Scorecard> score_dataset(const std::vector<ExtractionRecord>& records,
                                     const std::vector<GroundTruthLabel>& labels, const ExtractionSchema& schema,
                                     const EmbeddingBackend& backend) {
  std::map<std::string, const GroundTruthLabel*> gold;
  for (const auto& l : labels) gold.emplace(l.report_id, &l);

  using Key = std::pair<std::string, int>;
  std::map<Key, std::vector<const ExtractionRecord*>> groups;
  for (const auto& r : records) {
    if (!gold.count(r.report_id))
      throw ScoringError("record " + r.report_id + " / " + r.model_alias + " has no ground-truth label");
    if (r.provider != schema.provider())
      throw ScoringError("record " + r.report_id + " belongs to " + std::string(to_string(r.provider)) +
                         ", not " + std::string(to_string(schema.provider())));
    groups[{r.model_alias, strategy_rank(r.strategy)}].push_back(&r);
  }

  std::vector<Scorecard> out;
  for (auto& [key, group] : groups) {
    // Order inside a group must not affect floating-point sums.
    std::sort(group.begin(), group.end(), [](auto* a, auto* b) { return a->report_id < b->report_id; });
    Scorecard card;
    card.dataset = schema.provider();
    card.model_alias = key.first;
    card.strategy = group.front()->strategy;
    card.n_records = group.size();
    double latency_sum = 0.0;
    std::size_t responded = 0;
    for (const auto* r : group) {
      card.total_cost += r->stats.cost;
      card.total_input_tokens += r->stats.input_tokens;
      card.total_output_tokens += r->stats.output_tokens;
      if (r->parse_status == ParseStatus::Failed) ++card.failed_records;
      if (r->failure.empty()) {
        latency_sum += static_cast<double>(r->stats.latency_ms);
        ++responded;
      }
    }
    card.mean_latency_ms = responded ? latency_sum / static_cast<double>(responded) : 0.0;

    std::vector<double> field_values;
    for (const auto& f : schema.fields()) {
      std::vector<double> scores;
      for (const auto* r : group) {
        if (r->parse_status == ParseStatus::Failed) {
          scores.push_back(0.0);
          continue;
        }
        const auto& g = gold.at(r->report_id)->values;
        auto git = g.find(f.name);
        LabelValue gv = git == g.end() ? LabelValue::absent() : git->second;
        auto pit = r->values.find(f.name);
        LabelValue pv = pit == r->values.end() ? LabelValue::absent() : pit->second;
        switch (f.metric) {
          case Metric::EM: scores.push_back(exact_match(pv, gv)); break;
          case Metric::TK: scores.push_back(token_f1(pv, gv)); break;
          case Metric::BS:
            try {
              scores.push_back(semantic_f1(value_text(pv), value_text(gv), backend));
            } catch (const ScoringError& e) {
              ++card.excluded_pairs;
              spdlog::warn("{} / {} / {}: semantic score skipped: {}", r->report_id, r->model_alias, f.name, e.what());
            }
            break;
        }
      }
      if (scores.empty()) {
        spdlog::warn("{} / {}: no scorable pairs for {}", card.model_alias, to_string(card.strategy), f.name);
        continue;
      }
      FieldScore fs{f.name, f.metric, mean(scores), scores.size()};
      field_values.push_back(fs.value);
      card.field_scores.push_back(std::move(fs));
    }
    card.average = mean(field_values);
    out.push_back(std::move(card));
  }
  return out;
}

// ---- serialization ------------------------------------------------------------

ojson to_json(const Scorecard& s) {
  ojson fields = ojson::array();
  for (const auto& f : s.field_scores)
    fields.push_back({{"field", f.field}, {"metric", to_string(f.metric)}, {"value", f.value}, {"n", f.n}});
  return ojson{{"dataset", to_string(s.dataset)},
               {"model_alias", s.model_alias},
               {"strategy", to_string(s.strategy)},
               {"n_records", s.n_records},
               {"failed_records", s.failed_records},
               {"excluded_pairs", s.excluded_pairs},
               {"average", s.average},
               {"total_cost", s.total_cost.str()},
               {"mean_latency_ms", s.mean_latency_ms},
               {"total_input_tokens", s.total_input_tokens},
               {"total_output_tokens", s.total_output_tokens},
               {"field_scores", fields}};
}

Scorecard scorecard_from_json(const json& j) {
  try {
    Scorecard s;
    s.dataset = parse_provider(j.at("dataset").get<std::string>());
    s.model_alias = j.at("model_alias").get<std::string>();
    s.strategy = parse_strategy(j.at("strategy").get<std::string>());
    s.n_records = j.value("n_records", std::size_t{0});
    s.failed_records = j.value("failed_records", std::size_t{0});
    s.excluded_pairs = j.value("excluded_pairs", std::size_t{0});
    s.average = j.at("average").get<double>();
    s.total_cost = Usd::parse(j.at("total_cost").get<std::string>());
    s.mean_latency_ms = j.at("mean_latency_ms").get<double>();
    s.total_input_tokens = j.value("total_input_tokens", std::int64_t{0});
    s.total_output_tokens = j.value("total_output_tokens", std::int64_t{0});
    for (const auto& f : j.at("field_scores"))
      s.field_scores.push_back({f.at("field").get<std::string>(), parse_metric(f.at("metric").get<std::string>()),
                                f.at("value").get<double>(), f.value("n", std::size_t{0})});
    return s;
  } catch (const json::exception& e) {
    throw ScoringError(std::string("malformed scorecard: ") + e.what());
  }
}

std::string scorecards_to_jsonl(const std::vector<Scorecard>& cards) {
  std::string out;
  for (const auto& c : cards) out += to_json(c).dump() + "\n";
  return out;
}

std::vector<Scorecard> scorecards_from_jsonl(std::string_view content) {
  std::vector<Scorecard> out;
  for (const auto& line : text::split(content, '\n')) {
    if (text::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ScoringError("scorecard line is not JSON");
    out.push_back(scorecard_from_json(j));
  }
  return out;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

const std::vector<std::string> kCsvBase = {"dataset",         "model_alias",        "strategy",
                                           "n_records",       "failed_records",     "excluded_pairs",
                                           "average",         "total_cost",         "mean_latency_ms",
                                           "total_input_tokens", "total_output_tokens"};

}  // namespace

std::string scorecards_to_csv(const std::vector<Scorecard>& cards) {
  std::vector<std::pair<std::string, Metric>> fields;
  for (const auto& c : cards)
    for (const auto& f : c.field_scores)
      if (std::none_of(fields.begin(), fields.end(), [&](const auto& x) { return x.first == f.field; }))
        fields.emplace_back(f.field, f.metric);
  std::vector<std::string> header = kCsvBase;
  for (const auto& [name, metric] : fields) {
    header.push_back(name + "[" + std::string(to_string(metric)) + "]");
    header.push_back(name + "[n]");
  }
  std::string out = text::csv_row(header) + "\n";
  for (const auto& c : cards) {
    std::vector<std::string> row = {std::string(to_string(c.dataset)),
                                    c.model_alias,
                                    std::string(to_string(c.strategy)),
                                    std::to_string(c.n_records),
                                    std::to_string(c.failed_records),
                                    std::to_string(c.excluded_pairs),
                                    fixed(c.average, 10),
                                    c.total_cost.str(),
                                    fixed(c.mean_latency_ms, 3),
                                    std::to_string(c.total_input_tokens),
                                    std::to_string(c.total_output_tokens)};
    for (const auto& [name, metric] : fields) {
      const auto* f = c.find(name);
      row.push_back(f ? fixed(f->value, 10) : "");
      row.push_back(f ? std::to_string(f->n) : "");
    }
    out += text::csv_row(row) + "\n";
  }
  return out;
}

std::vector<Scorecard> scorecards_from_csv(std::string_view content) {
  auto rows = text::parse_csv(content);
  if (rows.empty()) return {};
  const auto& header = rows[0];
  if (header.size() < kCsvBase.size() || !std::equal(kCsvBase.begin(), kCsvBase.end(), header.begin()))
    throw ScoringError("scorecard CSV header does not start with " + text::join(kCsvBase, ","));
  static const std::regex col(R"(^(.+)\[(EM|TK|BS)\]$)");
  std::vector<Scorecard> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size())
      throw ScoringError("scorecard CSV row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) +
                         " cells, expected " + std::to_string(header.size()));
    try {
      Scorecard s;
      s.dataset = parse_provider(row[0]);
      s.model_alias = row[1];
      s.strategy = parse_strategy(row[2]);
      s.n_records = std::stoull(row[3]);
      s.failed_records = std::stoull(row[4]);
      s.excluded_pairs = std::stoull(row[5]);
      s.average = std::stod(row[6]);
      s.total_cost = Usd::parse(row[7]);
      s.mean_latency_ms = std::stod(row[8]);
      s.total_input_tokens = std::stoll(row[9]);
      s.total_output_tokens = std::stoll(row[10]);
      for (std::size_t c = kCsvBase.size(); c + 1 < header.size(); c += 2) {
        std::smatch m;
        if (!std::regex_match(header[c], m, col)) throw ScoringError("unexpected scorecard column " + header[c]);
        if (row[c].empty()) continue;
        s.field_scores.push_back({m[1].str(), parse_metric(m[2].str()), std::stod(row[c]),
                                  row[c + 1].empty() ? s.n_records : std::stoull(row[c + 1])});
      }
      out.push_back(std::move(s));
    } catch (const std::invalid_argument&) {
      throw ScoringError("scorecard CSV row " + std::to_string(r + 1) + " has a malformed number");
    } catch (const std::out_of_range&) {
      throw ScoringError("scorecard CSV row " + std::to_string(r + 1) + " has an out-of-range number");
    }
  }
  return out;
}

std::vector<Scorecard> load_scorecards(const std::string& path) {
  auto content = text::read_file(path);
  if (path.size() >= 4 && text::lower(path.substr(path.size() - 4)) == ".csv") return scorecards_from_csv(content);
  return scorecards_from_jsonl(content);
}

}  // namespace irx
