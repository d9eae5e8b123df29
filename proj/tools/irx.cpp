// irx: command-line front end for the incident report extraction pipeline.

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "irx/corpus.hpp"
#include "irx/error.hpp"
#include "irx/evaluation.hpp"
#include "irx/extraction.hpp"
#include "irx/gateway.hpp"
#include "irx/promptkit.hpp"
#include "irx/reporting.hpp"
#include "irx/sampler.hpp"
#include "irx/text.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace irx;

namespace {

struct Common {
  std::string vocab_dir;
  std::string templates_dir;
  std::string registry_path;
  bool verbose = false;
};

ExtractionSchema schema_for(Provider p, const Common& c) {
  return ExtractionSchema::for_provider(p, c.vocab_dir.empty() ? default_vocabularies() : load_vocabularies(c.vocab_dir));
}

PromptTemplates templates_for(Provider p, const Common& c) {
  if (c.templates_dir.empty()) return PromptTemplates::defaults();
  return PromptTemplates::load((fs::path(c.templates_dir) / std::string(provider_code(p))).string());
}

ModelRegistry registry_for(const Common& c) {
  return c.registry_path.empty() ? ModelRegistry::defaults() : ModelRegistry::load(c.registry_path);
}

Provider single_provider(const std::vector<IncidentReport>& reports, const std::string& what) {
  std::set<Provider> seen;
  for (const auto& r : reports) seen.insert(r.provider);
  if (seen.size() != 1) throw ConfigError(what + " must hold reports from exactly one provider");
  return *seen.begin();
}

// {"aws": ["id", ...], "azure": [...], "gcp": [...]}; keys are provider names
// in any case.
std::vector<std::string> fewshot_ids(const std::string& path, Provider p) {
  if (path.empty() || !fs::exists(path)) return {};
  json j;
  try {
    j = json::parse(text::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("malformed few-shot file " + path + ": " + e.what());
  }
  for (auto& [key, ids] : j.items())
    if (parse_provider(key) == p) return ids.get<std::vector<std::string>>();
  return {};
}

std::unique_ptr<EmbeddingBackend> make_backend(const std::string& spec) {
  if (spec == "hashing") return std::make_unique<HashingEmbedding>();
  if (spec.rfind("hashing:", 0) == 0) return std::make_unique<HashingEmbedding>(std::stoi(spec.substr(8)));
  if (spec.rfind("vectors:", 0) == 0) return std::make_unique<WordVectorEmbedding>(spec.substr(8));
  if (spec.rfind("remote:", 0) == 0) {
    // remote:<url>,<model>; the key comes from IRX_EMBEDDING_API_KEY.
    auto rest = spec.substr(7);
    auto comma = rest.rfind(',');
    if (comma == std::string::npos) throw ConfigError("remote embedding spec is remote:<url>,<model>");
    const char* key = std::getenv("IRX_EMBEDDING_API_KEY");
    return std::make_unique<RemoteEmbedding>(rest.substr(0, comma), rest.substr(comma + 1), key ? key : "",
                                             make_http_transport());
  }
  throw ConfigError("unknown embedding backend: " + spec);
}

void write_text(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  text::write_file_atomic(path.string(), content);
}

// ------------------------------------------------------------ subcommands

struct IngestArgs {
  std::string provider;
  std::vector<std::string> inputs;
  std::string rules_dir;
  std::string out;
};

int run_ingest(const IngestArgs& a) {
  Provider p = parse_provider(a.provider);
  auto rules = a.rules_dir.empty() ? ExtractionRules::defaults(p) : ExtractionRules::load(a.rules_dir, p);
  // Directories contribute their archive files in name order.
  std::vector<std::string> files;
  for (const auto& in : a.inputs) {
    if (!fs::is_directory(in)) {
      files.push_back(in);
      continue;
    }
    std::vector<std::string> found;
    for (const auto& e : fs::directory_iterator(in)) {
      auto ext = e.path().extension().string();
      if (e.is_regular_file() && (ext == ".html" || ext == ".htm" || ext == ".json" || ext == ".jsonl"))
        found.push_back(e.path().string());
    }
    std::sort(found.begin(), found.end());
    files.insert(files.end(), found.begin(), found.end());
  }
  std::vector<IncidentReport> all;
  for (const auto& in : files) {
    auto parsed = parse_provider_archive(in, p, rules);
    for (const auto& w : parsed.warnings) spdlog::warn("{}", w);
    spdlog::info("{}: {} entries", in, parsed.reports.size());
    for (auto& r : parsed.reports) all.push_back(std::move(r));
  }
  auto cleaned = clean(std::move(all));
  write_text(a.out, serialize_dataset(cleaned));
  std::cout << "wrote " << cleaned.size() << " reports to " << a.out << "\n";
  return 0;
}

struct SampleArgs {
  std::string dataset;
  double fraction = 0.2;
  long k = 0;
  std::uint64_t seed = 42;
  std::string out;
};

int run_sample(const SampleArgs& a) {
  auto reports = read_dataset(a.dataset);
  auto matrix = sampler::vectorize(reports);
  auto k = a.k > 0 ? static_cast<sampler::Index>(a.k) : sampler::default_k(matrix.rows());
  auto assignment = sampler::kmeans(matrix, k, a.seed);
  auto ids = sampler::select_samples(assignment, matrix, a.fraction);
  std::string out;
  for (const auto& id : ids) out += id + "\n";
  write_text(a.out, out);
  std::cout << "k=" << k << " inertia=" << assignment.inertia << " selected " << ids.size() << " of "
            << reports.size() << " reports\n";
  return 0;
}

std::vector<FewShotExample> load_examples(const std::vector<IncidentReport>& dataset,
                                          const std::vector<GroundTruthLabel>& labels, const std::string& fewshot,
                                          const ExtractionSchema& schema) {
  std::vector<FewShotExample> examples;
  for (const auto& id : fewshot_ids(fewshot, schema.provider())) {
    auto rep = std::find_if(dataset.begin(), dataset.end(), [&](const auto& r) { return r.report_id == id; });
    auto lab = std::find_if(labels.begin(), labels.end(), [&](const auto& l) { return l.report_id == id; });
    if (rep == dataset.end() || lab == labels.end())
      throw ConfigError("few-shot example " + id + " needs both a report and a label");
    examples.push_back(make_example(*rep, *lab, schema));
  }
  return examples;
}

struct ComposeArgs {
  std::string dataset;
  std::string report_id;
  std::string strategy = "Full-FS";
  std::string labels;
  std::string fewshot = "config/fewshot.json";
  bool as_json = false;
};

int run_compose(const ComposeArgs& a, const Common& c) {
  auto dataset = read_dataset(a.dataset);
  auto it = std::find_if(dataset.begin(), dataset.end(), [&](const auto& r) { return r.report_id == a.report_id; });
  if (it == dataset.end()) throw ConfigError("report " + a.report_id + " not in " + a.dataset);
  auto schema = schema_for(it->provider, c);
  auto label = parse_strategy(a.strategy);
  std::vector<FewShotExample> examples;
  if (strategy(label).few_shot()) {
    if (a.labels.empty()) throw ConfigError("few-shot strategies need --labels for the example answers");
    examples = load_examples(dataset, load_labels(a.labels, schema), a.fewshot, schema);
  }
  auto bundle = compose(*it, label, schema, examples, templates_for(it->provider, c));
  if (a.as_json) {
    json j = {{"report_id", bundle.report_id},
              {"strategy", std::string(to_string(bundle.strategy))},
              {"prompt_hash", bundle.prompt_hash},
              {"estimated_input_tokens", bundle.estimated_input_tokens},
              {"system", bundle.system_prompt},
              {"user", bundle.user_prompt}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "=== system ===\n" << bundle.system_prompt << "\n=== user ===\n" << bundle.user_prompt << "\n";
  }
  return 0;
}

struct ExtractArgs {
  std::string dataset;
  std::string labels;
  std::string models;
  std::string strategies = "all";
  std::string out;
  bool resume = false;
  std::string fewshot = "config/fewshot.json";
  std::string cache_dir = ".irx-cache";
  std::string mock_dir;
  bool replay_only = false;
  bool bill_replays = false;
  int workers = 4;
  int max_in_flight = 4;
};

int run_extract(const ExtractArgs& a, const Common& c) {
  auto dataset = read_dataset(a.dataset);
  Provider p = single_provider(dataset, a.dataset);
  auto schema = schema_for(p, c);
  auto labels = load_labels(a.labels, schema);
  auto registry = registry_for(c);

  MatrixOptions mo;
  mo.out_path = a.out;
  mo.resume = a.resume;
  mo.workers = a.workers;
  mo.bill_replays = a.bill_replays;
  mo.templates = templates_for(p, c);
  mo.examples = load_examples(dataset, labels, a.fewshot, schema);
  // Few-shot examples never double as evaluation reports.
  std::set<std::string> example_ids;
  for (const auto& e : mo.examples) example_ids.insert(e.report_id);
  std::erase_if(labels, [&](const GroundTruthLabel& l) { return example_ids.count(l.report_id) > 0; });
  mo.on_record = [](const ExtractionRecord& r, std::size_t done, std::size_t total) {
    spdlog::info("[{}/{}] {} {} {}: {}", done, total, r.model_alias, to_string(r.strategy), r.report_id,
                 r.failure.empty() ? std::string(to_string(r.parse_status)) : r.failure);
  };

  std::vector<ModelProfile> models;
  for (const auto& alias : text::split(a.models, ',')) models.push_back(registry.find(text::trim(alias)));
  auto strategies = parse_strategies(a.strategies);

  GatewayOptions go;
  go.cache_dir = a.cache_dir;
  go.mock_dir = a.mock_dir;
  go.replay_only = a.replay_only;
  go.max_in_flight_per_provider = a.max_in_flight;
  Gateway gateway(registry, go, make_http_transport());

  auto records = run_matrix(dataset, labels, models, strategies, schema, gateway, mo);
  std::size_t failed = 0;
  for (const auto& r : records) failed += r.failure.empty() ? 0 : 1;
  std::cout << "cells=" << records.size() << " failed=" << failed << " network_calls=" << gateway.network_calls()
            << " cache_hits=" << gateway.cache_hits() << " out=" << a.out << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string records;
  std::string labels;
  std::string out = "scorecards.csv";
  std::string jsonl;
  std::string embedding = "hashing";
};

int run_evaluate(const EvaluateArgs& a, const Common& c) {
  auto records = read_records(a.records);
  if (records.empty()) throw ConfigError("no records in " + a.records);
  std::set<Provider> providers;
  for (const auto& r : records) providers.insert(r.provider);
  if (providers.size() != 1) throw ConfigError("records must come from a single dataset; evaluate each separately");
  auto schema = schema_for(*providers.begin(), c);
  auto labels = load_labels(a.labels, schema);
  auto backend = make_backend(a.embedding);
  auto cards = score_dataset(records, labels, schema, *backend);
  write_text(a.out, scorecards_to_csv(cards));
  auto jsonl = a.jsonl.empty() ? fs::path(a.out).replace_extension(".jsonl").string() : a.jsonl;
  write_text(jsonl, scorecards_to_jsonl(cards));
  for (const auto& s : cards)
    std::cout << fmt::format("{:<18} {:<9} avg={:.4f} cost=${} latency={:.0f}ms n={} failed={}\n", s.model_alias,
                             to_string(s.strategy), s.average, s.total_cost.str(), s.mean_latency_ms, s.n_records,
                             s.failed_records);
  std::cout << "wrote " << a.out << " and " << jsonl << "\n";
  return 0;
}

std::vector<Scorecard> load_all(const std::vector<std::string>& paths) {
  std::vector<Scorecard> cards;
  for (const auto& p : paths) {
    auto more = load_scorecards(p);
    cards.insert(cards.end(), more.begin(), more.end());
  }
  if (cards.empty()) throw ReportError("no scorecards loaded");
  return cards;
}

struct ReportArgs {
  std::vector<std::string> scorecards;
  std::vector<std::string> formats{"md"};
  std::string out = "report";
  std::string metric;
};

int run_report(const ReportArgs& a, const Common& c) {
  auto cards = load_all(a.scorecards);
  std::optional<Metric> metric;
  if (!a.metric.empty()) metric = parse_metric(a.metric);
  auto rows = tradeoff_rows(cards, registry_for(c));
  std::set<Provider> datasets;
  for (const auto& s : cards) datasets.insert(s.dataset);
  fs::create_directories(a.out);
  for (const auto& format : a.formats) {
    if (format == "md") {
      std::string md;
      for (auto d : datasets) {
        md += "## " + std::string(to_string(d)) + "\n\n" + accuracy_table(cards, d, metric).to_markdown() + "\n";
      }
      write_text(fs::path(a.out) / "accuracy.md", md);
    } else if (format == "csv") {
      std::string csv;
      for (auto d : datasets) {
        auto part = accuracy_table(cards, d, metric).to_csv();
        csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
      }
      write_text(fs::path(a.out) / "accuracy.csv", csv);
      write_text(fs::path(a.out) / "tradeoff.csv", tradeoff_csv(rows));
    } else if (format == "svg") {
      write_text(fs::path(a.out) / "tradeoff.svg", tradeoff_svg(rows));
    } else {
      throw ConfigError("unknown report format: " + format);
    }
  }
  std::cout << "wrote " << a.formats.size() << " report format(s) for " << datasets.size() << " dataset(s) to "
            << a.out << "\n";
  return 0;
}

struct RecommendArgs {
  std::vector<std::string> scorecards;
  std::string weights = "1,1,1";
  std::size_t top = 0;
};

int run_recommend(const RecommendArgs& a, const Common& c) {
  auto recs = recommend(tradeoff_rows(load_all(a.scorecards), registry_for(c)), parse_weights(a.weights));
  if (a.top > 0) std::erase_if(recs, [&](const Recommendation& r) { return r.rank > a.top; });
  std::cout << recommendations_markdown(recs);
  return 0;
}

int run_init_config(const std::string& out) {
  fs::path root(out);
  write_text(root / "models.json", ModelRegistry::defaults().to_json().dump(2) + "\n");
  auto v = default_vocabularies();
  write_text(root / "vocab" / "service_category.txt", serialize_vocabulary(v.service_category));
  write_text(root / "vocab" / "user_symptom_category.txt", serialize_vocabulary(v.user_symptom_category));
  write_text(root / "vocab" / "root_cause_category.txt", serialize_vocabulary(v.root_cause_category));
  for (auto p : {Provider::Aws, Provider::Azure, Provider::Gcp})
    write_text(root / "rules" / (std::string(provider_code(p)) + ".json"),
               ExtractionRules::defaults(p).to_json().dump(2) + "\n");
  std::cout << "wrote default configuration to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured extraction and evaluation for cloud incident reports"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand
  Common common;
  app.add_option("--vocab-dir", common.vocab_dir, "Directory with category vocabulary files");
  app.add_option("--templates-dir", common.templates_dir, "Directory with per-provider prompt templates");
  app.add_option("--registry", common.registry_path, "Model registry JSON (default: built-in table)");
  app.add_flag("-v,--verbose", common.verbose, "Log progress to stderr");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Parse archived status pages into a cleaned dataset");
  c_ingest->add_option("--provider", ingest.provider, "aws, azure or gcp")->required();
  c_ingest->add_option("--input", ingest.inputs, "Archived HTML/JSON files or directories of them")
      ->required()
      ->check(CLI::ExistingPath);
  c_ingest->add_option("--rules-dir", ingest.rules_dir, "Directory with <provider>.json extraction rules");
  c_ingest->add_option("--out", ingest.out, "Output dataset (JSONL)")->required();

  SampleArgs sample;
  auto* c_sample = app.add_subcommand("sample", "Pick representative reports by TF-IDF k-means");
  c_sample->add_option("--dataset", sample.dataset)->required()->check(CLI::ExistingFile);
  c_sample->add_option("--fraction", sample.fraction)->required();
  c_sample->add_option("--k", sample.k, "Cluster count (default ceil(sqrt(N/2)))");
  c_sample->add_option("--seed", sample.seed);
  c_sample->add_option("--out", sample.out, "One report_id per line")->required();

  ComposeArgs comp;
  auto* c_compose = app.add_subcommand("compose", "Print the prompt for one report and strategy");
  c_compose->add_option("--dataset", comp.dataset)->required()->check(CLI::ExistingFile);
  c_compose->add_option("--report-id", comp.report_id)->required();
  c_compose->add_option("--strategy", comp.strategy);
  c_compose->add_option("--labels", comp.labels, "Labels holding the few-shot answers");
  c_compose->add_option("--fewshot", comp.fewshot, "Pinned few-shot example ids");
  c_compose->add_flag("--json", comp.as_json);

  ExtractArgs ex;
  auto* c_extract = app.add_subcommand("extract", "Run the (report, model, strategy) extraction matrix");
  c_extract->add_option("--dataset", ex.dataset)->required()->check(CLI::ExistingFile);
  c_extract->add_option("--labels", ex.labels)->required()->check(CLI::ExistingFile);
  c_extract->add_option("--models", ex.models, "Comma-separated aliases")->required();
  c_extract->add_option("--strategies", ex.strategies, "Comma-separated labels or 'all'");
  c_extract->add_option("--out", ex.out, "Records file (JSONL)")->required();
  c_extract->add_flag("--resume", ex.resume, "Keep finished cells from an earlier run");
  c_extract->add_option("--fewshot", ex.fewshot, "Pinned few-shot example ids");
  c_extract->add_option("--cache-dir", ex.cache_dir, "Record/replay cache directory");
  c_extract->add_option("--mock-dir", ex.mock_dir, "Canned responses for mock models");
  c_extract->add_flag("--replay-only", ex.replay_only, "Fail on cache misses instead of calling models");
  c_extract->add_flag("--bill-replays", ex.bill_replays, "Charge cached responses as if freshly called");
  c_extract->add_option("--workers", ex.workers)->check(CLI::PositiveNumber);
  c_extract->add_option("--max-in-flight", ex.max_in_flight, "Concurrent requests per provider")
      ->check(CLI::PositiveNumber);

  EvaluateArgs ev;
  auto* c_eval = app.add_subcommand("evaluate", "Score extraction records against labels");
  c_eval->add_option("--records", ev.records)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--labels", ev.labels)->required()->check(CLI::ExistingFile);
  c_eval->add_option("--out", ev.out, "Scorecards CSV");
  c_eval->add_option("--jsonl", ev.jsonl, "Scorecards JSONL (default: next to --out)");
  c_eval->add_option("--embedding", ev.embedding,
                     "hashing[:dim], vectors:<file> or remote:<url>,<model> for semantic scoring");

  ReportArgs rep;
  auto* c_report = app.add_subcommand("report", "Write accuracy tables and trade-off data");
  c_report->add_option("--scorecards", rep.scorecards, "Scorecard CSV or JSONL files")->required();
  c_report->add_option("--format", rep.formats, "md, csv and/or svg")->delimiter(',');
  c_report->add_option("--out", rep.out, "Output directory");
  c_report->add_option("--metric", rep.metric, "Only fields scored by EM, TK or BS");

  RecommendArgs rec;
  auto* c_rec = app.add_subcommand("recommend", "Rank (model, strategy) pairs by weighted trade-off");
  c_rec->add_option("--scorecards", rec.scorecards)->required();
  c_rec->add_option("--weights", rec.weights, "accuracy,cost,latency");
  c_rec->add_option("--top", rec.top, "Show only the first N per dataset");

  std::string init_out = "config";
  auto* c_init = app.add_subcommand("init-config", "Write the built-in models, vocabularies and rules to files");
  c_init->add_option("--out", init_out);

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("irx");
  spdlog::set_default_logger(logger);
  spdlog::set_level(common.verbose ? spdlog::level::info : spdlog::level::warn);

  try {
    if (*c_ingest) return run_ingest(ingest);
    if (*c_sample) return run_sample(sample);
    if (*c_compose) return run_compose(comp, common);
    if (*c_extract) return run_extract(ex, common);
    if (*c_eval) return run_evaluate(ev, common);
    if (*c_report) return run_report(rep, common);
    if (*c_rec) return run_recommend(rec, common);
    if (*c_init) return run_init_config(init_out);
  } catch (const Error& e) {
    std::cerr << "irx: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "irx: unexpected error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
