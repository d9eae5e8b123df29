#include "doctest.h"

#include <algorithm>
#include <set>

#include "irx/corpus.hpp"
#include "irx/error.hpp"
#include "irx/promptkit.hpp"
#include "irx/text.hpp"

using namespace irx;

namespace {

const std::string kSource = IRX_SOURCE_DIR;
const std::string kFixtures = IRX_FIXTURE_DIR;

IncidentReport report(std::string title, std::string status, std::string body) {
  IncidentReport r;
  r.provider = Provider::Aws;
  r.title = std::move(title);
  r.status = std::move(status);
  r.body_text = std::move(body);
  return finalize_report(std::move(r));
}

IncidentReport cloudwatch() {
  return report("Amazon CloudWatch (Ireland)", "[RESOLVED] Delayed CloudWatch Metrics",
                "10:26 AM PST We are investigating increased delays in CloudWatch metrics in the "
                "EU-WEST-1 Region.\n2:40 PM PST Between 10:26 AM and 2:40 PM PST we experienced "
                "increased delays. The issue has been resolved and the service is operating normally.");
}

std::vector<FewShotExample> two_examples(const ExtractionSchema& schema) {
  auto a = cloudwatch();
  GroundTruthLabel la{a.report_id,
                      {{"service_name", LabelValue::string("Amazon CloudWatch")},
                       {"location", LabelValue::string("Ireland")},
                       {"service_category", LabelValue::string("management")},
                       {"start_time", LabelValue::string("10:26:00")},
                       {"end_time", LabelValue::string("14:40:00")},
                       {"timezone", LabelValue::string("PST")},
                       {"user_symptom", LabelValue::string("we experienced increased delays")},
                       {"user_symptom_category", LabelValue::set({"DELAY"})}}};
  auto b = report("Amazon EC2 (N. Virginia)", "[RESOLVED] Increased API Error Rates",
                  "We are investigating increased API error rates for EC2 in US-EAST-1.");
  GroundTruthLabel lb{b.report_id,
                      {{"service_name", LabelValue::string("Amazon EC2")},
                       {"location", LabelValue::string("N. Virginia")},
                       {"service_category", LabelValue::string("compute")},
                       {"start_time", LabelValue::absent()},
                       {"end_time", LabelValue::absent()},
                       {"timezone", LabelValue::absent()},
                       {"user_symptom", LabelValue::string("increased API error rates")},
                       {"user_symptom_category", LabelValue::set({"ERROR"})}}};
  return {make_example(a, la, schema), make_example(b, lb, schema)};
}

IncidentReport target() {
  return report("Amazon S3 (Oregon)", "[RESOLVED] Elevated error rates",
                "Between 9:05 AM and 11:52 AM PDT some customers saw elevated 503 errors on PUT "
                "requests to S3 buckets in the US-WEST-2 Region. The issue has been resolved.");
}

std::vector<Component> kinds(const PromptBundle& b) {
  std::vector<Component> out;
  for (auto& c : b.components) out.push_back(c.kind);
  return out;
}

}  // namespace

TEST_CASE("strategy matrix matches the six component sets") {
  auto m = strategy_matrix();
  REQUIRE(m.size() == 6);
  using C = Component;
  auto set_of = [](const PromptStrategy& s) { return std::set<C>(s.components.begin(), s.components.end()); };
  CHECK(set_of(strategy(StrategyLabel::FullZS)) == std::set<C>{C::Task, C::CoT, C::Category, C::Format});
  CHECK(set_of(strategy(StrategyLabel::FullFS)) == std::set<C>{C::Task, C::CoT, C::Category, C::Examples, C::Format});
  CHECK(set_of(strategy(StrategyLabel::BasicZS)) == std::set<C>{C::Task, C::Format});
  CHECK(set_of(strategy(StrategyLabel::BasicFS)) == std::set<C>{C::Task, C::Examples, C::Format});
  CHECK(set_of(strategy(StrategyLabel::CoTZS)) == std::set<C>{C::Task, C::CoT, C::Format});
  CHECK(set_of(strategy(StrategyLabel::CategZS)) == std::set<C>{C::Task, C::Category, C::Format});

  auto fs = set_of(strategy(StrategyLabel::FullFS));
  fs.erase(C::Examples);
  CHECK(fs == set_of(strategy(StrategyLabel::FullZS)));
  for (auto& s : m) {
    CHECK(s.has(C::Task));
    CHECK(s.has(C::Format));
  }
}

TEST_CASE("strategy labels parse leniently and reject unknowns") {
  CHECK(parse_strategy("Full-FS") == StrategyLabel::FullFS);
  CHECK(parse_strategy("basic_zs") == StrategyLabel::BasicZS);
  CHECK(parse_strategy("Categ.-ZS") == StrategyLabel::CategZS);
  CHECK(parse_strategy("CoTZS") == StrategyLabel::CoTZS);
  CHECK_THROWS_AS(parse_strategy("Mega-FS"), CompositionError);
  CHECK(parse_strategies("all").size() == 6);
  CHECK(parse_strategies("FullZS, BasicFS") == std::vector{StrategyLabel::FullZS, StrategyLabel::BasicFS});
  for (auto& s : strategy_matrix()) CHECK(parse_strategy(to_string(s.label)) == s.label);
}

TEST_CASE("Basic-ZS renders Task and Format listing the eight AWS keys") {
  auto schema = ExtractionSchema::for_provider(Provider::Aws);
  auto b = compose(target(), StrategyLabel::BasicZS, schema, {});
  CHECK(kinds(b) == std::vector{Component::Task, Component::Format});
  CHECK(b.components[0].text.find("Analyze the incident report step by step") == 0);
  CHECK(b.components[1].text.find(
            "service_name, location, service_category, start_time, end_time, timezone, "
            "user_symptom, user_symptom_category.") != std::string::npos);
  CHECK(b.user_prompt.find("Follow the reasoning steps") == std::string::npos);
  CHECK(b.user_prompt.find("Here are a few examples") == std::string::npos);
  CHECK(b.system_prompt.find("system operator") != std::string::npos);
  CHECK(b.provider == Provider::Aws);
  CHECK(b.report_id == target().report_id);
}

TEST_CASE("Full-FS renders all five components in the fixed order") {
  auto schema = ExtractionSchema::for_provider(Provider::Aws);
  auto ex = two_examples(schema);
  auto b = compose(target(), StrategyLabel::FullFS, schema, ex);
  CHECK(kinds(b) == std::vector{Component::Task, Component::CoT, Component::Category, Component::Format,
                                Component::Examples});
  const auto& cot = b.components[1].text;
  CHECK(cot.find("Format times as \"HH:MM:SS\"") != std::string::npos);
  CHECK(cot.find("service name and service location") != std::string::npos);
  CHECK(cot.find("[compute, storage,") != std::string::npos);
  CHECK(cot.find("5. ") == std::string::npos);
  const auto& cat = b.components[2].text;
  CHECK(cat.find("DELAY: ") != std::string::npos);
  CHECK(cat.find("root cause") == std::string::npos);
  const auto& exs = b.components[4].text;
  CHECK(exs.find("Here are a few examples of report content (labeled Q) and extracted information (labeled A).") == 0);
  CHECK(exs.find("Q: title: Amazon CloudWatch (Ireland)\nstatus: [RESOLVED] Delayed CloudWatch Metrics") !=
        std::string::npos);
  CHECK(exs.find("A:\n{\"service_name\":\"Amazon CloudWatch\",\"location\":\"Ireland\",") != std::string::npos);
  CHECK(exs.find("\"user_symptom_category\":[\"DELAY\"]") != std::string::npos);
  CHECK(exs.find("\"start_time\":null") != std::string::npos);
}

TEST_CASE("schema drives the per-provider deltas") {
  auto gcp = ExtractionSchema::for_provider(Provider::Gcp);
  auto r = target();
  r.provider = Provider::Gcp;
  auto b = compose(r, StrategyLabel::FullZS, gcp, {});
  CHECK(b.user_prompt.find("Identify the service name.") != std::string::npos);
  CHECK(b.user_prompt.find("location") == std::string::npos);

  auto azure = ExtractionSchema::for_provider(Provider::Azure);
  r.provider = Provider::Azure;
  auto a = compose(r, StrategyLabel::FullZS, azure, {});
  CHECK(a.user_prompt.find("5. Extract the relevant sentence(s) that describe the root cause.") != std::string::npos);
  CHECK(a.user_prompt.find("The definition for root cause category are:") != std::string::npos);
  CHECK(a.user_prompt.find("root_cause, root_cause_category.") != std::string::npos);
}

TEST_CASE("composition errors") {
  auto schema = ExtractionSchema::for_provider(Provider::Aws);
  CHECK_THROWS_AS(compose(target(), StrategyLabel::FullFS, schema, {}), CompositionError);
  CHECK_THROWS_AS(compose(target(), StrategyLabel::BasicFS, schema, {}), CompositionError);
  auto ex = two_examples(schema);
  CHECK_THROWS_AS(compose(cloudwatch(), StrategyLabel::FullFS, schema, ex), CompositionError);
  ex[0].answer_record["service_category"] = LabelValue::string("teleportation");
  CHECK_THROWS_AS(compose(target(), StrategyLabel::FullFS, schema, ex), ValidationError);
  CHECK_THROWS_AS(fill_template("{nope}", {}), CompositionError);
  CHECK(fill_template("{a} {b}", {{"a", "{b}"}, {"b", "x"}}) == "{b} x");
  CHECK(fill_template("JSON like {\"k\": 1}", {}) == "JSON like {\"k\": 1}");
}

TEST_CASE("prompt hash is deterministic and tracks content") {
  auto schema = ExtractionSchema::for_provider(Provider::Aws);
  auto ex = two_examples(schema);
  std::set<std::string> hashes;
  for (auto& s : strategy_matrix()) {
    auto a = compose(target(), s.label, schema, ex);
    auto b = compose(target(), s.label, schema, ex);
    CHECK(a.prompt_hash == b.prompt_hash);
    CHECK(a.prompt_hash.size() == 64);
    hashes.insert(a.prompt_hash);
  }
  CHECK(hashes.size() == 6);
  auto r = target();
  r.body_text += " ";
  CHECK(compose(r, StrategyLabel::BasicZS, schema, {}).prompt_hash !=
        compose(target(), StrategyLabel::BasicZS, schema, {}).prompt_hash);
  auto t = PromptTemplates::defaults();
  t.system += " ";
  CHECK(compose(target(), StrategyLabel::BasicZS, schema, {}, t).prompt_hash !=
        compose(target(), StrategyLabel::BasicZS, schema, {}).prompt_hash);
}

TEST_CASE("every prompt carries the report body verbatim and FS outgrows ZS") {
  auto schema = ExtractionSchema::for_provider(Provider::Aws);
  auto ex = two_examples(schema);
  auto parsed = parse_provider_archive(kFixtures + "/archives/aws_status.html", Provider::Aws);
  auto reports = clean(parsed.reports);
  reports.push_back(target());
  for (const auto& r : reports) {
    for (auto& s : strategy_matrix()) {
      auto b = compose(r, s.label, schema, ex);
      CHECK(b.user_prompt.find(r.body_text) != std::string::npos);
      CHECK(b.estimated_input_tokens == estimate_tokens(b.system_prompt) + estimate_tokens(b.user_prompt));
    }
    CHECK(compose(r, StrategyLabel::FullFS, schema, ex).estimated_input_tokens >
          compose(r, StrategyLabel::FullZS, schema, ex).estimated_input_tokens);
    CHECK(compose(r, StrategyLabel::BasicFS, schema, ex).estimated_input_tokens >
          compose(r, StrategyLabel::BasicZS, schema, ex).estimated_input_tokens);
  }
}

TEST_CASE("token estimate is ceil(chars / 4)") {
  CHECK(estimate_tokens("") == 0);
  CHECK(estimate_tokens("abc") == 1);
  CHECK(estimate_tokens("abcd") == 1);
  CHECK(estimate_tokens("abcde") == 2);
}

TEST_CASE("shipped template files match the built-in defaults") {
  auto d = PromptTemplates::defaults();
  for (const char* p : {"aws", "azure", "gcp"}) {
    auto t = PromptTemplates::load(kSource + "/templates/" + p);
    CAPTURE(p);
    CHECK(t.system == d.system);
    CHECK(t.task == d.task);
    CHECK(t.cot == d.cot);
    CHECK(t.category == d.category);
    CHECK(t.format == d.format);
    CHECK(t.examples == d.examples);
    CHECK(t.report == d.report);
  }
}

TEST_CASE("loaded templates override defaults") {
  auto schema = ExtractionSchema::for_provider(Provider::Aws);
  auto t = PromptTemplates::defaults();
  t.task = "Extract fields for {json_keys}.";
  auto b = compose(target(), StrategyLabel::BasicZS, schema, {}, t);
  CHECK(b.components[0].text.find("Extract fields for service_name,") == 0);
  t.task = "{mystery}";
  CHECK_THROWS_AS(compose(target(), StrategyLabel::BasicZS, schema, {}, t), CompositionError);
}
