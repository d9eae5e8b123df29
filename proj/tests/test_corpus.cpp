#include "doctest.h"

#include <algorithm>
#include <set>

#include "irx/corpus.hpp"
#include "irx/error.hpp"
#include "irx/hash.hpp"
#include "irx/text.hpp"

using namespace irx;

namespace {

const std::string kFixtures = IRX_FIXTURE_DIR;

IncidentReport make(Provider p, std::string title, std::string body, std::string status = "") {
  IncidentReport r;
  r.provider = p;
  r.title = std::move(title);
  r.status = std::move(status);
  r.body_text = std::move(body);
  return finalize_report(std::move(r));
}

GroundTruthLabel aws_label(std::string id) {
  GroundTruthLabel l;
  l.report_id = std::move(id);
  l.values = {{"service_name", LabelValue::string("Amazon CloudWatch")},
              {"location", LabelValue::string("Ireland")},
              {"service_category", LabelValue::string("management")},
              {"start_time", LabelValue::string("10:26:00")},
              {"end_time", LabelValue::string("14:40:00")},
              {"timezone", LabelValue::string("PST")},
              {"user_symptom", LabelValue::string("we experienced increased delays")},
              {"user_symptom_category", LabelValue::set({"DELAY"})}};
  return l;
}

}  // namespace

TEST_CASE("schemas follow the per-provider field availability") {
  auto aws = ExtractionSchema::for_provider(Provider::Aws);
  CHECK(aws.keys() == std::vector<std::string>{"service_name", "location", "service_category",
                                               "start_time", "end_time", "timezone",
                                               "user_symptom", "user_symptom_category"});
  auto azure = ExtractionSchema::for_provider(Provider::Azure);
  CHECK(azure.fields().size() == 10);
  CHECK(azure.has("root_cause"));
  CHECK(azure.has("root_cause_category"));
  auto gcp = ExtractionSchema::for_provider(Provider::Gcp);
  CHECK_FALSE(gcp.has("location"));
  CHECK(gcp.fields().size() == 7);
  for (const auto& s : {aws, azure, gcp}) {
    for (const auto& f : s.fields()) {
      CHECK(f.metric == metric_for(f.kind));
      bool categorical = f.kind == FieldKind::Class || f.kind == FieldKind::Multiclass;
      CHECK(categorical == f.vocabulary.has_value());
    }
  }
  CHECK_THROWS_AS(ExtractionSchema(Provider::Aws, {FieldSpec{"x", FieldKind::Class, Metric::EM}}),
                  ConfigError);
}

TEST_CASE("parse_provider_archive reads the AWS HTML archive") {
  auto parsed = parse_provider_archive(kFixtures + "/archives/aws_status.html", Provider::Aws);
  REQUIRE(parsed.reports.size() == 4);
  const auto& cw = parsed.reports[0];
  CHECK(cw.title == "Amazon CloudWatch (Ireland)");
  CHECK(cw.status == "[RESOLVED] Delayed CloudWatch Metrics");
  CHECK(cw.body_text.find("Between 10:26 AM and 02:40 PM PST, we experienced increased delays") !=
        std::string::npos);
  REQUIRE(cw.published_date);
  CHECK(format_date(*cw.published_date) == "2019-03-12");
  CHECK(cw.word_count > 0);
  CHECK(cw.word_count == compute_word_count(cw));
  CHECK(text::starts_with(cw.report_id, "aws-"));
  CHECK(cw.report_id.size() == 4 + 16);
  // Entity decoding.
  CHECK(parsed.reports[1].body_text.find("error rates & latencies") != std::string::npos);
  // The script block is not mistaken for an entry.
  CHECK(parsed.reports[3].title == "Amazon Simple Storage Service (Oregon)");
}

TEST_CASE("byte-identical entries hash equal and clean() drops one") {
  auto parsed = parse_provider_archive(kFixtures + "/archives/aws_status.html", Provider::Aws);
  const auto& a = parsed.reports[1];
  const auto& b = parsed.reports[2];
  CHECK(content_hash(a) == content_hash(b));
  // Recompute the hash from its definition.
  std::string buf = "AWS\x1f" + a.title + "\x1f" + a.status + "\x1f" + "2020-11-25" + "\x1f" + a.body_text;
  CHECK(content_hash(a) == sha256_hex(buf));
  auto cleaned = clean(parsed.reports);
  // One duplicate removed, one record with empty body removed.
  CHECK(cleaned.size() == 2);
}

TEST_CASE("empty archive yields no records and a warning") {
  auto parsed = parse_provider_archive(kFixtures + "/archives/aws_empty.html", Provider::Aws);
  CHECK(parsed.reports.empty());
  REQUIRE(parsed.warnings.size() == 1);
  CHECK(parsed.warnings[0].find("no incident entries") != std::string::npos);
}

TEST_CASE("unreadable archive is an ingest error naming the path") {
  try {
    parse_provider_archive(kFixtures + "/archives/missing.html", Provider::Aws);
    FAIL("expected IngestError");
  } catch (const IngestError& e) {
    CHECK(std::string(e.what()).find("missing.html") != std::string::npos);
  }
}

TEST_CASE("structured archives: GCP updates and Azure markup bodies") {
  auto gcp = parse_provider_archive(kFixtures + "/archives/gcp_incidents.json", Provider::Gcp);
  REQUIRE(gcp.reports.size() == 2);
  CHECK(gcp.reports[0].title == "Google Cloud Storage elevated error rates");
  CHECK(gcp.reports[0].body_text.find("07:45 US/Pacific") != std::string::npos);
  CHECK(format_date(*gcp.reports[0].published_date) == "2019-07-02");
  // "None" title is dropped by clean().
  CHECK(clean(gcp.reports).size() == 1);

  auto az = parse_provider_archive(kFixtures + "/archives/azure_history.json", Provider::Azure);
  REQUIRE(az.reports.size() == 1);
  CHECK(az.reports[0].body_text.find("<p>") == std::string::npos);
  CHECK(az.reports[0].body_text.find("What went wrong and why?\n") != std::string::npos);
  CHECK(format_date(*az.reports[0].published_date) == "2023-06-14");
}

TEST_CASE("rules loaded from config override the defaults") {
  auto rules = ExtractionRules::from_json(nlohmann::json::parse(R"J({
    "provider": "AWS",
    "html": {"entry": "li.item", "title": "b", "body": {"selector": "span", "regex": "Body: (.*)"},
             "status": null, "date": {"selector": "i", "regex": "on (\\S+)"}}
  })J"));
  auto parsed = parse_archive_content(
      "<ul><li class=item><b>Amazon S3 (Oregon)</b><i>posted on 2018-05-01</i>"
      "<span>Body: we saw errors</span></li></ul>",
      "inline", Provider::Aws, rules);
  REQUIRE(parsed.reports.size() == 1);
  CHECK(parsed.reports[0].title == "Amazon S3 (Oregon)");
  CHECK(parsed.reports[0].status.empty());
  CHECK(parsed.reports[0].body_text == "we saw errors");
  CHECK(format_date(*parsed.reports[0].published_date) == "2018-05-01");
}

TEST_CASE("parse_date formats") {
  CHECK(format_date(*parse_date("2019-03-12T10:00:00Z")) == "2019-03-12");
  CHECK(format_date(*parse_date("March 5, 2021")) == "2021-03-05");
  CHECK(format_date(*parse_date("Sep 30 2017")) == "2017-09-30");
  CHECK(format_date(*parse_date("14 June 2023")) == "2023-06-14");
  CHECK(format_date(*parse_date("11/25/2020")) == "2020-11-25");
  CHECK_FALSE(parse_date("yesterday"));
  CHECK_FALSE(parse_date("2019-02-30"));
}

TEST_CASE("clean: dedup, None filter, deterministic order, idempotence") {
  auto a = make(Provider::Aws, "A", "body a");
  auto b = make(Provider::Gcp, "B", "body b");
  SUBCASE("three records with two identical -> two") {
    CHECK(clean({a, b, a}).size() == 2);
  }
  SUBCASE("empty body dropped") {
    auto e = make(Provider::Aws, "E", "");
    auto n = make(Provider::Aws, "None", "text");
    CHECK(clean({a, e, n}).size() == 1);
  }
  SUBCASE("mixed corpus of ten -> stable order, byte-identical serialization") {
    std::vector<IncidentReport> recs;
    for (int i = 0; i < 10; ++i) {
      auto p = i % 3 == 0 ? Provider::Aws : i % 3 == 1 ? Provider::Azure : Provider::Gcp;
      recs.push_back(make(p, "Title " + std::to_string(i), "Body text number " + std::to_string(i)));
    }
    auto shuffled = recs;
    std::reverse(shuffled.begin(), shuffled.end());
    auto one = serialize_dataset(clean(recs));
    auto two = serialize_dataset(clean(shuffled));
    CHECK(one == two);
    auto once = clean(recs);
    CHECK(clean(once) == once);
    CHECK(std::is_sorted(once.begin(), once.end(),
                         [](auto& x, auto& y) { return x.report_id < y.report_id; }));
    std::set<std::string> hashes;
    for (auto& r : once) CHECK(hashes.insert(content_hash(r)).second);
  }
  SUBCASE("colliding ids with different content are disambiguated") {
    auto c1 = make(Provider::Aws, "Same", "prefix");
    auto c2 = c1;
    c2.status = "different status";
    REQUIRE(c1.report_id == c2.report_id);
    auto out = clean({c2, c1});
    REQUIRE(out.size() == 2);
    CHECK(out[0].report_id != out[1].report_id);
    CHECK(clean(out) == out);
  }
}

TEST_CASE("dataset round-trips through jsonl") {
  auto parsed = parse_provider_archive(kFixtures + "/archives/aws_status.html", Provider::Aws);
  auto cleaned = clean(parsed.reports);
  auto text = serialize_dataset(cleaned);
  auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  std::vector<std::string> keys;
  for (auto& [k, _] : first.items()) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  CHECK(keys == std::vector<std::string>{"body_text", "provider", "published_date", "report_id",
                                         "source_path", "status", "title", "word_count"});
  std::vector<IncidentReport> back;
  for (auto& line : text::split(text, '\n'))
    if (!line.empty()) back.push_back(report_from_json(nlohmann::json::parse(line)));
  CHECK(back == cleaned);
}

TEST_CASE("load_labels validation") {
  auto schema = ExtractionSchema::for_provider(Provider::Aws);
  auto line = [&](const GroundTruthLabel& l) { return to_json(l, schema).dump(); };

  SUBCASE("category in vocabulary accepted") {
    auto l = aws_label("aws-1");
    auto parsed = parse_labels(line(l), schema);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0].values.at("user_symptom_category") == LabelValue::set({"DELAY"}));
  }
  SUBCASE("multiclass set with two vocabulary members round-trips") {
    auto l = aws_label("aws-2");
    l.values["user_symptom_category"] = LabelValue::set({"ERROR", "DELAY"});
    l.values["location"] = LabelValue::absent();
    auto parsed = parse_labels(line(l), schema);
    REQUIRE(parsed.size() == 1);
    CHECK(parsed[0] == l);
    CHECK(serialize_labels(parsed, schema) == line(l) + "\n");
  }
  SUBCASE("out-of-range hour rejected") {
    auto l = aws_label("aws-3");
    l.values["start_time"] = LabelValue::string("25:00:00");
    CHECK_THROWS_AS(parse_labels(line(l), schema), ValidationError);
  }
  SUBCASE("category outside vocabulary names report and field") {
    auto l = aws_label("aws-4");
    l.values["service_category"] = LabelValue::string("quantum");
    try {
      parse_labels(line(l), schema);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      std::string msg = e.what();
      CHECK(msg.find("aws-4") != std::string::npos);
      CHECK(msg.find("service_category") != std::string::npos);
    }
  }
  SUBCASE("unknown and missing keys rejected") {
    CHECK_THROWS_AS(parse_labels(R"({"report_id":"x","root_cause":null})", schema), ValidationError);
    CHECK_THROWS_AS(parse_labels(R"({"report_id":"x","service_name":"S3"})", schema), ValidationError);
  }
  SUBCASE("empty string is not an absent marker") {
    auto l = aws_label("aws-5");
    l.values["timezone"] = LabelValue::string("");
    CHECK_THROWS_AS(parse_labels(line(l), schema), ValidationError);
  }
  SUBCASE("time pattern") {
    CHECK(is_time_of_day("00:00:00"));
    CHECK(is_time_of_day("23:59:59"));
    CHECK_FALSE(is_time_of_day("24:00:00"));
    CHECK_FALSE(is_time_of_day("9:00:00"));
    CHECK_FALSE(is_time_of_day("10:60:00"));
  }
}

TEST_CASE("label serialization round-trips for generated labels") {
  auto schema = ExtractionSchema::for_provider(Provider::Azure);
  std::vector<GroundTruthLabel> labels;
  unsigned state = 7;
  auto next = [&] { return state = state * 1103515245u + 12345u; };
  for (int i = 0; i < 50; ++i) {
    GroundTruthLabel l;
    l.report_id = "azure-" + std::to_string(i);
    for (const auto& f : schema.fields()) {
      if (next() % 5 == 0) {
        l.values[f.name] = LabelValue::absent();
        continue;
      }
      switch (f.kind) {
        case FieldKind::Entity:
          if (f.format == ValueFormat::TimeOfDay) {
            char buf[9];
            std::snprintf(buf, sizeof buf, "%02u:%02u:%02u", next() % 24, next() % 60, next() % 60);
            l.values[f.name] = LabelValue::string(buf);
          } else {
            l.values[f.name] = LabelValue::string("value \"" + std::to_string(next() % 1000) + "\" ü");
          }
          break;
        case FieldKind::Text: l.values[f.name] = LabelValue::string("text\nwith lines"); break;
        case FieldKind::Class:
          l.values[f.name] = LabelValue::string((*f.vocabulary)[next() % f.vocabulary->size()].name);
          break;
        case FieldKind::Multiclass: {
          CategorySet s;
          for (unsigned k = 0, n = 1 + next() % 3; k < n; ++k)
            s.push_back((*f.vocabulary)[next() % f.vocabulary->size()].name);
          l.values[f.name] = LabelValue::set(s);
          break;
        }
      }
    }
    labels.push_back(std::move(l));
  }
  CHECK(parse_labels(serialize_labels(labels, schema), schema) == labels);
}

TEST_CASE("agreement between annotators") {
  auto schema = ExtractionSchema::for_provider(Provider::Aws);
  std::vector<GroundTruthLabel> a, b;
  for (int i = 0; i < 4; ++i) {
    a.push_back(aws_label("aws-" + std::to_string(i)));
    b.push_back(aws_label("aws-" + std::to_string(i)));
  }
  SUBCASE("identical sets agree everywhere") {
    for (auto& [field, rate] : agreement(a, b, schema)) CHECK(rate == 1.0);
  }
  SUBCASE("one disagreement of four") {
    b[2].values["timezone"] = LabelValue::string("PDT");
    auto r = agreement(a, b, schema);
    CHECK(r.at("timezone") == doctest::Approx(0.75));
    CHECK(r.at("service_name") == 1.0);
  }
  SUBCASE("normalization and absent=absent") {
    b[0].values["service_name"] = LabelValue::string("  amazon   CLOUDWATCH ");
    a[1].values["location"] = LabelValue::absent();
    b[1].values["location"] = LabelValue::absent();
    auto r = agreement(a, b, schema);
    CHECK(r.at("service_name") == 1.0);
    CHECK(r.at("location") == 1.0);
  }
  SUBCASE("mismatched report sets list the symmetric difference") {
    b.pop_back();
    b.push_back(aws_label("aws-9"));
    try {
      agreement(a, b, schema);
      FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
      std::string msg = e.what();
      CHECK(msg.find("aws-3") != std::string::npos);
      CHECK(msg.find("aws-9") != std::string::npos);
    }
  }
}
