#include "doctest.h"

#include <algorithm>
#include <random>

#include "irx/error.hpp"
#include "irx/reporting.hpp"
#include "irx/text.hpp"

using namespace irx;

namespace {

const std::vector<std::string> kModels = {"GPT 3.5", "GPT 4o", "Claude 3.5", "Claude Sonnet 4", "Gemini 2.0",
                                          "Gemini 2.5"};
const std::vector<std::string> kEmFields = {"service_name", "location", "start_time",
                                            "end_time", "timezone", "service_category"};

// Published AWS exact-match percentages; columns alternate zero-shot and few-shot per model.
const double kAwsEm[6][12] = {
    {84.67, 100.00, 100.00, 100.00, 76.67, 100.00, 88.00, 100.00, 79.33, 100.00, 98.67, 100.00},
    {48.00, 96.67, 83.33, 98.67, 48.67, 96.67, 55.33, 97.33, 76.67, 96.67, 78.00, 96.00},
    {88.00, 91.33, 95.33, 96.00, 84.67, 94.67, 95.33, 95.33, 88.67, 94.67, 95.33, 95.33},
    {83.33, 86.00, 87.33, 88.00, 66.00, 86.00, 85.33, 86.67, 83.33, 88.67, 86.67, 88.00},
    {98.67, 98.67, 98.00, 98.67, 97.33, 98.00, 98.67, 98.67, 97.33, 98.67, 98.67, 98.67},
    {73.33, 73.33, 90.00, 68.00, 85.33, 87.33, 88.00, 89.33, 84.00, 86.00, 90.67, 90.67},
};
const double kAwsAverage[12] = {79.33, 91.00, 92.33, 91.56, 76.44, 93.78, 85.11, 94.56, 84.89, 94.11, 91.34, 94.78};

std::vector<Scorecard> aws_cards() {
  std::vector<Scorecard> cards;
  for (int col = 0; col < 12; ++col) {
    Scorecard c;
    c.dataset = Provider::Aws;
    c.model_alias = kModels[col / 2];
    c.strategy = col % 2 == 0 ? StrategyLabel::FullZS : StrategyLabel::FullFS;
    for (int r = 0; r < 6; ++r) c.field_scores.push_back({kEmFields[r], Metric::EM, kAwsEm[r][col] / 100.0, 150});
    // A token-F1 field that the exact-match view must leave out.
    c.field_scores.push_back({"symptom", Metric::TK, 0.5, 150});
    c.n_records = 150;
    cards.push_back(c);
  }
  return cards;
}

TradeoffRow row(Provider d, std::string alias, StrategyLabel s, double acc, const char* cost, double lat,
                std::optional<Tier> tier = std::nullopt) {
  TradeoffRow r;
  r.dataset = d;
  r.model_alias = std::move(alias);
  r.strategy = s;
  r.average_accuracy = acc;
  r.total_cost_usd = Usd::parse(cost);
  r.mean_latency_ms = lat;
  r.tier = tier;
  r.n_records = 1;
  return r;
}

}  // namespace

TEST_CASE("exact-match table has six rows, twelve columns and published averages") {
  auto t = accuracy_table(aws_cards(), Provider::Aws, Metric::EM);
  REQUIRE(t.rows() == 6);
  REQUIRE(t.columns.size() == 12);
  for (int col = 0; col < 12; ++col) CHECK(*t.average[col].value * 100.0 == doctest::Approx(kAwsAverage[col]).epsilon(0.0001));
  // First column: 79.33 within half a unit of the last printed digit.
  CHECK(std::abs(*t.average[0].value * 100.0 - 79.33) < 0.005);

  // Ties: every 100.00 in the service name row is best.
  int best = 0;
  for (const auto& c : t.cells[0]) best += c.best;
  CHECK(best == 7);
  CHECK(t.cells[0][4].worst);
  CHECK(t.cells[1][0].worst);
  CHECK(t.cells[1][3].best);
  CHECK(t.cells[5][3].worst);
  CHECK((t.cells[5][10].best && t.cells[5][11].best));
  CHECK(t.average[4].worst);
  CHECK(t.average[11].best);

  auto md = t.to_markdown();
  CHECK(md.find("| Average |") != std::string::npos);
  CHECK(md.find("**100.00**") != std::string::npos);
  CHECK(md.find("_76.4") != std::string::npos);  // mean of rounded cells is 76.445
  CHECK(md.find("symptom") == std::string::npos);
}

TEST_CASE("marks are invariant under column permutation") {
  auto cards = aws_cards();
  auto base = accuracy_table(cards, Provider::Aws, Metric::EM);
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto shuffled = cards;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    auto t = accuracy_table(shuffled, Provider::Aws, Metric::EM);
    for (std::size_t col = 0; col < t.columns.size(); ++col) {
      std::size_t orig = 0;
      while (base.columns[orig].model_alias != t.columns[col].model_alias ||
             base.columns[orig].strategy != t.columns[col].strategy)
        ++orig;
      for (std::size_t r = 0; r < t.rows(); ++r) {
        CHECK(t.cells[r][col].best == base.cells[r][orig].best);
        CHECK(t.cells[r][col].worst == base.cells[r][orig].worst);
      }
    }
  }
}

TEST_CASE("a row of equal values is both best and worst; missing cells stay blank") {
  std::vector<Scorecard> cards(3);
  for (int i = 0; i < 3; ++i) {
    cards[i].model_alias = "M" + std::to_string(i);
    cards[i].field_scores.push_back({"service_name", Metric::EM, 0.5, 10});
    if (i != 1) cards[i].field_scores.push_back({"location", Metric::EM, 0.1 * (i + 1), 10});
  }
  auto t = accuracy_table(cards, Provider::Aws);
  for (const auto& c : t.cells[0]) CHECK((c.best && c.worst));
  CHECK_FALSE(t.cells[1][1].value.has_value());
  CHECK(t.cells[1][0].worst);
  CHECK(t.cells[1][2].best);
  CHECK(t.to_markdown().find("**_50.00_**") != std::string::npos);

  auto csv = text::parse_csv(t.to_csv());
  CHECK(csv.size() == 1 + 3 * 3);
  CHECK(csv[0][0] == "dataset");
  CHECK(csv.back()[1] == "average");

  CHECK_THROWS_AS(accuracy_table(cards, Provider::Gcp), ReportError);
  CHECK_THROWS_AS(accuracy_table({}, Provider::Aws), ReportError);
}

TEST_CASE("tradeoff rows are lossless, sorted and tiered from the registry") {
  auto cards = aws_cards();
  for (std::size_t i = 0; i < cards.size(); ++i) {
    cards[i].total_cost = Usd::from_picos(static_cast<std::int64_t>((i * 7919) % 13) * 1'000'000'000);
    cards[i].mean_latency_ms = 1000.0 + static_cast<double>(i);
  }
  cards[3].total_cost = Usd{};  // zero-cost rows are kept
  auto rows = tradeoff_rows(cards, ModelRegistry::defaults());
  REQUIRE(rows.size() == 12);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i - 1].total_cost_usd <= rows[i].total_cost_usd);
  for (const auto& r : rows) {
    REQUIRE(r.tier.has_value());
    auto expected = ModelRegistry::defaults().find(r.model_alias).tier;
    CHECK(*r.tier == expected);
  }
  CHECK(rows.front().total_cost_usd == Usd{});
  auto csv = text::parse_csv(tradeoff_csv(rows));
  CHECK(csv.size() == 13);

  Scorecard unknown;
  unknown.model_alias = "Local Model";
  CHECK_FALSE(tradeoff_rows({unknown}, ModelRegistry::defaults())[0].tier.has_value());
}

TEST_CASE("Azure cost ratio between the priciest and cheapest configurations") {
  std::vector<TradeoffRow> rows = {
      row(Provider::Azure, "Claude Sonnet 4", StrategyLabel::FullFS, 0.80, "0.019054", 9000),
      row(Provider::Azure, "Gemini 2.0", StrategyLabel::FullZS, 0.75, "0.000310", 2000),
  };
  auto r = cost_ratio(rows);
  CHECK(std::abs(static_cast<double>(r) - 61.5) <= 0.1);
  rows[1] = row(Provider::Azure, "Gemini 2.0", StrategyLabel::FullFS, 0.78, "0.000427", 2500);
  CHECK(std::abs(static_cast<double>(cost_ratio(rows)) - 44.6) <= 0.1);
  CHECK_THROWS_AS(cost_ratio({}), ReportError);
}

TEST_CASE("recommendation weights") {
  std::vector<TradeoffRow> rows = {
      row(Provider::Azure, "Claude Sonnet 4", StrategyLabel::FullFS, 0.80, "0.019054", 9000, Tier::Sota),
      row(Provider::Azure, "Gemini 2.0", StrategyLabel::FullFS, 0.79, "0.000427", 2500, Tier::Lightweight),
      row(Provider::Azure, "Gemini 2.0", StrategyLabel::FullZS, 0.70, "0.000310", 2000, Tier::Lightweight),
      row(Provider::Azure, "GPT 4o", StrategyLabel::FullFS, 0.82, "0.011000", 6000, Tier::Sota),
  };

  SUBCASE("accuracy only ranks by accuracy") {
    auto recs = recommend(rows, {1, 0, 0});
    for (std::size_t i = 1; i < recs.size(); ++i)
      CHECK(recs[i - 1].row.average_accuracy >= recs[i].row.average_accuracy);
    CHECK(recs[0].rank == 1);
    CHECK(recs[0].row.model_alias == "GPT 4o");
  }
  SUBCASE("equal accuracy prefers the cheaper row") {
    auto eq = rows;
    for (auto& r : eq) r.average_accuracy = 0.8;
    auto recs = recommend(eq, {1, 1, 0});
    CHECK(recs[0].row.total_cost_usd == Usd::parse("0.000310"));
    for (std::size_t i = 1; i < recs.size(); ++i) CHECK(recs[i - 1].row.total_cost_usd <= recs[i].row.total_cost_usd);
  }
  SUBCASE("near-equal accuracy at far lower cost wins under balanced weights") {
    auto recs = recommend(rows, {1, 1, 1});
    CHECK(recs[0].row.model_alias == "Gemini 2.0");
    CHECK(recs[0].row.tier == Tier::Lightweight);
    CHECK(recs[0].rationale.find("Gemini 2.0") != std::string::npos);
    CHECK(recs[0].score <= 1.0);
    CHECK(recs.back().score >= 0.0);
  }
  SUBCASE("ranking is invariant to the cost unit") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> w(0.0, 2.0);
    for (int trial = 0; trial < 50; ++trial) {
      Weights wt{w(rng), w(rng), w(rng) + 0.01};
      auto scaled = rows;
      for (auto& r : scaled) r.total_cost_usd = Usd::from_picos(r.total_cost_usd.picos() * 1000);
      auto a = recommend(rows, wt);
      auto b = recommend(scaled, wt);
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].row.model_alias == b[i].row.model_alias);
        CHECK(a[i].row.strategy == b[i].row.strategy);
        CHECK(a[i].score == b[i].score);
      }
    }
  }
  SUBCASE("single row and bad weights") {
    auto recs = recommend({rows[0]}, {1, 1, 1});
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].rank == 1);
    CHECK_THROWS_AS(recommend(rows, {0, 0, 0}), ReportError);
    CHECK_THROWS_AS(recommend(rows, {-1, 1, 1}), ReportError);
  }
  SUBCASE("datasets rank independently") {
    auto mixed = rows;
    mixed.push_back(row(Provider::Gcp, "GPT 3.5", StrategyLabel::BasicZS, 0.5, "0.001", 100));
    auto recs = recommend(mixed, {1, 1, 1});
    auto gcp = std::find_if(recs.begin(), recs.end(), [](const auto& r) { return r.row.dataset == Provider::Gcp; });
    REQUIRE(gcp != recs.end());
    CHECK(gcp->rank == 1);
    CHECK(recommendations_markdown(recs).find("## GCP") != std::string::npos);
  }
}

TEST_CASE("weights parsing") {
  auto w = parse_weights("1,0.5,0");
  CHECK(w.accuracy == 1.0);
  CHECK(w.cost == 0.5);
  CHECK(w.latency == 0.0);
  CHECK_THROWS_AS(parse_weights("1,2"), ReportError);
  CHECK_THROWS_AS(parse_weights("a,b,c"), ReportError);
}

TEST_CASE("scatter plot has one marker per row and a panel per dataset") {
  std::vector<TradeoffRow> rows = {
      row(Provider::Aws, "GPT 3.5", StrategyLabel::FullZS, 0.79, "0.01", 1000, Tier::Lightweight),
      row(Provider::Aws, "A<B", StrategyLabel::FullFS, 0.91, "0.02", 3000),
      row(Provider::Gcp, "GPT 4o", StrategyLabel::FullZS, 0.55, "0.00", 500, Tier::Sota),
  };
  auto svg = tradeoff_svg(rows);
  CHECK(svg.rfind("<svg", 0) == 0);
  std::size_t circles = 0;
  for (auto p = svg.find("<circle"); p != std::string::npos; p = svg.find("<circle", p + 1)) ++circles;
  CHECK(circles == 3);
  CHECK(svg.find("A&lt;B") != std::string::npos);
  CHECK(svg.find(">GCP<") != std::string::npos);
}
