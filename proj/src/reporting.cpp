#include "irx/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <fmt/format.h>

#include "irx/error.hpp"
#include "irx/text.hpp"

namespace irx {

namespace {

constexpr double kTieTolerance = 1e-9;

int strategy_rank(StrategyLabel s) {
  auto m = strategy_matrix();
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].label == s) return static_cast<int>(i);
  return 99;
}

void mark(std::vector<AccuracyCell>& row) {
  std::optional<double> lo, hi;
  for (const auto& c : row) {
    if (!c.value) continue;
    lo = lo ? std::min(*lo, *c.value) : *c.value;
    hi = hi ? std::max(*hi, *c.value) : *c.value;
  }
  for (auto& c : row) {
    if (!c.value) continue;
    c.best = *hi - *c.value <= kTieTolerance;
    c.worst = *c.value - *lo <= kTieTolerance;
  }
}

std::string percent(const AccuracyCell& c) {
  if (!c.value) return "";
  auto s = fmt::format("{:.2f}", *c.value * 100.0);
  if (c.best && c.worst) return "**_" + s + "_**";
  if (c.best) return "**" + s + "**";
  if (c.worst) return "_" + s + "_";
  return s;
}

std::string md_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

AccuracyTable accuracy_table(const std::vector<Scorecard>& cards, Provider dataset, std::optional<Metric> metric) {
  AccuracyTable t;
  t.dataset = dataset;
  std::vector<const Scorecard*> used;
  for (const auto& c : cards) {
    if (c.dataset != dataset) continue;
    used.push_back(&c);
    t.columns.push_back({c.model_alias, c.strategy});
    for (const auto& f : c.field_scores) {
      if (metric && f.metric != *metric) continue;
      if (std::find(t.fields.begin(), t.fields.end(), f.field) == t.fields.end()) {
        t.fields.push_back(f.field);
        t.metrics.push_back(f.metric);
      }
    }
  }
  if (used.empty()) throw ReportError("no scorecards for dataset " + std::string(to_string(dataset)));
  if (t.fields.empty()) throw ReportError("no field scores to tabulate for " + std::string(to_string(dataset)));

  for (const auto& field : t.fields) {
    std::vector<AccuracyCell> row;
    for (const auto* c : used) {
      const auto* f = c->find(field);
      row.push_back({f ? std::optional<double>(f->value) : std::nullopt});
    }
    mark(row);
    t.cells.push_back(std::move(row));
  }
  for (std::size_t col = 0; col < used.size(); ++col) {
    std::vector<double> vals;
    for (const auto& row : t.cells)
      if (row[col].value) vals.push_back(*row[col].value);
    t.average.push_back({vals.empty() ? std::nullopt : std::optional<double>(mean(vals))});
  }
  mark(t.average);
  return t;
}

std::string AccuracyTable::to_markdown() const {
  std::string out = "| Field | Metric |";
  std::string rule = "|---|---|";
  for (const auto& c : columns) {
    out += " " + md_escape(c.model_alias) + " " + std::string(to_string(c.strategy)) + " |";
    rule += "---:|";
  }
  out += "\n" + rule + "\n";
  for (std::size_t r = 0; r < fields.size(); ++r) {
    out += "| " + md_escape(fields[r]) + " | " + std::string(to_string(metrics[r])) + " |";
    for (const auto& c : cells[r]) out += " " + percent(c) + " |";
    out += "\n";
  }
  out += "| Average | |";
  for (const auto& c : average) out += " " + percent(c) + " |";
  out += "\n";
  return out;
}

std::string AccuracyTable::to_csv() const {
  std::string out = text::csv_row({"dataset", "field", "metric", "model_alias", "strategy", "value", "best", "worst"}) + "\n";
  auto emit = [&](const std::string& field, const std::string& metric, const std::vector<AccuracyCell>& row) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto& cell = row[c];
      out += text::csv_row({std::string(to_string(dataset)), field, metric, columns[c].model_alias,
                            std::string(to_string(columns[c].strategy)),
                            cell.value ? fmt::format("{:.10f}", *cell.value) : "", cell.best ? "1" : "0",
                            cell.worst ? "1" : "0"}) +
             "\n";
    }
  };
  for (std::size_t r = 0; r < fields.size(); ++r) emit(fields[r], std::string(to_string(metrics[r])), cells[r]);
  emit("average", "", average);
  return out;
}

std::vector<TradeoffRow> tradeoff_rows(const std::vector<Scorecard>& cards, const ModelRegistry& registry) {
  std::vector<TradeoffRow> rows;
  for (const auto& c : cards) {
    TradeoffRow r;
    r.dataset = c.dataset;
    r.model_alias = c.model_alias;
    r.strategy = c.strategy;
    r.average_accuracy = c.average;
    r.total_cost_usd = c.total_cost;
    r.mean_latency_ms = c.mean_latency_ms;
    r.n_records = c.n_records;
    if (registry.contains(c.model_alias)) r.tier = registry.find(c.model_alias).tier;
    rows.push_back(std::move(r));
  }
  std::sort(rows.begin(), rows.end(), [](const TradeoffRow& a, const TradeoffRow& b) {
    if (a.dataset != b.dataset) return a.dataset < b.dataset;
    if (a.total_cost_usd != b.total_cost_usd) return a.total_cost_usd < b.total_cost_usd;
    if (a.model_alias != b.model_alias) return a.model_alias < b.model_alias;
    return strategy_rank(a.strategy) < strategy_rank(b.strategy);
  });
  return rows;
}

std::string tradeoff_csv(const std::vector<TradeoffRow>& rows) {
  std::string out = text::csv_row({"dataset", "model_alias", "strategy", "tier", "average_accuracy", "total_cost_usd",
                                   "mean_latency_ms", "n_records"}) +
                    "\n";
  for (const auto& r : rows)
    out += text::csv_row({std::string(to_string(r.dataset)), r.model_alias, std::string(to_string(r.strategy)),
                          r.tier ? std::string(to_string(*r.tier)) : "", fmt::format("{:.10f}", r.average_accuracy),
                          r.total_cost_usd.str(), fmt::format("{:.3f}", r.mean_latency_ms),
                          std::to_string(r.n_records)}) +
           "\n";
  return out;
}

long double cost_ratio(const std::vector<TradeoffRow>& rows) {
  if (rows.empty()) throw ReportError("cost ratio needs at least one row");
  auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.total_cost_usd < b.total_cost_usd;
  });
  if (lo->total_cost_usd.picos() <= 0) throw ReportError("cheapest row has zero cost; ratio undefined");
  return static_cast<long double>(hi->total_cost_usd.picos()) / static_cast<long double>(lo->total_cost_usd.picos());
}

Weights parse_weights(std::string_view s) {
  auto parts = text::split(s, ',');
  if (parts.size() != 3) throw ReportError("weights must be three comma-separated numbers: accuracy,cost,latency");
  Weights w;
  try {
    w.accuracy = std::stod(parts[0]);
    w.cost = std::stod(parts[1]);
    w.latency = std::stod(parts[2]);
  } catch (const std::exception&) {
    throw ReportError("weights must be numbers: " + std::string(s));
  }
  return w;
}

namespace {

// Min-max normalization of exact integers: (x - lo) / (hi - lo). Integer
// differences keep the result independent of the unit the values are in.
long double normalize_int(std::int64_t x, std::int64_t lo, std::int64_t hi) {
  if (hi == lo) return 0.0L;
  return static_cast<long double>(x - lo) / static_cast<long double>(hi - lo);
}

long double normalize_real(double x, double lo, double hi) {
  if (hi == lo) return 0.0L;
  return (static_cast<long double>(x) - lo) / (static_cast<long double>(hi) - lo);
}

std::string ordinal_rank(std::size_t pos, std::size_t n) { return fmt::format("{} of {}", pos, n); }

}  // namespace

std::vector<Recommendation> recommend(const std::vector<TradeoffRow>& rows, const Weights& w) {
  for (double x : {w.accuracy, w.cost, w.latency})
    if (!std::isfinite(x) || x < 0) throw ReportError("weights must be finite and non-negative");
  const double wsum = w.accuracy + w.cost + w.latency;
  if (wsum <= 0) throw ReportError("at least one weight must be positive");

  std::map<Provider, std::vector<const TradeoffRow*>> by_dataset;
  for (const auto& r : rows) by_dataset[r.dataset].push_back(&r);

  std::vector<Recommendation> out;
  for (auto& [dataset, group] : by_dataset) {
    const std::size_t n = group.size();
    if (n == 1) {
      out.push_back({*group[0], 1.0, 1, fmt::format("{} / {}: only candidate for {}", group[0]->model_alias,
                                                     to_string(group[0]->strategy), to_string(dataset))});
      continue;
    }
    double acc_lo = group[0]->average_accuracy, acc_hi = acc_lo;
    double lat_lo = group[0]->mean_latency_ms, lat_hi = lat_lo;
    std::int64_t cost_lo = group[0]->total_cost_usd.picos(), cost_hi = cost_lo;
    for (const auto* r : group) {
      acc_lo = std::min(acc_lo, r->average_accuracy);
      acc_hi = std::max(acc_hi, r->average_accuracy);
      lat_lo = std::min(lat_lo, r->mean_latency_ms);
      lat_hi = std::max(lat_hi, r->mean_latency_ms);
      cost_lo = std::min(cost_lo, r->total_cost_usd.picos());
      cost_hi = std::max(cost_hi, r->total_cost_usd.picos());
    }
    std::vector<Recommendation> recs;
    for (const auto* r : group) {
      long double acc = acc_hi == acc_lo ? 1.0L : normalize_real(r->average_accuracy, acc_lo, acc_hi);
      long double cost = normalize_int(r->total_cost_usd.picos(), cost_lo, cost_hi);
      long double lat = normalize_real(r->mean_latency_ms, lat_lo, lat_hi);
      long double score = w.accuracy * acc + w.cost * (1.0L - cost) + w.latency * (1.0L - lat);
      recs.push_back({*r, static_cast<double>(score / wsum), 0, ""});
    }
    std::stable_sort(recs.begin(), recs.end(), [](const Recommendation& a, const Recommendation& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.row.total_cost_usd != b.row.total_cost_usd) return a.row.total_cost_usd < b.row.total_cost_usd;
      if (a.row.model_alias != b.row.model_alias) return a.row.model_alias < b.row.model_alias;
      return strategy_rank(a.row.strategy) < strategy_rank(b.row.strategy);
    });
    // Per-dimension positions for the rationale text.
    auto position = [&](auto better) {
      std::map<const TradeoffRow*, std::size_t> pos;
      for (const auto* r : group) {
        std::size_t p = 1;
        for (const auto* o : group)
          if (better(*o, *r)) ++p;
        pos[r] = p;
      }
      return pos;
    };
    auto acc_pos = position([](const TradeoffRow& a, const TradeoffRow& b) { return a.average_accuracy > b.average_accuracy; });
    auto cost_pos = position([](const TradeoffRow& a, const TradeoffRow& b) { return a.total_cost_usd < b.total_cost_usd; });
    auto lat_pos = position([](const TradeoffRow& a, const TradeoffRow& b) { return a.mean_latency_ms < b.mean_latency_ms; });
    for (std::size_t i = 0; i < recs.size(); ++i) {
      auto& rec = recs[i];
      rec.rank = i + 1;
      const TradeoffRow* key = nullptr;
      for (const auto* r : group)
        if (r->model_alias == rec.row.model_alias && r->strategy == rec.row.strategy) key = r;
      rec.rationale = fmt::format(
          "{} / {}{}: accuracy {:.2f}% ({}), total cost ${} ({}), mean latency {:.0f} ms ({}); weighted score {:.4f}",
          rec.row.model_alias, to_string(rec.row.strategy),
          rec.row.tier ? fmt::format(" [{}]", to_string(*rec.row.tier)) : std::string(),
          rec.row.average_accuracy * 100.0, ordinal_rank(acc_pos[key], n), rec.row.total_cost_usd.str(),
          ordinal_rank(cost_pos[key], n), rec.row.mean_latency_ms, ordinal_rank(lat_pos[key], n), rec.score);
    }
    for (auto& r : recs) out.push_back(std::move(r));
  }
  return out;
}

std::string recommendations_markdown(const std::vector<Recommendation>& recs) {
  std::string out;
  std::optional<Provider> current;
  for (const auto& r : recs) {
    if (!current || *current != r.row.dataset) {
      current = r.row.dataset;
      out += fmt::format("{}## {}\n\n| Rank | Model | Strategy | Score | Rationale |\n|---:|---|---|---:|---|\n",
                         out.empty() ? "" : "\n", to_string(r.row.dataset));
    }
    out += fmt::format("| {} | {} | {} | {:.4f} | {} |\n", r.rank, md_escape(r.row.model_alias),
                       to_string(r.row.strategy), r.score, md_escape(r.rationale));
  }
  return out;
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string tradeoff_svg(const std::vector<TradeoffRow>& rows) {
  std::map<Provider, std::vector<const TradeoffRow*>> panels;
  for (const auto& r : rows) panels[r.dataset].push_back(&r);
  const double pw = 420, ph = 320, ml = 60, mb = 45, mt = 30, mr = 20;
  const double width = std::max<double>(1.0, static_cast<double>(panels.size())) * pw;
  std::string out = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      width, ph);
  double max_latency = 1.0;
  for (const auto& r : rows) max_latency = std::max(max_latency, r.mean_latency_ms);
  std::size_t p = 0;
  for (const auto& [dataset, group] : panels) {
    const double x0 = static_cast<double>(p++) * pw;
    long double cmax = 0;
    for (const auto* r : group) cmax = std::max(cmax, r->total_cost_usd.to_long_double());
    if (cmax <= 0) cmax = 1;
    const double plot_w = pw - ml - mr, plot_h = ph - mt - mb;
    out += fmt::format("<g transform=\"translate({:.0f},0)\">\n", x0);
    out += fmt::format("<text x=\"{:.1f}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{}</text>\n",
                       ml + plot_w / 2, to_string(dataset));
    out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#444\"/>\n",
                       ml, mt, plot_w, plot_h);
    for (int tick = 0; tick <= 4; ++tick) {
      double y = mt + plot_h * (1.0 - tick / 4.0);
      out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}%</text>\n", ml - 4, y + 4, tick * 25);
      double x = ml + plot_w * tick / 4.0;
      out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:.4g}</text>\n", x, mt + plot_h + 14,
                         static_cast<double>(cmax) * tick / 4.0);
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">total cost (USD)</text>\n",
                       ml + plot_w / 2, ph - 8);
    out += fmt::format(
        "<text transform=\"rotate(-90)\" x=\"{:.1f}\" y=\"14\" text-anchor=\"middle\">average accuracy</text>\n",
        -(mt + plot_h / 2));
    for (const auto* r : group) {
      double x = ml + plot_w * static_cast<double>(r->total_cost_usd.to_long_double() / cmax);
      double y = mt + plot_h * (1.0 - std::clamp(r->average_accuracy, 0.0, 1.0));
      double radius = 3.0 + 9.0 * std::sqrt(std::max(0.0, r->mean_latency_ms) / max_latency);
      const char* color = !r->tier ? "#888888" : (*r->tier == Tier::Sota ? "#c0392b" : "#2471a3");
      out += fmt::format(
          "<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"{:.1f}\" fill=\"{}\" fill-opacity=\"0.6\"><title>{} / {}: "
          "{:.2f}%, ${}, {:.0f} ms</title></circle>\n",
          x, y, radius, color, xml_escape(r->model_alias), to_string(r->strategy), r->average_accuracy * 100.0,
          r->total_cost_usd.str(), r->mean_latency_ms);
      out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"9\">{} {}</text>\n", x + radius + 2, y + 3,
                         xml_escape(r->model_alias), to_string(r->strategy));
    }
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace irx
