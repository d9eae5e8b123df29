#include "irx/corpus.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "irx/error.hpp"
#include "irx/hash.hpp"
#include "irx/html.hpp"
#include "irx/text.hpp"

namespace irx {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------- dates

std::string format_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

namespace {

int month_from_name(std::string_view name) {
  static constexpr std::array<std::string_view, 12> kMonths = {
      "january", "february", "march",     "april",   "may",      "june",
      "july",    "august",   "september", "october", "november", "december"};
  auto n = text::lower(name);
  if (!n.empty() && n.back() == '.') n.pop_back();
  if (n.size() < 3) return 0;
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (n == kMonths[i] || (n.size() <= kMonths[i].size() && kMonths[i].substr(0, n.size()) == n))
      return static_cast<int>(i) + 1;
  }
  return 0;
}

std::optional<Date> make_date(int y, int m, int d) {
  Date ymd{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(m)),
           std::chrono::day(static_cast<unsigned>(d))};
  if (y < 1970 || y > 2100 || !ymd.ok()) return std::nullopt;
  return ymd;
}

}  // namespace

std::optional<Date> parse_date(std::string_view raw) {
  auto s = text::trim(raw);
  std::smatch m;
  static const std::regex iso(R"(^(\d{4})-(\d{1,2})-(\d{1,2})(?:[T ].*)?$)");
  static const std::regex us(R"(^(\d{1,2})/(\d{1,2})/(\d{4}).*$)");
  static const std::regex mdy(R"(^([A-Za-z]+\.?)\s+(\d{1,2})(?:st|nd|rd|th)?,?\s+(\d{4}).*$)");
  static const std::regex dmy(R"(^(\d{1,2})(?:st|nd|rd|th)?\s+([A-Za-z]+\.?),?\s+(\d{4}).*$)");
  if (std::regex_match(s, m, iso))
    return make_date(std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]));
  if (std::regex_match(s, m, us))
    return make_date(std::stoi(m[3]), std::stoi(m[1]), std::stoi(m[2]));
  if (std::regex_match(s, m, mdy)) {
    int mo = month_from_name(m[1].str());
    if (mo) return make_date(std::stoi(m[3]), mo, std::stoi(m[2]));
  }
  if (std::regex_match(s, m, dmy)) {
    int mo = month_from_name(m[2].str());
    if (mo) return make_date(std::stoi(m[3]), mo, std::stoi(m[1]));
  }
  return std::nullopt;
}

namespace {

std::optional<Date> date_from_epoch(long long seconds) {
  if (seconds > 100'000'000'000LL) seconds /= 1000;  // milliseconds
  auto days = std::chrono::floor<std::chrono::days>(std::chrono::sys_seconds{std::chrono::seconds{seconds}});
  Date d{days};
  if (static_cast<int>(d.year()) < 1970 || static_cast<int>(d.year()) > 2100) return std::nullopt;
  return d;
}

}  // namespace

// ---------------------------------------------------------------- reports

std::size_t compute_word_count(const IncidentReport& r) {
  return text::count_words(r.title) + text::count_words(r.status) + text::count_words(r.body_text);
}

namespace {

constexpr char kSep = '\x1f';

std::string date_or_empty(const IncidentReport& r) {
  return r.published_date ? format_date(*r.published_date) : std::string();
}

}  // namespace

std::string content_hash(const IncidentReport& r) {
  std::string buf;
  buf += to_string(r.provider);
  buf += kSep;
  buf += r.title;
  buf += kSep;
  buf += r.status;
  buf += kSep;
  buf += date_or_empty(r);
  buf += kSep;
  buf += r.body_text;
  return sha256_hex(buf);
}

std::string make_report_id(const IncidentReport& r) {
  std::string buf = r.title;
  buf += kSep;
  buf += date_or_empty(r);
  buf += kSep;
  buf += r.body_text.substr(0, 512);
  return std::string(provider_code(r.provider)) + "-" + sha256_hex(buf).substr(0, 16);
}

IncidentReport finalize_report(IncidentReport r) {
  r.word_count = compute_word_count(r);
  r.report_id = make_report_id(r);
  return r;
}

ordered_json to_json(const IncidentReport& r) {
  ordered_json j;
  j["report_id"] = r.report_id;
  j["provider"] = std::string(to_string(r.provider));
  j["title"] = r.title;
  j["status"] = r.status;
  j["body_text"] = r.body_text;
  j["published_date"] = r.published_date ? ordered_json(format_date(*r.published_date)) : ordered_json();
  j["word_count"] = r.word_count;
  j["source_path"] = r.source_path;
  return j;
}

IncidentReport report_from_json(const json& j) {
  IncidentReport r;
  try {
    r.report_id = j.at("report_id").get<std::string>();
    r.provider = parse_provider(j.at("provider").get<std::string>());
    r.title = j.at("title").get<std::string>();
    r.status = j.value("status", "");
    r.body_text = j.at("body_text").get<std::string>();
    if (j.contains("published_date") && !j["published_date"].is_null()) {
      r.published_date = parse_date(j["published_date"].get<std::string>());
      if (!r.published_date) throw ValidationError("bad published_date");
    }
    r.word_count = j.value("word_count", std::size_t{0});
    r.source_path = j.value("source_path", "");
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed report record: ") + e.what());
  }
  return r;
}

std::vector<IncidentReport> read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read dataset: " + path);
  std::vector<IncidentReport> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(report_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw IngestError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string serialize_dataset(const std::vector<IncidentReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

void write_dataset(const std::string& path, const std::vector<IncidentReport>& reports) {
  text::write_file_atomic(path, serialize_dataset(reports));
}

// ---------------------------------------------------------------- rules

namespace {

FieldRule rule_from_json(const json& j) {
  FieldRule r;
  if (j.is_null()) return r;
  if (j.is_string()) {
    r.selector = j.get<std::string>();
    return r;
  }
  if (!j.is_object()) throw ConfigError("field rule must be a string or an object");
  r.selector = j.value("selector", j.value("key", ""));
  r.attribute = j.value("attribute", "");
  r.regex = j.value("regex", "");
  if (!r.regex.empty()) {
    try {
      std::regex test(r.regex);
    } catch (const std::regex_error& e) {
      throw ConfigError("bad regex in extraction rule: " + r.regex);
    }
  }
  return r;
}

}  // namespace

ExtractionRules ExtractionRules::defaults(Provider p) {
  ExtractionRules r;
  r.provider = p;
  switch (p) {
    case Provider::Aws:
      r.html_entry = "div.event";
      r.html_title = {".event-title", "", ""};
      r.html_status = {".event-status", "", ""};
      r.html_body = {".event-description", "", ""};
      r.html_date = {"time", "datetime", ""};
      r.json_entries = "archive";
      r.json_title = {"service_name", "", ""};
      r.json_status = {"summary", "", ""};
      r.json_body = {"description", "", ""};
      r.json_date = {"date", "", ""};
      break;
    case Provider::Azure:
      r.html_entry = "div.incident";
      r.html_title = {"h3", "", ""};
      r.html_status = {".incident-status", "", ""};
      r.html_body = {".incident-body", "", ""};
      r.html_date = {".incident-date", "", ""};
      r.json_entries = "incidents";
      r.json_title = {"title", "", ""};
      r.json_status = {"status", "", ""};
      r.json_body = {"description", "", ""};
      r.json_date = {"date", "", ""};
      break;
    case Provider::Gcp:
      r.html_entry = "div.incident";
      r.html_title = {"h1", "", ""};
      r.html_status = {".status", "", ""};
      r.html_body = {".updates", "", ""};
      r.html_date = {".begin", "", ""};
      r.json_entries = "";
      r.json_title = {"external_desc", "", ""};
      r.json_status = {"severity", "", ""};
      r.json_body = {"updates", "", ""};
      r.json_date = {"begin", "", ""};
      break;
  }
  return r;
}

ExtractionRules ExtractionRules::from_json(const json& j) {
  ExtractionRules r = defaults(parse_provider(j.at("provider").get<std::string>()));
  if (j.contains("html")) {
    const auto& h = j["html"];
    r.html_entry = h.value("entry", r.html_entry);
    if (h.contains("title")) r.html_title = rule_from_json(h["title"]);
    if (h.contains("status")) r.html_status = rule_from_json(h["status"]);
    if (h.contains("body")) r.html_body = rule_from_json(h["body"]);
    if (h.contains("date")) r.html_date = rule_from_json(h["date"]);
  }
  if (j.contains("json")) {
    const auto& s = j["json"];
    r.json_entries = s.value("entries", r.json_entries);
    if (s.contains("title")) r.json_title = rule_from_json(s["title"]);
    if (s.contains("status")) r.json_status = rule_from_json(s["status"]);
    if (s.contains("body")) r.json_body = rule_from_json(s["body"]);
    if (s.contains("date")) r.json_date = rule_from_json(s["date"]);
  }
  return r;
}

namespace {

json rule_to_json(const FieldRule& r) {
  if (r.attribute.empty() && r.regex.empty()) return r.selector;
  json j = {{"selector", r.selector}};
  if (!r.attribute.empty()) j["attribute"] = r.attribute;
  if (!r.regex.empty()) j["regex"] = r.regex;
  return j;
}

}  // namespace

nlohmann::ordered_json ExtractionRules::to_json() const {
  nlohmann::ordered_json j;
  j["provider"] = std::string(provider_code(provider));
  j["html"] = {{"entry", html_entry},
               {"title", rule_to_json(html_title)},
               {"status", rule_to_json(html_status)},
               {"body", rule_to_json(html_body)},
               {"date", rule_to_json(html_date)}};
  j["json"] = {{"entries", json_entries},
               {"title", rule_to_json(json_title)},
               {"status", rule_to_json(json_status)},
               {"body", rule_to_json(json_body)},
               {"date", rule_to_json(json_date)}};
  return j;
}

ExtractionRules ExtractionRules::load(const std::string& dir, Provider p) {
  namespace fs = std::filesystem;
  fs::path path = fs::path(dir) / (std::string(provider_code(p)) + ".json");
  if (!fs::exists(path)) return defaults(p);
  try {
    auto rules = from_json(json::parse(text::read_file(path.string())));
    if (rules.provider != p) throw ConfigError("rules file " + path.string() + " is for another provider");
    return rules;
  } catch (const json::exception& e) {
    throw ConfigError("malformed rules file " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------- archives

namespace {

std::string apply_regex(const std::string& value, const FieldRule& rule) {
  if (rule.regex.empty()) return value;
  std::regex re(rule.regex);
  std::smatch m;
  if (!std::regex_search(value, m, re)) return {};
  return m.size() > 1 ? m[1].str() : m[0].str();
}

std::string html_field(const html::Node& entry, const FieldRule& rule) {
  if (rule.empty()) return {};
  auto hits = html::select(entry, rule.selector);
  if (hits.empty()) return {};
  std::string value = rule.attribute.empty() ? html::text_content(*hits.front())
                                             : hits.front()->attr(rule.attribute);
  return text::trim(apply_regex(value, rule));
}

// Body text from markup or plain text: one line per block, collapsed spaces.
std::string normalize_body(const std::string& s) {
  if (s.find('<') != std::string::npos && s.find('>') != std::string::npos)
    return html::text_content(html::parse(s));
  std::vector<std::string> lines;
  for (const auto& l : text::split(html::decode_entities(s), '\n')) {
    auto c = text::collapse_whitespace(l);
    if (!c.empty()) lines.push_back(std::move(c));
  }
  return text::join(lines, "\n");
}

const json* json_lookup(const json& obj, const std::string& path) {
  const json* cur = &obj;
  for (const auto& part : text::split(path, '.')) {
    if (!cur->is_object() || !cur->contains(part)) return nullptr;
    cur = &(*cur)[part];
  }
  return cur;
}

std::string json_text(const json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::vector<std::string> parts;
    for (const auto& e : v) {
      if (e.is_object() && e.contains("text")) {
        parts.push_back(json_text(e["text"]));
      } else {
        parts.push_back(json_text(e));
      }
    }
    return text::join(parts, "\n");
  }
  if (v.is_object() && v.contains("text")) return json_text(v["text"]);
  return v.dump();
}

std::optional<Date> date_from_json(const json* v, const FieldRule& rule) {
  if (!v || v->is_null()) return std::nullopt;
  if (v->is_number_integer()) return date_from_epoch(v->get<long long>());
  auto s = text::trim(apply_regex(json_text(*v), rule));
  if (!s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) && s.size() >= 9)
    return date_from_epoch(std::stoll(s));
  return parse_date(s);
}

IncidentReport make_entry(Provider provider, std::string title, std::string status,
                          std::string body, std::optional<Date> date, const std::string& source) {
  IncidentReport r;
  r.provider = provider;
  r.title = text::collapse_whitespace(title);
  r.status = text::collapse_whitespace(status);
  r.body_text = normalize_body(body);
  r.published_date = date;
  r.source_path = source;
  return finalize_report(std::move(r));
}

void parse_structured(const json& doc, const std::string& source, Provider provider,
                      const ExtractionRules& rules, ArchiveParse& out) {
  const json* entries = &doc;
  if (doc.is_object()) {
    if (!rules.json_entries.empty()) {
      entries = json_lookup(doc, rules.json_entries);
      if (!entries) entries = &doc;
    }
  }
  auto handle = [&](const json& e) {
    if (!e.is_object()) return;
    auto field = [&](const FieldRule& rule) -> std::string {
      if (rule.empty()) return {};
      const json* v = json_lookup(e, rule.selector);
      return v ? text::trim(apply_regex(json_text(*v), rule)) : std::string();
    };
    const json* date_v = rules.json_date.empty() ? nullptr : json_lookup(e, rules.json_date.selector);
    out.reports.push_back(make_entry(provider, field(rules.json_title), field(rules.json_status),
                                     field(rules.json_body), date_from_json(date_v, rules.json_date),
                                     source));
  };
  if (entries->is_array()) {
    for (const auto& e : *entries) handle(e);
  } else if (entries->is_object()) {
    handle(*entries);
  }
}

}  // namespace

ArchiveParse parse_archive_content(std::string_view content, const std::string& source,
                                   Provider provider, const ExtractionRules& rules) {
  ArchiveParse out;
  auto trimmed = text::trim(content.substr(0, std::min<std::size_t>(content.size(), 64)));
  bool structured = !trimmed.empty() && (trimmed[0] == '{' || trimmed[0] == '[');
  if (structured) {
    auto whole = json::parse(content, nullptr, false);
    if (!whole.is_discarded()) {
      parse_structured(whole, source, provider, rules, out);
    } else {
      // JSON lines.
      std::size_t lineno = 0;
      for (const auto& line : text::split(content, '\n')) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
          out.warnings.push_back(source + ":" + std::to_string(lineno) + ": skipped malformed line");
          continue;
        }
        parse_structured(j, source, provider, rules, out);
      }
    }
  } else {
    auto doc = html::parse(content);
    for (const auto* entry : html::select(doc, rules.html_entry)) {
      std::optional<Date> date;
      auto date_text = html_field(*entry, rules.html_date);
      if (!date_text.empty()) {
        date = parse_date(date_text);
        if (!date)
          out.warnings.push_back(source + ": unparseable date '" + date_text + "' recorded as absent");
      }
      std::string body;
      if (!rules.html_body.empty()) {
        auto hits = html::select(*entry, rules.html_body.selector);
        if (!hits.empty()) body = apply_regex(html::text_content(*hits.front()), rules.html_body);
      }
      out.reports.push_back(make_entry(provider, html_field(*entry, rules.html_title),
                                       html_field(*entry, rules.html_status), body, date, source));
    }
  }
  if (out.reports.empty()) out.warnings.push_back(source + ": archive contains no incident entries");
  return out;
}

ArchiveParse parse_provider_archive(const std::string& path, Provider provider,
                                    const ExtractionRules& rules) {
  std::string content;
  try {
    content = text::read_file(path);
  } catch (const Error&) {
    throw IngestError("cannot read archive: " + path);
  }
  return parse_archive_content(content, path, provider, rules);
}

ArchiveParse parse_provider_archive(const std::string& path, Provider provider) {
  return parse_provider_archive(path, provider, ExtractionRules::defaults(provider));
}

// ---------------------------------------------------------------- clean

namespace {

bool missing(const std::string& s) {
  auto t = text::trim(s);
  return t.empty() || text::iequals(t, "none") || text::iequals(t, "null") || text::iequals(t, "nan");
}

}  // namespace

std::vector<IncidentReport> clean(std::vector<IncidentReport> records) {
  struct Keyed {
    IncidentReport r;
    std::string hash;
  };
  std::vector<Keyed> kept;
  for (auto& r : records) {
    if (missing(r.title) || missing(r.body_text)) continue;
    if (missing(r.status)) r.status.clear();
    r.word_count = compute_word_count(r);
    if (r.report_id.empty()) r.report_id = make_report_id(r);
    auto h = content_hash(r);
    kept.push_back({std::move(r), std::move(h)});
  }
  std::sort(kept.begin(), kept.end(), [](const Keyed& a, const Keyed& b) {
    return std::tie(a.r.report_id, a.hash, a.r.source_path) <
           std::tie(b.r.report_id, b.hash, b.r.source_path);
  });
  std::set<std::string> seen_hash;
  std::vector<IncidentReport> out;
  std::set<std::string> ids;
  for (auto& k : kept) {
    if (!seen_hash.insert(k.hash).second) continue;
    // Same id, different content: disambiguate deterministically.
    std::string id = k.r.report_id;
    for (int n = 2; ids.count(id); ++n) id = k.r.report_id + "-" + std::to_string(n);
    k.r.report_id = id;
    ids.insert(id);
    out.push_back(std::move(k.r));
  }
  std::sort(out.begin(), out.end(),
            [](const IncidentReport& a, const IncidentReport& b) { return a.report_id < b.report_id; });
  return out;
}

// ---------------------------------------------------------------- labels

bool is_time_of_day(std::string_view s) {
  if (s.size() != 8 || s[2] != ':' || s[5] != ':') return false;
  for (std::size_t i : {0, 1, 3, 4, 6, 7})
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  int h = (s[0] - '0') * 10 + (s[1] - '0');
  int m = (s[3] - '0') * 10 + (s[4] - '0');
  int sec = (s[6] - '0') * 10 + (s[7] - '0');
  return h < 24 && m < 60 && sec < 60;
}

void validate_label(const GroundTruthLabel& label, const ExtractionSchema& schema) {
  auto fail = [&](const std::string& field, const std::string& why) {
    throw ValidationError("label " + label.report_id + ", field " + field + ": " + why);
  };
  if (label.report_id.empty()) throw ValidationError("label without report_id");
  for (const auto& [name, _] : label.values)
    if (!schema.has(name)) fail(name, "unknown field for " + std::string(to_string(schema.provider())));
  for (const auto& f : schema.fields()) {
    auto it = label.values.find(f.name);
    if (it == label.values.end()) fail(f.name, "missing");
    const auto& v = it->second;
    if (v.is_absent()) continue;
    switch (f.kind) {
      case FieldKind::Entity:
      case FieldKind::Text:
        if (!v.is_string()) fail(f.name, "expected a string");
        if (v.as_string().empty()) fail(f.name, "empty string; use null for absent values");
        if (f.format == ValueFormat::TimeOfDay && !is_time_of_day(v.as_string()))
          fail(f.name, "time '" + v.as_string() + "' is not HH:MM:SS (24-hour)");
        break;
      case FieldKind::Class:
        if (!v.is_string()) fail(f.name, "expected a single category");
        if (!f.in_vocabulary(v.as_string()))
          fail(f.name, "category '" + v.as_string() + "' is not in the vocabulary");
        break;
      case FieldKind::Multiclass:
        if (!v.is_set()) fail(f.name, "expected a category set");
        for (const auto& c : v.as_set())
          if (!f.in_vocabulary(c)) fail(f.name, "category '" + c + "' is not in the vocabulary");
        break;
    }
  }
}

ordered_json to_json(const GroundTruthLabel& label, const ExtractionSchema& schema) {
  ordered_json j;
  j["report_id"] = label.report_id;
  for (const auto& f : schema.fields()) {
    auto it = label.values.find(f.name);
    j[f.name] = it == label.values.end() ? ordered_json() : ordered_json(it->second.to_json());
  }
  return j;
}

GroundTruthLabel label_from_json(const json& j, const ExtractionSchema& schema) {
  if (!j.is_object() || !j.contains("report_id") || !j["report_id"].is_string())
    throw ValidationError("label record needs a string report_id");
  GroundTruthLabel label;
  label.report_id = j["report_id"].get<std::string>();
  for (const auto& [key, value] : j.items()) {
    if (key == "report_id") continue;
    const auto* f = schema.find(key);
    if (!f) throw ValidationError("label " + label.report_id + ": unknown field " + key);
    LabelValue v;
    try {
      v = LabelValue::from_json(value);
    } catch (const ValidationError& e) {
      throw ValidationError("label " + label.report_id + ", field " + key + ": " + e.what());
    }
    // A lone string for a multiclass field is a one-element set.
    if (f->kind == FieldKind::Multiclass && v.is_string()) v = LabelValue::set({v.as_string()});
    label.values.emplace(key, std::move(v));
  }
  validate_label(label, schema);
  return label;
}

std::vector<GroundTruthLabel> parse_labels(std::string_view content, const ExtractionSchema& schema) {
  std::vector<GroundTruthLabel> out;
  std::set<std::string> ids;
  std::size_t lineno = 0;
  for (const auto& line : text::split(content, '\n')) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw ValidationError("labels line " + std::to_string(lineno) + ": malformed JSON");
    auto label = label_from_json(j, schema);
    if (!ids.insert(label.report_id).second)
      throw ValidationError("duplicate label for report " + label.report_id);
    out.push_back(std::move(label));
  }
  return out;
}

std::vector<GroundTruthLabel> load_labels(const std::string& path, const ExtractionSchema& schema) {
  std::string content;
  try {
    content = text::read_file(path);
  } catch (const Error&) {
    throw IngestError("cannot read labels: " + path);
  }
  return parse_labels(content, schema);
}

std::string serialize_labels(const std::vector<GroundTruthLabel>& labels,
                             const ExtractionSchema& schema) {
  std::string out;
  for (const auto& l : labels) {
    out += to_json(l, schema).dump();
    out += '\n';
  }
  return out;
}

bool labels_agree(const LabelValue& a, const LabelValue& b) { return match_key(a) == match_key(b); }

std::map<std::string, double> agreement(const std::vector<GroundTruthLabel>& a,
                                        const std::vector<GroundTruthLabel>& b,
                                        const ExtractionSchema& schema) {
  std::map<std::string, const GroundTruthLabel*> ia, ib;
  for (const auto& l : a) ia[l.report_id] = &l;
  for (const auto& l : b) ib[l.report_id] = &l;
  std::vector<std::string> diff;
  for (const auto& [id, _] : ia)
    if (!ib.count(id)) diff.push_back(id);
  for (const auto& [id, _] : ib)
    if (!ia.count(id)) diff.push_back(id);
  if (!diff.empty()) {
    std::sort(diff.begin(), diff.end());
    throw ValidationError("label sets cover different reports: " + text::join(diff, ", "));
  }
  std::map<std::string, double> out;
  if (ia.empty()) return out;
  for (const auto& f : schema.fields()) {
    std::size_t agree = 0;
    for (const auto& [id, la] : ia) {
      const auto* lb = ib[id];
      auto va = la->values.count(f.name) ? la->values.at(f.name) : LabelValue::absent();
      auto vb = lb->values.count(f.name) ? lb->values.at(f.name) : LabelValue::absent();
      if (labels_agree(va, vb)) ++agree;
    }
    out[f.name] = static_cast<double>(agree) / static_cast<double>(ia.size());
  }
  return out;
}

}  // namespace irx
