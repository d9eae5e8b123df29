#include <algorithm>
#include <cctype>
#include <regex>

#include "irx/error.hpp"
#include "irx/extraction.hpp"
#include "irx/text.hpp"

namespace irx {

using json = nlohmann::json;

std::string_view to_string(ParseStatus s) {
  switch (s) {
    case ParseStatus::Ok: return "ok";
    case ParseStatus::Repaired: return "repaired";
    case ParseStatus::Failed: return "failed";
  }
  return "?";
}

ParseStatus parse_parse_status(std::string_view s) {
  if (s == "ok") return ParseStatus::Ok;
  if (s == "repaired") return ParseStatus::Repaired;
  if (s == "failed") return ParseStatus::Failed;
  throw ValidationError("unknown parse status: " + std::string(s));
}

namespace {

// Rewrites near-JSON starting at an opening brace into strict JSON. Tracks a
// small state machine per nesting level so that missing or trailing commas,
// missing values and unterminated input can be patched up.
class LenientReader {
 public:
  explicit LenientReader(std::string_view in) : in_(in) {}

  std::optional<std::string> run() {
    if (in_.empty() || in_[0] != '{') return std::nullopt;
    while (pos_ < in_.size()) {
      char c = in_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '{' || c == '[') {
        open(c);
      } else if (c == '}' || c == ']') {
        ++pos_;
        close_top();
        if (stack_.empty()) return out_;
      } else if (c == ':') {
        ++pos_;
        if (!stack_.empty() && stack_.back().object && stack_.back().state == State::Colon) {
          out_ += ':';
          stack_.back().state = State::Value;
        }
      } else if (c == ',') {
        ++pos_;
        if (!stack_.empty() && stack_.back().state == State::Comma)
          stack_.back().state = stack_.back().object ? State::Key : State::Value;
      } else if (c == '"' || c == '\'') {
        scalar(read_string(c));
      } else if (c == '/' && pos_ + 1 < in_.size() && (in_[pos_ + 1] == '/' || in_[pos_ + 1] == '*')) {
        skip_comment();
      } else {
        bareword();
      }
      if (stack_.empty()) return out_;
    }
    // Truncated input: close whatever is still open.
    while (!stack_.empty()) close_top();
    return out_;
  }

 private:
  enum class State { Key, Colon, Value, Comma };
  struct Level {
    bool object;
    State state;
    bool has_items = false;
  };

  // Prepares the current level for a new item; returns false when the item
  // cannot appear here (e.g. a container in key position).
  bool begin_item(bool is_container) {
    if (stack_.empty()) return true;
    auto& top = stack_.back();
    if (top.object) {
      switch (top.state) {
        case State::Comma:
          top.state = State::Key;
          [[fallthrough]];
        case State::Key:
          if (is_container) return false;
          if (top.has_items) out_ += ',';
          return true;
        case State::Colon:
          out_ += ':';
          top.state = State::Value;
          return true;
        case State::Value:
          return true;
      }
    } else {
      if (top.has_items) out_ += ',';
      return true;
    }
    return true;
  }

  void end_item() {
    if (stack_.empty()) return;
    auto& top = stack_.back();
    if (top.object && top.state == State::Key) {
      top.state = State::Colon;
    } else {
      top.state = State::Comma;
      top.has_items = true;
    }
  }

  void open(char c) {
    ++pos_;
    if (!begin_item(true)) return;
    out_ += c;
    stack_.push_back({c == '{', c == '{' ? State::Key : State::Value});
  }

  void close_top() {
    auto top = stack_.back();
    if (top.object && top.state == State::Colon) out_ += ":null";
    if (top.object && top.state == State::Value) out_ += "null";
    out_ += top.object ? '}' : ']';
    stack_.pop_back();
    if (!stack_.empty()) {
      stack_.back().state = State::Comma;
      stack_.back().has_items = true;
    }
  }

  void scalar(const std::string& encoded) {
    if (!begin_item(false)) return;
    out_ += encoded;
    end_item();
  }

  std::string read_string(char quote) {
    ++pos_;
    std::string s = "\"";
    while (pos_ < in_.size()) {
      char c = in_[pos_++];
      if (c == quote) {
        s += '"';
        return s;
      }
      if (c == '\\' && pos_ < in_.size()) {
        char n = in_[pos_++];
        if (n == '\'') {
          s += '\'';
        } else if (std::string_view("\"\\/bfnrtu").find(n) != std::string_view::npos) {
          s += '\\';
          s += n;
        } else {
          s += "\\\\";
          s += n;
        }
        continue;
      }
      if (c == '"') {
        s += "\\\"";
      } else if (c == '\n') {
        s += "\\n";
      } else if (c == '\r') {
        s += "\\r";
      } else if (c == '\t') {
        s += "\\t";
      } else if (static_cast<unsigned char>(c) < 0x20) {
        s += ' ';
      } else {
        s += c;
      }
    }
    s += '"';  // unterminated at end of input
    return s;
  }

  void skip_comment() {
    if (in_[pos_ + 1] == '/') {
      auto nl = in_.find('\n', pos_);
      pos_ = nl == std::string_view::npos ? in_.size() : nl + 1;
    } else {
      auto end = in_.find("*/", pos_ + 2);
      pos_ = end == std::string_view::npos ? in_.size() : end + 2;
    }
  }

  void bareword() {
    bool key_position = !stack_.empty() && stack_.back().object &&
                        (stack_.back().state == State::Key || stack_.back().state == State::Comma);
    std::string_view stops = key_position ? ":,{}[]\"'\n" : ",}]\n";
    std::size_t start = pos_;
    while (pos_ < in_.size() && stops.find(in_[pos_]) == std::string_view::npos) ++pos_;
    auto word = text::trim(in_.substr(start, pos_ - start));
    if (word.empty()) {
      if (pos_ == start) ++pos_;  // unexpected character, skip it
      return;
    }
    scalar(key_position ? json(std::string(word)).dump() : encode_bare_value(word));
  }

  static std::string encode_bare_value(std::string_view w) {
    static const std::regex number(R"(-?(0|[1-9]\d*)(\.\d+)?([eE][+-]?\d+)?)");
    std::string s(w);
    if (std::regex_match(s, number)) return s;
    auto l = text::lower(s);
    if (l == "true" || l == "false" || l == "null") return l;
    if (s == "None" || l == "nil" || l == "undefined") return "null";
    return json(s).dump();
  }

  std::string_view in_;
  std::size_t pos_ = 0;
  std::string out_;
  std::vector<Level> stack_;
};

// Candidate regions: the bodies of fenced code blocks first, then the whole text.
std::vector<std::string_view> candidate_regions(std::string_view t) {
  std::vector<std::string_view> out;
  std::size_t p = 0;
  while (true) {
    auto open = t.find("```", p);
    if (open == std::string_view::npos) break;
    auto body = t.find('\n', open);
    if (body == std::string_view::npos) break;
    auto close = t.find("```", body);
    out.push_back(t.substr(body + 1, close == std::string_view::npos ? std::string_view::npos : close - body - 1));
    if (close == std::string_view::npos) break;
    p = close + 3;
  }
  out.push_back(t);
  return out;
}

// End of the balanced object starting at `start`, or npos when the input ends first.
std::size_t balanced_end(std::string_view t, std::size_t start) {
  int depth = 0;
  char quote = 0;
  for (std::size_t i = start; i < t.size(); ++i) {
    char c = t[i];
    if (quote) {
      if (c == '\\') ++i;
      else if (c == quote) quote = 0;
      continue;
    }
    if (c == '"' || (c == '\'' && i > start && std::string_view(":,[{ \t\n").find(t[i - 1]) != std::string_view::npos))
      quote = c;
    else if (c == '{' || c == '[') ++depth;
    else if (c == '}' || c == ']') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<json> try_object(std::string_view s) {
  json j = json::parse(s, nullptr, false);
  if (!j.is_discarded() && j.is_object()) return j;
  return std::nullopt;
}

std::string normalize_key(std::string_view k) {
  std::string out;
  for (char c : text::trim(k)) {
    if (c == ' ' || c == '-' || c == '.') c = '_';
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool is_absent_token(std::string_view raw) {
  static const std::vector<std::string> kAbsent = {"",        "n/a",           "na",           "null",
                                                   "none",    "unknown",       "not specified", "not mentioned",
                                                   "not available", "not provided", "-"};
  auto l = text::lower(text::collapse_whitespace(text::trim(raw)));
  while (!l.empty() && (l.back() == '.')) l.pop_back();
  return std::find(kAbsent.begin(), kAbsent.end(), l) != kAbsent.end();
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::vector<std::string> parts;
    for (const auto& e : v)
      if (!e.is_null()) parts.push_back(scalar_text(e));
    return text::join(parts, ", ");
  }
  return v.dump();
}

std::optional<std::string> match_vocabulary(std::string_view raw, const Vocabulary& vocab) {
  auto want = normalize_key(raw);
  for (const auto& c : vocab)
    if (normalize_key(c.name) == want) return c.name;
  return std::nullopt;
}

std::string strip_wrapping(std::string_view raw) {
  std::string s = text::trim(raw);
  while (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'') ||
                           (s.front() == '[' && s.back() == ']')))
    s = text::trim(std::string_view(s).substr(1, s.size() - 2));
  return s;
}

int num(const std::ssub_match& m) { return m.matched ? std::stoi(m.str()) : 0; }

}  // namespace

std::optional<json> recover_json_object(std::string_view input, bool& repaired) {
  repaired = false;
  auto t = text::trim(input);
  if (auto j = try_object(t)) return j;
  repaired = true;
  for (auto region : candidate_regions(t)) {
    int tried = 0;
    for (auto start = region.find('{'); start != std::string_view::npos && tried < 16;
         start = region.find('{', start + 1), ++tried) {
      auto end = balanced_end(region, start);
      auto slice = region.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
      if (auto j = try_object(slice)) return j;
      if (auto fixed = LenientReader(slice).run())
        if (auto j = try_object(*fixed)) return j;
    }
  }
  return std::nullopt;
}

std::optional<std::string> normalize_time(std::string_view raw) {
  static const std::regex re(
      R"(^\s*(\d{1,2}):(\d{2})(?::(\d{2}))?\s*(?:([AaPp])\.?\s*[Mm]\.?)?(?:\s+\(?[A-Za-z]{2,5}\)?)?\s*$)");
  static const std::regex iso(R"(^\s*\d{4}-\d{2}-\d{2}[T ](\d{2}):(\d{2})(?::(\d{2}))?(?:\.\d+)?\s*(?:Z|[+-]\d{2}:?\d{2})?\s*$)");
  std::string s(raw);
  std::smatch m;
  int h, mi, sec;
  if (std::regex_match(s, m, re)) {
    h = num(m[1]);
    mi = num(m[2]);
    sec = num(m[3]);
    if (m[4].matched) {
      if (h < 1 || h > 12) return std::nullopt;
      bool pm = std::tolower(static_cast<unsigned char>(m[4].str()[0])) == 'p';
      h = h % 12 + (pm ? 12 : 0);
    }
  } else if (std::regex_match(s, m, iso)) {
    h = num(m[1]);
    mi = num(m[2]);
    sec = num(m[3]);
  } else {
    return std::nullopt;
  }
  if (h < 0 || h > 23 || mi < 0 || mi > 59 || sec < 0 || sec > 59) return std::nullopt;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%02d:%02d:%02d", h, mi, sec);
  return std::string(buf);
}

static CategoryMatch normalize_category_text(std::string_view raw, const Vocabulary& vocab, bool multiclass) {
  CategoryMatch out;
  if (!multiclass) {
    auto s = strip_wrapping(raw);
    if (auto hit = match_vocabulary(s, vocab)) {
      out.value = LabelValue::string(*hit);
    } else if (!is_absent_token(s)) {
      out.value = LabelValue::string(s);
      out.out_of_vocabulary.push_back(s);
    }
    return out;
  }
  CategorySet set;
  std::string body = strip_wrapping(raw);
  std::replace(body.begin(), body.end(), ';', ',');
  for (const auto& part : text::split(body, ',')) {
    auto s = strip_wrapping(part);
    if (auto hit = match_vocabulary(s, vocab)) {
      set.push_back(*hit);
    } else if (!is_absent_token(s)) {
      set.push_back(s);
      out.out_of_vocabulary.push_back(s);
    }
  }
  if (!set.empty()) out.value = LabelValue::set(std::move(set));
  return out;
}

CategoryMatch normalize_category(const json& raw, const Vocabulary& vocab, bool multiclass) {
  if (raw.is_null()) return {};
  if (raw.is_array()) {
    if (!multiclass) {
      if (raw.size() == 1) return normalize_category(raw[0], vocab, false);
      return normalize_category_text(scalar_text(raw), vocab, false);
    }
    CategoryMatch out;
    CategorySet set;
    for (const auto& e : raw) {
      auto part = normalize_category(e, vocab, true);
      if (part.value.is_set())
        for (const auto& c : part.value.as_set()) set.push_back(c);
      for (auto& o : part.out_of_vocabulary) out.out_of_vocabulary.push_back(std::move(o));
    }
    if (!set.empty()) out.value = LabelValue::set(std::move(set));
    return out;
  }
  return normalize_category_text(scalar_text(raw), vocab, multiclass);
}

ParseResult parse_response(std::string_view text, const ExtractionSchema& schema) {
  ParseResult r;
  try {
    bool repaired = false;
    auto obj = recover_json_object(text, repaired);
    if (!obj) {
      r.warnings.push_back("no JSON object found in response");
      return r;
    }
    auto schema_hits = [&](const json& o) {
      int n = 0;
      for (const auto& [k, v] : o.items()) n += schema.has(normalize_key(k)) ? 1 : 0;
      return n;
    };
    if (schema_hits(*obj) == 0) {
      // A wrapper such as {"result": {...}} around the answer.
      for (const auto& [k, v] : obj->items()) {
        if (v.is_object() && schema_hits(v) > 0) {
          r.warnings.push_back("unwrapped answer object from key '" + k + "'");
          obj = v;
          repaired = true;
          break;
        }
      }
    }
    std::map<std::string, json> matched;
    for (const auto& [k, v] : obj->items()) {
      auto key = normalize_key(k);
      if (!schema.has(key)) {
        r.warnings.push_back("dropped unknown key '" + k + "'");
        continue;
      }
      if (!matched.emplace(key, v).second) r.warnings.push_back("duplicate key '" + k + "' ignored");
    }
    if (matched.empty()) {
      r.warnings.push_back("response object has none of the schema keys");
      return r;
    }
    for (const auto& f : schema.fields()) {
      auto it = matched.find(f.name);
      LabelValue value;
      if (it != matched.end() && !it->second.is_null()) {
        const json& raw = it->second;
        if (f.vocabulary) {
          auto m = normalize_category(raw, *f.vocabulary, f.kind == FieldKind::Multiclass);
          for (const auto& o : m.out_of_vocabulary)
            r.warnings.push_back(f.name + ": '" + o + "' is not in the vocabulary");
          value = std::move(m.value);
        } else {
          std::string s(text::trim(scalar_text(raw)));
          if (f.format == ValueFormat::TimeOfDay && !is_absent_token(s)) {
            if (auto t = normalize_time(s)) {
              value = LabelValue::string(*t);
            } else {
              r.warnings.push_back(f.name + ": unparseable time '" + s + "'");
            }
          } else if (!is_absent_token(s)) {
            value = LabelValue::string(std::move(s));
          }
        }
      }
      r.values.emplace(f.name, std::move(value));
    }
    r.status = repaired ? ParseStatus::Repaired : ParseStatus::Ok;
  } catch (const std::exception& e) {
    r.values.clear();
    r.status = ParseStatus::Failed;
    r.warnings.push_back(std::string("parser error: ") + e.what());
  }
  return r;
}

}  // namespace irx
