#include "irx/html.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "irx/error.hpp"
#include "irx/text.hpp"

namespace irx::html {

namespace {

const std::set<std::string, std::less<>> kVoid = {"area", "base", "br",   "col",  "embed",
                                                  "hr",   "img",  "input", "link", "meta",
                                                  "source", "track", "wbr"};
const std::set<std::string, std::less<>> kRawText = {"script", "style"};
const std::set<std::string, std::less<>> kBlock = {
    "address", "article", "aside", "blockquote", "br", "dd",  "div", "dl", "dt",
    "footer",  "h1",      "h2",    "h3",         "h4", "h5",  "h6",  "header",
    "hr",      "li",      "main",  "ol",         "p",  "pre", "section", "table",
    "tr",      "ul",      "td",    "th"};

void append_utf8(std::string& out, unsigned long cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x110000) {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

class Parser {
 public:
  explicit Parser(std::string_view src) : s_(src) {}

  Node run() {
    Node root;
    root.tag = "#root";
    stack_.push_back(&root);
    while (pos_ < s_.size()) {
      if (s_[pos_] == '<') {
        if (s_.compare(pos_, 4, "<!--") == 0) {
          auto end = s_.find("-->", pos_ + 4);
          pos_ = end == std::string_view::npos ? s_.size() : end + 3;
        } else if (pos_ + 1 < s_.size() && (s_[pos_ + 1] == '!' || s_[pos_ + 1] == '?')) {
          auto end = s_.find('>', pos_);
          pos_ = end == std::string_view::npos ? s_.size() : end + 1;
        } else if (pos_ + 1 < s_.size() && s_[pos_ + 1] == '/') {
          close_tag();
        } else if (pos_ + 1 < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_ + 1]))) {
          open_tag();
        } else {
          add_text(s_.substr(pos_, 1));
          ++pos_;
        }
      } else {
        auto end = s_.find('<', pos_);
        if (end == std::string_view::npos) end = s_.size();
        add_text(s_.substr(pos_, end - pos_));
        pos_ = end;
      }
    }
    return root;
  }

 private:
  void add_text(std::string_view raw) {
    Node& parent = *stack_.back();
    auto decoded = decode_entities(raw);
    if (!parent.children.empty() && parent.children.back().is_text()) {
      parent.children.back().text += decoded;
    } else {
      Node t;
      t.text = std::move(decoded);
      parent.children.push_back(std::move(t));
    }
  }

  std::string read_name() {
    std::size_t b = pos_;
    while (pos_ < s_.size()) {
      char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '>' || c == '/' || c == '=') break;
      ++pos_;
    }
    return text::lower(s_.substr(b, pos_ - b));
  }

  void skip_space() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void open_tag() {
    ++pos_;
    Node n;
    n.tag = read_name();
    bool self_closing = false;
    for (;;) {
      skip_space();
      if (pos_ >= s_.size()) break;
      if (s_[pos_] == '>') {
        ++pos_;
        break;
      }
      if (s_[pos_] == '/') {
        self_closing = true;
        ++pos_;
        continue;
      }
      auto name = read_name();
      if (name.empty()) {
        ++pos_;
        continue;
      }
      skip_space();
      std::string value;
      if (pos_ < s_.size() && s_[pos_] == '=') {
        ++pos_;
        skip_space();
        if (pos_ < s_.size() && (s_[pos_] == '"' || s_[pos_] == '\'')) {
          char q = s_[pos_++];
          auto end = s_.find(q, pos_);
          if (end == std::string_view::npos) end = s_.size();
          value = decode_entities(s_.substr(pos_, end - pos_));
          pos_ = std::min(end + 1, s_.size());
        } else {
          std::size_t b = pos_;
          while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
                 s_[pos_] != '>')
            ++pos_;
          value = decode_entities(s_.substr(b, pos_ - b));
        }
      }
      n.attrs.emplace(std::move(name), std::move(value));
    }
    Node& parent = *stack_.back();
    parent.children.push_back(std::move(n));
    Node* added = &parent.children.back();
    if (kRawText.count(added->tag)) {
      // Content of script/style is dropped.
      auto close = std::string("</") + added->tag;
      std::size_t end = pos_;
      for (;;) {
        end = s_.find("</", end);
        if (end == std::string_view::npos) {
          pos_ = s_.size();
          return;
        }
        if (text::iequals(s_.substr(end, close.size()), close)) break;
        end += 2;
      }
      auto gt = s_.find('>', end);
      pos_ = gt == std::string_view::npos ? s_.size() : gt + 1;
      return;
    }
    if (!self_closing && !kVoid.count(added->tag)) stack_.push_back(added);
  }

  void close_tag() {
    pos_ += 2;
    auto name = read_name();
    auto gt = s_.find('>', pos_);
    pos_ = gt == std::string_view::npos ? s_.size() : gt + 1;
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == name) {
        stack_.resize(i);
        return;
      }
    }
    // Stray closing tag: ignored.
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  // Pointers stay valid: a node's children vector only grows while it is the
  // innermost open element, and nothing above it in the stack is touched.
  std::vector<Node*> stack_;
};

struct Compound {
  std::string tag;
  std::vector<std::string> classes;
  std::string id;
  std::vector<std::string> attrs;

  bool matches(const Node& n) const {
    if (n.is_text()) return false;
    if (!tag.empty() && tag != "*" && n.tag != tag) return false;
    if (!id.empty() && n.attr("id") != id) return false;
    for (const auto& c : classes)
      if (!n.has_class(c)) return false;
    for (const auto& a : attrs)
      if (!n.attrs.count(a)) return false;
    return true;
  }
};

Compound parse_compound(std::string_view s) {
  Compound c;
  std::size_t i = 0;
  auto read_ident = [&]() {
    std::size_t b = i;
    while (i < s.size() && s[i] != '.' && s[i] != '#' && s[i] != '[') ++i;
    return std::string(s.substr(b, i - b));
  };
  c.tag = text::lower(read_ident());
  while (i < s.size()) {
    char k = s[i++];
    if (k == '.') {
      c.classes.push_back(read_ident());
    } else if (k == '#') {
      c.id = read_ident();
    } else if (k == '[') {
      auto end = s.find(']', i);
      if (end == std::string_view::npos) throw ConfigError("bad selector: " + std::string(s));
      c.attrs.push_back(text::lower(s.substr(i, end - i)));
      i = end + 1;
    }
  }
  return c;
}

void collect(const Node& n, const std::vector<Compound>& chain, std::size_t depth,
             std::vector<const Node*>& out) {
  for (const auto& child : n.children) {
    if (child.is_text()) continue;
    std::size_t next = depth;
    if (chain[depth].matches(child)) {
      if (depth + 1 == chain.size()) {
        out.push_back(&child);
        // Nested matches of the last compound are still reported.
        collect(child, chain, depth, out);
        continue;
      }
      next = depth + 1;
    }
    collect(child, chain, next, out);
  }
}

void render(const Node& n, std::string& out) {
  if (n.is_text()) {
    out += n.text;
    return;
  }
  bool block = kBlock.count(n.tag) > 0;
  if (block) out.push_back('\n');
  for (const auto& c : n.children) render(c, out);
  if (block) out.push_back('\n');
}

}  // namespace

std::string Node::attr(const std::string& name) const {
  auto it = attrs.find(name);
  return it == attrs.end() ? std::string() : it->second;
}

bool Node::has_class(std::string_view cls) const {
  auto it = attrs.find("class");
  if (it == attrs.end()) return false;
  for (const auto& c : text::split_whitespace(it->second))
    if (c == cls) return true;
  return false;
}

Node parse(std::string_view html) { return Parser(html).run(); }

std::string decode_entities(std::string_view s) {
  static const std::map<std::string, unsigned long, std::less<>> kNamed = {
      {"amp", '&'},     {"lt", '<'},      {"gt", '>'},      {"quot", '"'},
      {"apos", '\''},   {"nbsp", 0xA0},   {"ndash", 0x2013}, {"mdash", 0x2014},
      {"rsquo", 0x2019}, {"lsquo", 0x2018}, {"rdquo", 0x201D}, {"ldquo", 0x201C},
      {"hellip", 0x2026}, {"copy", 0xA9}};
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '&') {
      out.push_back(s[i]);
      continue;
    }
    auto semi = s.find(';', i);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back('&');
      continue;
    }
    auto ent = s.substr(i + 1, semi - i - 1);
    unsigned long cp = 0;
    bool ok = false;
    if (!ent.empty() && ent[0] == '#') {
      try {
        std::size_t used = 0;
        std::string digits(ent.substr(1));
        if (!digits.empty() && (digits[0] == 'x' || digits[0] == 'X'))
          cp = std::stoul(digits.substr(1), &used, 16), ok = used + 1 == digits.size();
        else
          cp = std::stoul(digits, &used, 10), ok = used == digits.size();
      } catch (const std::exception&) {
        ok = false;
      }
    } else if (auto it = kNamed.find(ent); it != kNamed.end()) {
      cp = it->second;
      ok = true;
    }
    if (!ok) {
      out.push_back('&');
      continue;
    }
    // Non-breaking space reads as a plain space in extracted text.
    append_utf8(out, cp == 0xA0 ? ' ' : cp);
    i = semi;
  }
  return out;
}

std::vector<const Node*> select(const Node& root, std::string_view selector) {
  std::vector<Compound> chain;
  for (const auto& part : text::split_whitespace(selector)) chain.push_back(parse_compound(part));
  if (chain.empty()) throw ConfigError("empty selector");
  std::vector<const Node*> out;
  collect(root, chain, 0, out);
  return out;
}

std::string text_content(const Node& node) {
  std::string raw;
  render(node, raw);
  std::vector<std::string> lines;
  for (const auto& l : text::split(raw, '\n')) {
    auto c = text::collapse_whitespace(l);
    if (!c.empty()) lines.push_back(std::move(c));
  }
  return text::join(lines, "\n");
}

}  // namespace irx::html
