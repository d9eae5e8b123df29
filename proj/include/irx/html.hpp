#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

// Small tolerant HTML reader for archived status pages: enough DOM to run
// descendant selectors like "div.incident h3.title" and pull text out.
namespace irx::html {

struct Node {
  std::string tag;  // lowercase; empty for text nodes
  std::map<std::string, std::string> attrs;
  std::string text;  // text nodes only, entities decoded
  std::vector<Node> children;

  bool is_text() const { return tag.empty(); }
  std::string attr(const std::string& name) const;
  bool has_class(std::string_view cls) const;
};

// Returns a synthetic root whose children are the top-level nodes.
Node parse(std::string_view html);

std::string decode_entities(std::string_view s);

// Selector grammar: whitespace-separated compound selectors, each
// `tag`, `.class`, `#id`, `[attr]`, or combinations like `div.a.b#x`.
// Matches are returned in document order.
std::vector<const Node*> select(const Node& root, std::string_view selector);

// Visible text: block-level elements and <br> become line breaks, runs of
// spaces collapse, blank lines are dropped.
std::string text_content(const Node& node);

}  // namespace irx::html
