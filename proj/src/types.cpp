#include "irx/types.hpp"

#include <algorithm>

#include "irx/error.hpp"
#include "irx/text.hpp"

namespace irx {

std::string_view to_string(Provider p) {
  switch (p) {
    case Provider::Aws: return "AWS";
    case Provider::Azure: return "AZURE";
    case Provider::Gcp: return "GCP";
  }
  return "?";
}

std::string_view provider_code(Provider p) {
  switch (p) {
    case Provider::Aws: return "aws";
    case Provider::Azure: return "azure";
    case Provider::Gcp: return "gcp";
  }
  return "?";
}

Provider parse_provider(std::string_view s) {
  auto u = text::upper(text::trim(s));
  if (u == "AWS") return Provider::Aws;
  if (u == "AZURE") return Provider::Azure;
  if (u == "GCP") return Provider::Gcp;
  throw ConfigError("unknown provider: " + std::string(s));
}

std::string_view to_string(FieldKind k) {
  switch (k) {
    case FieldKind::Entity: return "entity";
    case FieldKind::Class: return "class";
    case FieldKind::Multiclass: return "multiclass";
    case FieldKind::Text: return "text";
  }
  return "?";
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::EM: return "EM";
    case Metric::TK: return "TK";
    case Metric::BS: return "BS";
  }
  return "?";
}

Metric parse_metric(std::string_view s) {
  if (s == "EM") return Metric::EM;
  if (s == "TK") return Metric::TK;
  if (s == "BS") return Metric::BS;
  throw ValidationError("unknown metric: " + std::string(s));
}

LabelValue LabelValue::set(CategorySet s) {
  std::sort(s.begin(), s.end());
  s.erase(std::unique(s.begin(), s.end()), s.end());
  return LabelValue(Repr(std::move(s)));
}

nlohmann::json LabelValue::to_json() const {
  if (is_absent()) return nullptr;
  if (is_string()) return as_string();
  return as_set();
}

LabelValue LabelValue::from_json(const nlohmann::json& j) {
  if (j.is_null()) return absent();
  if (j.is_string()) return string(j.get<std::string>());
  if (j.is_array()) {
    CategorySet s;
    for (const auto& e : j) {
      if (!e.is_string()) throw ValidationError("category set elements must be strings");
      s.push_back(e.get<std::string>());
    }
    return set(std::move(s));
  }
  throw ValidationError("label value must be null, a string, or an array of strings");
}

}  // namespace irx

namespace irx {

std::optional<std::string> match_key(const LabelValue& v) {
  if (v.is_absent()) return std::nullopt;
  if (v.is_string()) return text::normalize_for_match(v.as_string());
  std::vector<std::string> elems;
  for (const auto& e : v.as_set()) elems.push_back(text::normalize_for_match(e));
  std::sort(elems.begin(), elems.end());
  elems.erase(std::unique(elems.begin(), elems.end()), elems.end());
  return "{" + text::join(elems, "\x1f") + "}";
}

}  // namespace irx
