#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace irx {

enum class Provider { Aws, Azure, Gcp };

std::string_view to_string(Provider p);
// Accepts "AWS", "aws", "Azure", ... Throws ConfigError otherwise.
Provider parse_provider(std::string_view s);
// Lowercase code used as report_id prefix and directory name: aws, azure, gcp.
std::string_view provider_code(Provider p);

enum class FieldKind { Entity, Class, Multiclass, Text };
enum class Metric { EM, TK, BS };
enum class Origin { Extracted, Inferred };
enum class ValueFormat { Free, TimeOfDay };

std::string_view to_string(FieldKind k);
std::string_view to_string(Metric m);
Metric parse_metric(std::string_view s);

// Explicit "not reported" marker. Serialized as JSON null, never as "".
struct Absent {
  friend bool operator==(Absent, Absent) = default;
};

// Sorted, duplicate-free category names.
using CategorySet = std::vector<std::string>;

// One field value: absent, a single string (entity, class, time, text), or a
// category set (multiclass).
class LabelValue {
 public:
  LabelValue() = default;
  static LabelValue absent() { return LabelValue(); }
  static LabelValue string(std::string s) { return LabelValue(Repr(std::move(s))); }
  static LabelValue set(CategorySet s);

  bool is_absent() const { return std::holds_alternative<Absent>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_set() const { return std::holds_alternative<CategorySet>(v_); }

  const std::string& as_string() const { return std::get<std::string>(v_); }
  const CategorySet& as_set() const { return std::get<CategorySet>(v_); }

  nlohmann::json to_json() const;
  // null -> absent, string -> string, array of strings -> set.
  static LabelValue from_json(const nlohmann::json& j);

  friend bool operator==(const LabelValue&, const LabelValue&) = default;

 private:
  using Repr = std::variant<Absent, std::string, CategorySet>;
  explicit LabelValue(Repr r) : v_(std::move(r)) {}
  Repr v_;
};

using FieldValues = std::map<std::string, LabelValue>;

}  // namespace irx

namespace irx {

// Comparison key under exact-match normalization (trim, casefold, collapse
// whitespace). Sets compare as sorted sets of normalized elements. Absent has
// no key.
std::optional<std::string> match_key(const LabelValue& v);

}  // namespace irx
