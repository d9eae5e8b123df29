#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "irx/types.hpp"

namespace irx {

struct Category {
  std::string name;
  std::string definition;  // may be empty
};

using Vocabulary = std::vector<Category>;

struct FieldSpec {
  std::string name;
  FieldKind kind = FieldKind::Entity;
  Metric metric = Metric::EM;
  std::optional<Vocabulary> vocabulary;
  Origin origin = Origin::Extracted;
  ValueFormat format = ValueFormat::Free;

  bool in_vocabulary(std::string_view category) const;
};

// Metric fixed by field kind: entity/class -> EM, multiclass -> TK, text -> BS.
Metric metric_for(FieldKind kind);

// The three editable category lists.
struct Vocabularies {
  Vocabulary service_category;
  Vocabulary user_symptom_category;
  Vocabulary root_cause_category;
};

Vocabularies default_vocabularies();

// One category per line, "NAME" or "NAME: definition". Blank lines and lines
// starting with '#' are ignored.
Vocabulary parse_vocabulary(std::string_view content);
std::string serialize_vocabulary(const Vocabulary& vocabulary);
// Reads service_category.txt, user_symptom_category.txt and
// root_cause_category.txt from dir; missing files fall back to defaults.
Vocabularies load_vocabularies(const std::string& dir);

class ExtractionSchema {
 public:
  ExtractionSchema(Provider provider, std::vector<FieldSpec> fields);

  // AWS: the eight keys of the answer format; AZURE adds root_cause and
  // root_cause_category; GCP drops location.
  static ExtractionSchema for_provider(Provider provider,
                                       const Vocabularies& vocab = default_vocabularies());

  Provider provider() const { return provider_; }
  const std::vector<FieldSpec>& fields() const { return fields_; }
  const FieldSpec* find(std::string_view name) const;
  bool has(std::string_view name) const { return find(name) != nullptr; }
  std::vector<std::string> keys() const;

 private:
  Provider provider_;
  std::vector<FieldSpec> fields_;
};

}  // namespace irx
