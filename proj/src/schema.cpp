#include "irx/schema.hpp"

#include <filesystem>

#include "irx/error.hpp"
#include "irx/text.hpp"

namespace irx {

bool FieldSpec::in_vocabulary(std::string_view category) const {
  if (!vocabulary) return false;
  for (const auto& c : *vocabulary)
    if (c.name == category) return true;
  return false;
}

Metric metric_for(FieldKind kind) {
  switch (kind) {
    case FieldKind::Entity:
    case FieldKind::Class: return Metric::EM;
    case FieldKind::Multiclass: return Metric::TK;
    case FieldKind::Text: return Metric::BS;
  }
  return Metric::EM;
}

Vocabularies default_vocabularies() {
  Vocabularies v;
  v.service_category = {
      {"compute", "virtual machines, containers, serverless and other compute services"},
      {"storage", "object, block and file storage services"},
      {"database", "relational, NoSQL, cache and data warehouse services"},
      {"networking", "load balancing, DNS, CDN, VPN, connectivity and network services"},
      {"management", "monitoring, logging, identity, governance and management tooling"},
      {"security", "security, key management and threat detection services"},
      {"analytics", "data processing, streaming and analytics services"},
      {"machine_learning", "machine learning and AI services"},
      {"application_integration", "messaging, queues, notification and workflow services"},
      {"developer_tools", "build, deployment, source control and developer services"},
      {"other", "services that fit none of the other categories"},
  };
  v.user_symptom_category = {
      {"DELAY", "increased latency, slow responses, or delayed processing or propagation"},
      {"ERROR", "elevated error rates or failed requests and operations"},
      {"UNAVAILABLE", "the service, feature or resource could not be reached or used at all"},
      {"DEGRADED", "reduced performance or partial functionality not covered by DELAY or ERROR"},
      {"DATA_LOSS", "data was lost, corrupted, or not persisted"},
      {"OTHER", "symptoms that fit none of the other categories"},
  };
  v.root_cause_category = {
      {"CONFIGURATION", "an incorrect configuration or deployment change"},
      {"SOFTWARE", "a software defect or bug"},
      {"HARDWARE", "a hardware fault or failure"},
      {"NETWORK", "a network device, routing or connectivity failure"},
      {"CAPACITY", "resource exhaustion, overload or insufficient capacity"},
      {"DEPENDENCY", "a failure in an upstream or dependent service"},
      {"POWER", "a power or cooling event in a facility"},
      {"HUMAN_ERROR", "an operator mistake during manual work"},
      {"SECURITY", "an attack or security incident"},
      {"UNKNOWN", "the report does not state the cause"},
  };
  return v;
}

Vocabulary parse_vocabulary(std::string_view content) {
  Vocabulary out;
  for (auto& raw : text::split(content, '\n')) {
    auto line = text::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    Category c;
    auto colon = line.find(':');
    if (colon == std::string::npos) {
      c.name = line;
    } else {
      c.name = text::trim(std::string_view(line).substr(0, colon));
      c.definition = text::trim(std::string_view(line).substr(colon + 1));
    }
    if (c.name.empty()) throw ConfigError("vocabulary line without a category name: " + line);
    for (const auto& prev : out)
      if (prev.name == c.name) throw ConfigError("duplicate vocabulary entry: " + c.name);
    out.push_back(std::move(c));
  }
  if (out.empty()) throw ConfigError("vocabulary is empty");
  return out;
}

std::string serialize_vocabulary(const Vocabulary& vocabulary) {
  std::string out;
  for (const auto& c : vocabulary) out += c.definition.empty() ? c.name + "\n" : c.name + ": " + c.definition + "\n";
  return out;
}

Vocabularies load_vocabularies(const std::string& dir) {
  namespace fs = std::filesystem;
  Vocabularies v = default_vocabularies();
  auto load = [&](const char* name, Vocabulary& into) {
    fs::path p = fs::path(dir) / name;
    if (fs::exists(p)) into = parse_vocabulary(text::read_file(p.string()));
  };
  load("service_category.txt", v.service_category);
  load("user_symptom_category.txt", v.user_symptom_category);
  load("root_cause_category.txt", v.root_cause_category);
  return v;
}

ExtractionSchema::ExtractionSchema(Provider provider, std::vector<FieldSpec> fields)
    : provider_(provider), fields_(std::move(fields)) {
  for (std::size_t i = 0; i < fields_.size(); ++i) {
    const auto& f = fields_[i];
    bool categorical = f.kind == FieldKind::Class || f.kind == FieldKind::Multiclass;
    if (categorical && (!f.vocabulary || f.vocabulary->empty()))
      throw ConfigError("field " + f.name + " needs a non-empty vocabulary");
    if (!categorical && f.vocabulary)
      throw ConfigError("field " + f.name + " must not carry a vocabulary");
    if (f.metric != metric_for(f.kind))
      throw ConfigError("field " + f.name + " has a metric that does not match its kind");
    for (std::size_t j = 0; j < i; ++j)
      if (fields_[j].name == f.name) throw ConfigError("duplicate field " + f.name);
  }
}

ExtractionSchema ExtractionSchema::for_provider(Provider provider, const Vocabularies& vocab) {
  auto entity = [](std::string name, ValueFormat fmt = ValueFormat::Free) {
    return FieldSpec{std::move(name), FieldKind::Entity, Metric::EM, std::nullopt,
                     Origin::Extracted, fmt};
  };
  auto cls = [](std::string name, const Vocabulary& v) {
    return FieldSpec{std::move(name), FieldKind::Class, Metric::EM, v, Origin::Inferred,
                     ValueFormat::Free};
  };
  std::vector<FieldSpec> f;
  f.push_back(entity("service_name"));
  if (provider != Provider::Gcp) f.push_back(entity("location"));
  f.push_back(cls("service_category", vocab.service_category));
  f.push_back(entity("start_time", ValueFormat::TimeOfDay));
  f.push_back(entity("end_time", ValueFormat::TimeOfDay));
  f.push_back(entity("timezone"));
  f.push_back({"user_symptom", FieldKind::Text, Metric::BS, std::nullopt, Origin::Extracted,
               ValueFormat::Free});
  f.push_back({"user_symptom_category", FieldKind::Multiclass, Metric::TK,
               vocab.user_symptom_category, Origin::Inferred, ValueFormat::Free});
  if (provider == Provider::Azure) {
    f.push_back({"root_cause", FieldKind::Text, Metric::BS, std::nullopt, Origin::Extracted,
                 ValueFormat::Free});
    f.push_back(cls("root_cause_category", vocab.root_cause_category));
  }
  return ExtractionSchema(provider, std::move(f));
}

const FieldSpec* ExtractionSchema::find(std::string_view name) const {
  for (const auto& f : fields_)
    if (f.name == name) return &f;
  return nullptr;
}

std::vector<std::string> ExtractionSchema::keys() const {
  std::vector<std::string> out;
  for (const auto& f : fields_) out.push_back(f.name);
  return out;
}

}  // namespace irx
