#include "irx/promptkit.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>

#include "irx/error.hpp"
#include "irx/hash.hpp"
#include "irx/text.hpp"

namespace irx {

std::string_view to_string(Component c) {
  switch (c) {
    case Component::Task: return "Task";
    case Component::CoT: return "CoT";
    case Component::Category: return "Category";
    case Component::Examples: return "Examples";
    case Component::Format: return "Format";
  }
  return "?";
}

std::string_view to_string(StrategyLabel s) {
  switch (s) {
    case StrategyLabel::FullZS: return "Full-ZS";
    case StrategyLabel::FullFS: return "Full-FS";
    case StrategyLabel::BasicZS: return "Basic-ZS";
    case StrategyLabel::BasicFS: return "Basic-FS";
    case StrategyLabel::CoTZS: return "CoT-ZS";
    case StrategyLabel::CategZS: return "Categ-ZS";
  }
  return "?";
}

StrategyLabel parse_strategy(std::string_view s) {
  std::string key;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c))) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (key == "fullzs") return StrategyLabel::FullZS;
  if (key == "fullfs") return StrategyLabel::FullFS;
  if (key == "basiczs") return StrategyLabel::BasicZS;
  if (key == "basicfs") return StrategyLabel::BasicFS;
  if (key == "cotzs") return StrategyLabel::CoTZS;
  if (key == "categzs") return StrategyLabel::CategZS;
  throw CompositionError("unknown prompt strategy: " + std::string(s));
}

std::vector<StrategyLabel> parse_strategies(std::string_view list) {
  std::vector<StrategyLabel> out;
  if (text::iequals(text::trim(list), "all")) {
    for (auto& s : strategy_matrix()) out.push_back(s.label);
    return out;
  }
  for (auto& part : text::split(list, ',')) {
    auto t = text::trim(part);
    if (!t.empty()) out.push_back(parse_strategy(t));
  }
  return out;
}

bool PromptStrategy::has(Component c) const {
  return std::find(components.begin(), components.end(), c) != components.end();
}

std::vector<PromptStrategy> strategy_matrix() {
  using C = Component;
  return {
      {StrategyLabel::FullZS, {C::Task, C::CoT, C::Category, C::Format}},
      {StrategyLabel::FullFS, {C::Task, C::CoT, C::Category, C::Examples, C::Format}},
      {StrategyLabel::BasicZS, {C::Task, C::Format}},
      {StrategyLabel::BasicFS, {C::Task, C::Examples, C::Format}},
      {StrategyLabel::CoTZS, {C::Task, C::CoT, C::Format}},
      {StrategyLabel::CategZS, {C::Task, C::Category, C::Format}},
  };
}

PromptStrategy strategy(StrategyLabel label) {
  for (auto& s : strategy_matrix())
    if (s.label == label) return s;
  throw CompositionError("unknown prompt strategy");
}

std::string render_report(const IncidentReport& r) {
  std::string out = "title: " + r.title + "\n";
  if (!r.status.empty()) out += "status: " + r.status + "\n";
  out += "description:\n" + r.body_text;
  return out;
}

std::size_t estimate_tokens(std::string_view t) { return (t.size() + 3) / 4; }

FewShotExample make_example(const IncidentReport& report, const GroundTruthLabel& label,
                            const ExtractionSchema& schema) {
  if (label.report_id != report.report_id)
    throw CompositionError("example label " + label.report_id + " does not belong to report " + report.report_id);
  validate_label(label, schema);
  return {report.report_id, render_report(report), label.values};
}

PromptTemplates PromptTemplates::defaults() {
  PromptTemplates t;
  t.system =
      "You are a system operator responsible for the reliability of cloud services. "
      "Help perform data extraction from cloud incident reports. "
      "Reply with the requested JSON object only.";
  t.task = "Analyze the incident report step by step to extract structured information.";
  t.cot =
      "Follow the reasoning steps:\n\n"
      "1. Identify the service name{and_location}.\n\n"
      "2. From {service_category_lst}, select one most relevant service category.\n\n"
      "3. Extract the relevant sentence(s) that describe user symptoms. Then, from {user_symp_lst}, "
      "select one or more categories that best match the extracted symptoms.\n\n"
      "4. Identify the start time, end time, and timezone. Format times as \"HH:MM:SS\" (24-hour)."
      "{root_cause_step}";
  t.category =
      "The service category is one of {service_category_lst}.\n\n"
      "The definition for user symptom category are:\n\n"
      "{user_symp_instruction}."
      "{root_cause_block}";
  t.format =
      "Finally, return the extracted information in a JSON object with the keys:\n\n"
      "{json_keys}.\n\n"
      "Use null for information the report does not contain.";
  t.examples = "Here are a few examples of report content (labeled Q) and extracted information (labeled A).";
  t.report = "Now extract the information from this report.\n\nQ: {report}";
  return t;
}

PromptTemplates PromptTemplates::load(const std::string& dir) {
  namespace fs = std::filesystem;
  PromptTemplates t = defaults();
  auto read = [&](const char* name, std::string& into) {
    fs::path p = fs::path(dir) / (std::string(name) + ".txt");
    if (!fs::exists(p)) return;
    auto content = text::read_file(p.string());
    while (!content.empty() && (content.back() == '\n' || content.back() == '\r')) content.pop_back();
    into = std::move(content);
  };
  read("system", t.system);
  read("task", t.task);
  read("cot", t.cot);
  read("category", t.category);
  read("format", t.format);
  read("examples", t.examples);
  read("report", t.report);
  return t;
}

std::string fill_template(std::string_view tmpl,
                          const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t j = i + 1;
      while (j < tmpl.size() && (std::islower(static_cast<unsigned char>(tmpl[j])) || tmpl[j] == '_')) ++j;
      if (j < tmpl.size() && tmpl[j] == '}' && j > i + 1) {
        auto name = tmpl.substr(i + 1, j - i - 1);
        auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
        if (it == values.end()) throw CompositionError("unknown template placeholder {" + std::string(name) + "}");
        out += it->second;
        i = j + 1;
        continue;
      }
    }
    out.push_back(tmpl[i++]);
  }
  return out;
}

namespace {

std::string category_list(const Vocabulary& v) {
  std::vector<std::string> names;
  for (const auto& c : v) names.push_back(c.name);
  return "[" + text::join(names, ", ") + "]";
}

std::string category_definitions(const Vocabulary& v) {
  std::vector<std::string> lines;
  for (const auto& c : v) lines.push_back(c.definition.empty() ? c.name : c.name + ": " + c.definition);
  return text::join(lines, "\n");
}

std::vector<std::pair<std::string, std::string>> schema_values(const ExtractionSchema& schema) {
  auto vocab_of = [&](const char* field) -> Vocabulary {
    const auto* f = schema.find(field);
    return f && f->vocabulary ? *f->vocabulary : Vocabulary{};
  };
  auto service = vocab_of("service_category");
  auto symptom = vocab_of("user_symptom_category");
  auto cause = vocab_of("root_cause_category");
  std::string root_step, root_block;
  if (schema.has("root_cause")) {
    root_step =
        "\n\n5. Extract the relevant sentence(s) that describe the root cause.";
    if (!cause.empty())
      root_step += " Then, from " + category_list(cause) + ", select one most relevant root cause category.";
  }
  if (!cause.empty())
    root_block = "\n\nThe definition for root cause category are:\n\n" + category_definitions(cause) + ".";
  return {
      {"service_category_lst", category_list(service)},
      {"user_symp_lst", category_list(symptom)},
      {"user_symp_instruction", category_definitions(symptom)},
      {"root_cause_category_lst", category_list(cause)},
      {"root_cause_instruction", category_definitions(cause)},
      {"and_location", schema.has("location") ? " and service location" : ""},
      {"root_cause_step", root_step},
      {"root_cause_block", root_block},
      {"json_keys", text::join(schema.keys(), ", ")},
  };
}

std::string answer_json(const FieldValues& values, const ExtractionSchema& schema) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& f : schema.fields()) {
    auto it = values.find(f.name);
    j[f.name] = it == values.end() ? nlohmann::ordered_json() : nlohmann::ordered_json(it->second.to_json());
  }
  return j.dump();
}

}  // namespace

PromptBundle compose(const IncidentReport& report, StrategyLabel label, const ExtractionSchema& schema,
                     const std::vector<FewShotExample>& examples, const PromptTemplates& templates) {
  const auto strat = strategy(label);
  if (strat.few_shot() && examples.empty())
    throw CompositionError(std::string(to_string(label)) + " needs at least one few-shot example");
  if (strat.few_shot()) {
    for (const auto& ex : examples) {
      if (ex.report_id == report.report_id)
        throw CompositionError("report " + report.report_id + " is also a few-shot example");
      GroundTruthLabel l{ex.report_id, ex.answer_record};
      validate_label(l, schema);
    }
  }
  const auto values = schema_values(schema);

  PromptBundle b;
  b.strategy = label;
  b.provider = schema.provider();
  b.report_id = report.report_id;
  b.system_prompt = fill_template(templates.system, values);

  for (auto kind : {Component::Task, Component::CoT, Component::Category, Component::Format, Component::Examples}) {
    if (!strat.has(kind)) continue;
    std::string body;
    switch (kind) {
      case Component::Task: body = fill_template(templates.task, values); break;
      case Component::CoT: body = fill_template(templates.cot, values); break;
      case Component::Category: body = fill_template(templates.category, values); break;
      case Component::Format: body = fill_template(templates.format, values); break;
      case Component::Examples: {
        body = fill_template(templates.examples, values);
        for (const auto& ex : examples) {
          body += "\n\nQ: " + ex.question_text;
          body += "\n\nA:\n" + answer_json(ex.answer_record, schema);
        }
        break;
      }
    }
    b.components.push_back({kind, std::move(body)});
  }

  std::vector<std::string> parts;
  for (const auto& c : b.components) parts.push_back(c.text);
  auto report_values = values;
  report_values.emplace_back("report", render_report(report));
  parts.push_back(fill_template(templates.report, report_values));
  b.user_prompt = text::join(parts, "\n\n");

  std::string hashed = b.system_prompt;
  hashed.push_back('\0');
  hashed += b.user_prompt;
  b.prompt_hash = sha256_hex(hashed);
  b.estimated_input_tokens = estimate_tokens(b.system_prompt) + estimate_tokens(b.user_prompt);
  return b;
}

}  // namespace irx
