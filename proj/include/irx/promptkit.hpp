#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "irx/corpus.hpp"
#include "irx/schema.hpp"

namespace irx {

enum class Component { Task, CoT, Category, Examples, Format };

enum class StrategyLabel { FullZS, FullFS, BasicZS, BasicFS, CoTZS, CategZS };

std::string_view to_string(Component c);
// "Full-ZS", "Full-FS", "Basic-ZS", "Basic-FS", "CoT-ZS", "Categ-ZS".
std::string_view to_string(StrategyLabel s);
// Case-insensitive; ignores '-', '_', '.' and spaces, so "FullFS", "full-fs"
// and "Categ.-ZS" all parse. Throws CompositionError for unknown labels.
StrategyLabel parse_strategy(std::string_view s);
std::vector<StrategyLabel> parse_strategies(std::string_view comma_separated);

struct PromptStrategy {
  StrategyLabel label;
  std::vector<Component> components;  // in table order

  bool has(Component c) const;
  bool few_shot() const { return has(Component::Examples); }
};

// The six strategies, in table order.
std::vector<PromptStrategy> strategy_matrix();
PromptStrategy strategy(StrategyLabel label);

struct PromptComponent {
  Component kind;
  std::string text;
};

struct FewShotExample {
  std::string report_id;
  std::string question_text;  // rendered report content
  FieldValues answer_record;
};

// Builds an example from a labeled report; the label must validate against
// the schema.
FewShotExample make_example(const IncidentReport& report, const GroundTruthLabel& label,
                            const ExtractionSchema& schema);

// Component templates with {named} placeholders. Placeholders are filled from
// the schema: {service_category_lst}, {user_symp_lst}, {user_symp_instruction},
// {root_cause_category_lst}, {root_cause_instruction}, {and_location},
// {root_cause_step}, {root_cause_block}, {json_keys}; and {report} in the
// report template.
struct PromptTemplates {
  std::string system;
  std::string task;
  std::string cot;
  std::string category;
  std::string format;
  std::string examples;  // header line of the example block
  std::string report;

  static PromptTemplates defaults();
  // Reads <dir>/<name>.txt for each template; missing files keep defaults.
  static PromptTemplates load(const std::string& dir);
};

struct PromptBundle {
  std::string system_prompt;
  std::string user_prompt;
  StrategyLabel strategy = StrategyLabel::FullZS;
  Provider provider = Provider::Aws;
  std::string report_id;
  std::string prompt_hash;  // SHA-256 over system and user prompt
  std::size_t estimated_input_tokens = 0;
  std::vector<PromptComponent> components;  // in rendering order
};

// "title: ...\nstatus: ...\ndescription:\n..." (status line omitted when empty).
std::string render_report(const IncidentReport& report);

// ceil(bytes / 4).
std::size_t estimate_tokens(std::string_view text);

// Substitutes {name} placeholders in one pass; substituted values are not
// rescanned. Unknown placeholders throw CompositionError.
std::string fill_template(std::string_view tmpl,
                          const std::vector<std::pair<std::string, std::string>>& values);

// Renders components in the order Task, CoT, Category, Format, Examples and
// appends the report. Throws CompositionError when a few-shot strategy gets
// no examples or when the report itself is one of the examples.
PromptBundle compose(const IncidentReport& report, StrategyLabel strategy,
                     const ExtractionSchema& schema, const std::vector<FewShotExample>& examples,
                     const PromptTemplates& templates = PromptTemplates::defaults());

}  // namespace irx
