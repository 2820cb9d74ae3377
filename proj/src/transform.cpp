#include "pforge/transform.hpp"

#include "pforge/errors.hpp"
#include "pforge/util.hpp"

namespace pforge {

TransformKind transform_kind_from_string(const std::string& name) {
  if (name == "translate") return TransformKind::translate;
  if (name == "naturalize" || name == "naturalness") return TransformKind::naturalize;
  if (name == "culturalize" || name == "cultural") return TransformKind::culturalize;
  if (name == "difficultify" || name == "difficulty") return TransformKind::difficultify;
  throw ConfigError("unknown transform: \"" + name + "\"");
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::translate: return "translate";
    case TransformKind::naturalize: return "naturalize";
    case TransformKind::culturalize: return "culturalize";
    case TransformKind::difficultify: return "difficultify";
  }
  throw ConfigError("unknown transform kind value");
}

Stage output_stage(TransformKind kind) {
  switch (kind) {
    case TransformKind::translate: return Stage::translated;
    case TransformKind::naturalize: return Stage::naturalized;
    case TransformKind::culturalize: return Stage::cultural;
    case TransformKind::difficultify: return Stage::difficulty;
  }
  throw ConfigError("unknown transform kind value");
}

Stage required_input_stage(TransformKind kind) {
  return *parent_stage_of(output_stage(kind));
}

namespace {

const char* template_name(TransformKind kind) {
  switch (kind) {
    case TransformKind::translate: return "translate";
    case TransformKind::naturalize: return "naturalness";
    case TransformKind::culturalize: return "cultural";
    case TransformKind::difficultify: return "difficulty";
  }
  throw ConfigError("unknown transform kind value");
}

// Models often wrap a rewritten prompt in a code fence; unwrap only when the
// fence encloses the entire reply.
std::string strip_enclosing_fence(const std::string& text) {
  const std::string trimmed = trim(text);
  if (trimmed.size() < 7 || !starts_with(trimmed, "```")) return trimmed;
  if (trimmed.compare(trimmed.size() - 3, 3, "```") != 0) return trimmed;
  const std::size_t first_newline = trimmed.find('\n');
  if (first_newline == std::string::npos || first_newline >= trimmed.size() - 3) {
    return trimmed;
  }
  return trim(trimmed.substr(first_newline + 1, trimmed.size() - 3 - first_newline - 1));
}

}  // namespace

Transformer::Transformer(TransformKind kind, std::string target_lang)
    : kind_(kind), target_lang_(std::move(target_lang)), template_(load_template(template_name(kind))) {
  if (kind_ == TransformKind::translate) {
    if (target_lang_.empty()) {
      throw ConfigError("translate transformer needs a target language");
    }
    language_display_name(target_lang_);  // rejects unsupported codes up front
  }
}

std::string Transformer::build_instruction(const PromptRecord& input) const {
  const std::string& lang =
      kind_ == TransformKind::translate ? target_lang_ : input.lang;
  // Template files end with a newline like any text file; the instruction
  // itself should not.
  return trim(template_.render({{"language", language_display_name(lang)},
                                {"prompt", input.text}}));
}

PromptRecord Transformer::apply(const PromptRecord& input, Gateway& gateway,
                                double temperature, const std::string& created_at,
                                const std::string& id) const {
  if (input.stage != required_input_stage(kind_)) {
    throw DataError(to_string(kind_) + " requires a " +
                    pforge::to_string(required_input_stage(kind_)) + "-stage input; " +
                    input.id + " is " + pforge::to_string(input.stage));
  }

  GenerationRequest request;
  request.instruction = build_instruction(input);
  request.temperature = temperature;
  request.seed = mix_seed(fnv1a64(input.id), id);

  GenerationResult result = gateway.generate(request);
  std::string text = strip_enclosing_fence(result.text);
  std::string child_id = id;
  if (text.empty()) {
    // One retry on a degenerate reply; the fresh id keeps the attempts
    // distinguishable in lineage audits.
    child_id += "r1";
    request.seed = mix_seed(fnv1a64(input.id), child_id);
    result = gateway.generate(request);
    text = strip_enclosing_fence(result.text);
    if (text.empty()) {
      throw DataError(to_string(kind_) + " on " + input.id + ": empty output after retry");
    }
  }

  return derive_child(input, output_stage(kind_), std::move(text), result.backend_id,
                      temperature, created_at, child_id,
                      kind_ == TransformKind::translate ? target_lang_ : "");
}

std::string completion_instruction(const PromptRecord& prompt) { return prompt.text; }

CompletionRecord complete_prompt(const PromptRecord& prompt, Gateway& gateway,
                                 double temperature) {
  GenerationRequest request;
  request.instruction = completion_instruction(prompt);
  request.temperature = temperature;
  request.seed = mix_seed(fnv1a64(prompt.id), "completion");

  std::string id = "y-" + prompt.id;
  GenerationResult result = gateway.generate(request);
  std::string text = trim(result.text);
  if (text.empty()) {
    id += "r1";
    request.seed = mix_seed(fnv1a64(prompt.id), "completion-r1");
    result = gateway.generate(request);
    text = trim(result.text);
    if (text.empty()) {
      throw DataError("completion of " + prompt.id + ": empty output after retry");
    }
  }

  CompletionRecord completion;
  completion.id = std::move(id);
  completion.prompt_id = prompt.id;
  completion.lang = prompt.lang;
  completion.text = std::move(text);
  completion.backend_id = result.backend_id;
  completion.temperature = temperature;
  return completion;
}

}  // namespace pforge
