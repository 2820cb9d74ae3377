#pragma once

#include <string>

#include "pforge/corpus.hpp"
#include "pforge/gateway.hpp"
#include "pforge/templates.hpp"

namespace pforge {

// The prompt-rewriting operators. Each builds the instruction for one input
// record, checks the stage transition, and wraps the backend reply in a child
// record. Language filtering happens in the pipeline, not here.
enum class TransformKind { translate, naturalize, culturalize, difficultify };

TransformKind transform_kind_from_string(const std::string& name);
std::string to_string(TransformKind kind);
Stage output_stage(TransformKind kind);
Stage required_input_stage(TransformKind kind);

class Transformer {
 public:
  // `target_lang` is consulted only by translate; the other operators keep
  // the input record's language.
  Transformer(TransformKind kind, std::string target_lang = "");

  // The fully rendered instruction sent to the backend.
  std::string build_instruction(const PromptRecord& input) const;

  // Validates input stage, issues one generation call, and derives the child
  // record. `id` is the caller-assigned deterministic record id.
  PromptRecord apply(const PromptRecord& input, Gateway& gateway, double temperature,
                     const std::string& created_at, const std::string& id) const;

  TransformKind kind() const { return kind_; }

 private:
  TransformKind kind_;
  std::string target_lang_;
  TextTemplate template_;
};

// Instruction for the teacher-completion call: the prompt text itself, bare.
std::string completion_instruction(const PromptRecord& prompt);

// Issues the completion call and builds the record (id = "y-" + prompt id).
CompletionRecord complete_prompt(const PromptRecord& prompt, Gateway& gateway,
                                 double temperature);

}  // namespace pforge
