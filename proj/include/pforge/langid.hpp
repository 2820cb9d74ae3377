#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pforge/corpus.hpp"

namespace pforge {

// Language identification interface. identify() never throws on odd input:
// empty or all-whitespace text yields ("und", 0.0).
class LangId {
 public:
  virtual ~LangId() = default;
  virtual LangIdVerdict identify(const std::string& text) const = 0;
};

struct LangIdRule {
  std::string match;  // substring to look for; empty = catch-all default
  std::string lang;
  double confidence = 1.0;
};

// Rule-table identifier: first rule whose `match` occurs in the text wins,
// in file order; an empty `match` always fires, so it acts as the default
// and should come last. Backed by a JSONL fixture of
// {"match": ..., "lang": ..., "confidence": ...} lines.
class TableLangId : public LangId {
 public:
  explicit TableLangId(std::vector<LangIdRule> rules);
  static TableLangId from_file(const std::filesystem::path& path);

  LangIdVerdict identify(const std::string& text) const override;

 private:
  std::vector<LangIdRule> rules_;
};

struct LprResult {
  std::size_t evaluable_lines = 0;
  std::size_t passing_lines = 0;
  double rate = 0.0;
};

// Line pass rate: fraction of evaluable lines identified as `target_lang`.
// Lines inside fenced code blocks (``` toggles a fence; the fence lines
// themselves are excluded too) are skipped, as is any line with fewer than
// four non-whitespace characters. No evaluable lines -> nullopt.
std::optional<LprResult> line_pass_rate(const LangId& langid, const std::string& text,
                                        const std::string& target_lang);

struct FilterOutcome {
  std::vector<std::size_t> kept;     // indices into the input, original order
  std::vector<std::size_t> dropped;  // ditto; kept and dropped partition the input
};

struct DropLogEntry {
  std::string id;
  std::string lang;         // expected language
  std::string detected;     // verdict language
  double confidence = 0.0;
  std::string reason;       // "language_mismatch" | "empty_text"
};

// Keeps records whose detected language matches the record's `lang` with
// confidence >= min_confidence. Empty-text records are dropped. The result
// partitions the input: every index lands in exactly one bucket, and kept
// indices preserve input order. Filtering the kept subset again is a no-op.
FilterOutcome filter_by_language(const LangId& langid,
                                 const std::vector<PromptRecord>& records,
                                 double min_confidence,
                                 std::vector<DropLogEntry>* drops = nullptr);
FilterOutcome filter_completions_by_language(const LangId& langid,
                                             const std::vector<CompletionRecord>& records,
                                             double min_confidence,
                                             std::vector<DropLogEntry>* drops = nullptr);

}  // namespace pforge
