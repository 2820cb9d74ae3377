#include "pforge/langid.hpp"

#include <cctype>

#include "pforge/errors.hpp"
#include "pforge/util.hpp"

namespace pforge {

TableLangId::TableLangId(std::vector<LangIdRule> rules) : rules_(std::move(rules)) {
  for (const auto& rule : rules_) {
    if (rule.lang != "und" && !is_valid_language_code(rule.lang)) {
      throw ConfigError("language-id rule with bad language tag \"" + rule.lang + "\"");
    }
    if (rule.confidence < 0.0 || rule.confidence > 1.0) {
      throw ConfigError("language-id rule confidence outside [0, 1]");
    }
  }
}

TableLangId TableLangId::from_file(const std::filesystem::path& path) {
  const std::string body = read_file(path);
  std::vector<LangIdRule> rules;
  std::size_t line_no = 0;
  for (const std::string& line : split_lines(body)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const Json j = Json::parse(line);
      LangIdRule rule;
      rule.match = j.at("match").get<std::string>();
      rule.lang = j.at("lang").get<std::string>();
      rule.confidence = j.value("confidence", 1.0);
      rules.push_back(std::move(rule));
    } catch (const Json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (rules.empty()) throw ConfigError(path.string() + ": no language-id rules");
  return TableLangId(std::move(rules));
}

LangIdVerdict TableLangId::identify(const std::string& text) const {
  if (trim(text).empty()) return {"und", 0.0};
  for (const auto& rule : rules_) {
    if (rule.match.empty() || contains(text, rule.match)) {
      return {rule.lang, rule.confidence};
    }
  }
  return {"und", 0.0};
}

namespace {

// Codepoints, not bytes: two Greek letters are two characters even though
// they occupy four bytes.
std::size_t non_whitespace_chars(const std::string& line) {
  std::size_t count = 0;
  for (char32_t cp : utf8_decode(line)) {
    const bool ws = cp == U' ' || cp == U'\t' || cp == U'\r' || cp == U'\n' ||
                    cp == U'\f' || cp == U'\v';
    if (!ws) ++count;
  }
  return count;
}

constexpr std::size_t kMinEvaluableChars = 4;

}  // namespace

std::optional<LprResult> line_pass_rate(const LangId& langid, const std::string& text,
                                        const std::string& target_lang) {
  LprResult result;
  bool in_fence = false;
  for (const std::string& line : split_lines(text)) {
    if (starts_with(trim(line), "```")) {
      in_fence = !in_fence;
      continue;  // fence markers themselves are never evaluable
    }
    if (in_fence) continue;
    if (non_whitespace_chars(line) < kMinEvaluableChars) continue;
    ++result.evaluable_lines;
    if (langid.identify(line).lang == target_lang) ++result.passing_lines;
  }
  if (result.evaluable_lines == 0) return std::nullopt;
  result.rate =
      static_cast<double>(result.passing_lines) / static_cast<double>(result.evaluable_lines);
  return result;
}

namespace {

template <typename Record>
FilterOutcome filter_generic(const LangId& langid, const std::vector<Record>& records,
                             double min_confidence, std::vector<DropLogEntry>* drops) {
  FilterOutcome outcome;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    if (trim(r.text).empty()) {
      outcome.dropped.push_back(i);
      if (drops) drops->push_back({r.id, r.lang, "und", 0.0, "empty_text"});
      continue;
    }
    const LangIdVerdict verdict = langid.identify(r.text);
    if (verdict.lang == r.lang && verdict.confidence >= min_confidence) {
      outcome.kept.push_back(i);
    } else {
      outcome.dropped.push_back(i);
      if (drops) {
        drops->push_back({r.id, r.lang, verdict.lang, verdict.confidence,
                          "language_mismatch"});
      }
    }
  }
  return outcome;
}

}  // namespace

FilterOutcome filter_by_language(const LangId& langid,
                                 const std::vector<PromptRecord>& records,
                                 double min_confidence, std::vector<DropLogEntry>* drops) {
  return filter_generic<PromptRecord>(langid, records, min_confidence, drops);
}

FilterOutcome filter_completions_by_language(const LangId& langid,
                                             const std::vector<CompletionRecord>& records,
                                             double min_confidence,
                                             std::vector<DropLogEntry>* drops) {
  return filter_generic<CompletionRecord>(langid, records, min_confidence, drops);
}

}  // namespace pforge
