#include "pforge/judge.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "pforge/errors.hpp"
#include "pforge/rng.hpp"
#include "pforge/templates.hpp"
#include "pforge/util.hpp"

namespace pforge {

namespace {

// Last <tag>...</tag> span in the reply, with inner whitespace trimmed;
// nullopt when no complete element exists.
std::optional<std::string> last_tag_value(const std::string& reply, const std::string& tag) {
  const std::string open = "<" + tag + ">";
  const std::string close = "</" + tag + ">";
  std::optional<std::string> value;
  std::size_t pos = 0;
  while (true) {
    const std::size_t start = reply.find(open, pos);
    if (start == std::string::npos) break;
    const std::size_t end = reply.find(close, start + open.size());
    if (end == std::string::npos) break;
    value = trim(reply.substr(start + open.size(), end - start - open.size()));
    pos = end + close.size();
  }
  return value;
}

}  // namespace

std::optional<QualityGrade> parse_quality_grade(const std::string& reply) {
  const auto value = last_tag_value(reply, "quality");
  if (!value || value->size() != 1) return std::nullopt;
  const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>((*value)[0])));
  if (letter < 'A' || letter > 'E') return std::nullopt;
  return QualityGrade{letter, 5 - (letter - 'A')};
}

std::optional<DifficultyGrade> parse_difficulty_grade(const std::string& reply) {
  const auto value = last_tag_value(reply, "difficulty");
  if (!value) return std::nullopt;
  const std::string label = to_lower(*value);
  if (label == "easy") return DifficultyGrade{"easy", 1};
  if (label == "medium") return DifficultyGrade{"medium", 2};
  if (label == "hard") return DifficultyGrade{"hard", 3};
  return std::nullopt;
}

namespace {

GradeOutcome grade_with_retry(const std::string& id, const std::string& instruction,
                              Gateway& gateway) {
  GradeOutcome outcome;
  outcome.id = id;
  GenerationRequest request;
  request.instruction = instruction;
  request.temperature = 0.0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    request.seed = mix_seed(fnv1a64(id), attempt == 0 ? "grade" : "grade-r1");
    const GenerationResult result = gateway.generate(request);
    outcome.raw_reply = result.text;
    outcome.quality = parse_quality_grade(result.text);
    outcome.difficulty = parse_difficulty_grade(result.text);
    if (outcome.quality && outcome.difficulty) {
      outcome.parse_failed = false;
      return outcome;
    }
    outcome.parse_failed = true;
  }
  return outcome;
}

}  // namespace

GradeOutcome grade_prompt(const PromptRecord& prompt, Gateway& gateway) {
  static const TextTemplate grader = load_template("grader_prompt");
  return grade_with_retry(prompt.id, grader.render({{"prompt", prompt.text}}), gateway);
}

GradeOutcome grade_pair(const PairedExample& pair, Gateway& gateway) {
  static const TextTemplate grader = load_template("grader_pair");
  return grade_with_retry(
      pair.completion.id,
      grader.render({{"question", pair.prompt.text}, {"answer", pair.completion.text}}),
      gateway);
}

JudgeMode judge_mode_from_string(const std::string& name) {
  if (name == "general") return JudgeMode::general;
  if (name == "naturalness") return JudgeMode::naturalness;
  throw ConfigError("unknown judge mode: \"" + name + "\" (expected general|naturalness)");
}

std::string to_string(JudgeMode mode) {
  return mode == JudgeMode::general ? "general" : "naturalness";
}

std::optional<Preference> parse_preference(const std::string& reply) {
  const std::size_t at = reply.rfind("Preferred:");
  if (at == std::string::npos) return std::nullopt;
  const std::string rest = to_lower(reply.substr(at + 10));
  // The earliest unambiguous token after the marker wins.
  const std::size_t a = rest.find("response (a)");
  const std::size_t b = rest.find("response (b)");
  const std::size_t tie = rest.find("tie");
  std::optional<Preference> best;
  std::size_t best_pos = std::string::npos;
  const auto consider = [&](std::size_t pos, Preference p) {
    if (pos != std::string::npos && pos < best_pos) {
      best_pos = pos;
      best = p;
    }
  };
  consider(a, Preference::a);
  consider(b, Preference::b);
  consider(tie, Preference::tie);
  return best;
}

PairwiseVerdict judge_pair_preference(const PairwiseItem& item, JudgeMode mode,
                                      Gateway& gateway, std::uint64_t base_seed) {
  if (trim(item.completion_x).empty() || trim(item.completion_y).empty()) {
    throw DataError("pairwise judging of " + item.prompt_id + ": empty completion");
  }
  static const TextTemplate general = load_template("judge_general");
  static const TextTemplate naturalness = load_template("judge_naturalness");
  const TextTemplate& tpl = mode == JudgeMode::general ? general : naturalness;

  PairwiseVerdict verdict;
  verdict.prompt_id = item.prompt_id;
  Rng side_rng(mix_seed(base_seed, item.prompt_id));
  verdict.x_shown_as_a = side_rng.bernoulli(0.5);

  const std::string& shown_a = verdict.x_shown_as_a ? item.completion_x : item.completion_y;
  const std::string& shown_b = verdict.x_shown_as_a ? item.completion_y : item.completion_x;
  GenerationRequest request;
  request.instruction = tpl.render({{"language", language_display_name(item.lang)},
                                    {"prompt", item.prompt_text},
                                    {"completion_a", shown_a},
                                    {"completion_b", shown_b}});
  request.temperature = 0.0;

  std::optional<Preference> choice;
  for (int attempt = 0; attempt < 2 && !choice; ++attempt) {
    request.seed = mix_seed(mix_seed(base_seed, item.prompt_id),
                            attempt == 0 ? "judge" : "judge-r1");
    const GenerationResult result = gateway.generate(request);
    verdict.raw_reply = result.text;
    choice = parse_preference(result.text);
  }
  if (!choice) {
    verdict.parse_failed = true;
    return verdict;
  }

  verdict.choice = *choice;
  if (*choice == Preference::tie) {
    verdict.x_score = 0.5;
  } else {
    const bool x_won = (*choice == Preference::a) == verdict.x_shown_as_a;
    verdict.x_score = x_won ? 1.0 : 0.0;
  }
  return verdict;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("percentile of empty sample");
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(rank));
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

std::vector<double> bootstrap_win_rates(const std::vector<double>& scores,
                                        std::size_t n_bootstrap, std::uint64_t seed) {
  if (scores.empty()) throw DataError("bootstrap over empty score set");
  Rng rng(seed);
  std::vector<double> rates;
  rates.reserve(n_bootstrap);
  for (std::size_t b = 0; b < n_bootstrap; ++b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      sum += scores[rng.below(scores.size())];
    }
    rates.push_back(sum / static_cast<double>(scores.size()));
  }
  return rates;
}

WinRateSummary win_rate_summary(const std::vector<PairwiseVerdict>& verdicts,
                                std::size_t n_bootstrap, std::uint64_t seed) {
  if (verdicts.empty()) throw DataError("win rate over empty result set");
  WinRateSummary summary;
  summary.n = verdicts.size();
  summary.n_bootstrap = n_bootstrap;
  std::vector<double> scores;
  scores.reserve(verdicts.size());
  double sum = 0.0;
  for (const auto& v : verdicts) {
    if (v.parse_failed) {
      throw DataError("win rate input contains unparsed verdict for " + v.prompt_id);
    }
    if (v.x_score == 1.0) {
      ++summary.wins;
    } else if (v.x_score == 0.0) {
      ++summary.losses;
    } else {
      ++summary.ties;
    }
    scores.push_back(v.x_score);
    sum += v.x_score;
  }
  summary.win_rate = sum / static_cast<double>(summary.n);

  const std::vector<double> rates = bootstrap_win_rates(scores, n_bootstrap, seed);
  summary.ci_low = percentile(rates, 0.025);
  summary.ci_high = percentile(rates, 0.975);
  // A point estimate outside its percentile interval can only arise from
  // resampling noise on tiny samples; the summary keeps low <= rate <= high.
  summary.ci_low = std::min(summary.ci_low, summary.win_rate);
  summary.ci_high = std::max(summary.ci_high, summary.win_rate);
  return summary;
}

}  // namespace pforge
