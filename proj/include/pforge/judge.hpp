#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pforge/corpus.hpp"
#include "pforge/gateway.hpp"

namespace pforge {

// --- Grade parsing -----------------------------------------------------------

// Letter grades map A..E -> 5..1; difficulty maps easy/medium/hard -> 1..3.
struct QualityGrade {
  char letter = '?';
  int score = 0;
};

struct DifficultyGrade {
  std::string label;
  int score = 0;
};

// Pulls the value out of the last complete <quality>...</quality> /
// <difficulty>...</difficulty> element in a judge reply (the judge's final
// answer wins). Tolerates surrounding prose, markup, and whitespace inside
// the tags, but the final element's value must come from the closed answer
// set (A-E; easy|medium|hard, case-insensitive). Anything else -> nullopt,
// never a guess or a fallback to an earlier tag.
std::optional<QualityGrade> parse_quality_grade(const std::string& reply);
std::optional<DifficultyGrade> parse_difficulty_grade(const std::string& reply);

// --- Absolute grading -----------------------------------------------------------

struct GradeOutcome {
  std::string id;  // prompt or pair id
  std::optional<QualityGrade> quality;
  std::optional<DifficultyGrade> difficulty;
  std::string raw_reply;
  bool parse_failed = false;  // still unparseable after the one retry
};

// Grades a standalone prompt (quality + difficulty, one call; one retry on
// an unparseable reply, after which the outcome records the failure).
GradeOutcome grade_prompt(const PromptRecord& prompt, Gateway& gateway);
// Grades a question/answer pair the same way.
GradeOutcome grade_pair(const PairedExample& pair, Gateway& gateway);

// --- Pairwise preference -------------------------------------------------------

enum class Preference { a, b, tie };
enum class JudgeMode { general, naturalness };

JudgeMode judge_mode_from_string(const std::string& name);
std::string to_string(JudgeMode mode);

// Finds the last "Preferred: Response (A) | Response (B) | TIE" declaration
// in the reply. The marker is matched verbatim (the template dictates it);
// the choice itself is tolerant of case, quoting, and padding. Nullopt when
// absent or ambiguous.
std::optional<Preference> parse_preference(const std::string& reply);

struct PairwiseItem {
  std::string prompt_id;  // join key; also seeds the side shuffle
  std::string prompt_text;
  std::string lang;
  std::string completion_x;  // the system under evaluation
  std::string completion_y;  // the baseline
};

struct PairwiseVerdict {
  std::string prompt_id;
  double x_score = 0.5;      // 1 win, 0.5 tie, 0 loss for x
  Preference choice = Preference::tie;  // raw A/B/TIE as judged
  bool x_shown_as_a = false;
  bool parse_failed = false;
  std::string raw_reply;
};

// Judges one pair. The presentation side is shuffled with a per-pair seed
// (mix_seed(base_seed, prompt_id)) so reruns are reproducible while position
// bias averages out; the verdict is mapped back to x-vs-y before return.
// One retry on an unparseable reply, then the verdict records the failure.
PairwiseVerdict judge_pair_preference(const PairwiseItem& item, JudgeMode mode,
                                      Gateway& gateway, std::uint64_t base_seed);

struct WinRateSummary {
  std::size_t n = 0;
  std::size_t wins = 0;    // x preferred
  std::size_t losses = 0;  // y preferred
  std::size_t ties = 0;
  double win_rate = 0.0;   // (wins + 0.5 * ties) / n
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t n_bootstrap = 0;
};

// win_rate plus a percentile bootstrap CI (2.5th/97.5th percentiles) from
// resampling whole prompts with replacement. Verdicts that failed to parse
// must be excluded by the caller. Throws DataError on an empty result set.
WinRateSummary win_rate_summary(const std::vector<PairwiseVerdict>& verdicts,
                                std::size_t n_bootstrap = 10000,
                                std::uint64_t seed = 0);

// Exposed for the statistics tests: the bootstrap distribution over
// per-verdict scores (1, 0.5, 0).
std::vector<double> bootstrap_win_rates(const std::vector<double>& scores,
                                        std::size_t n_bootstrap, std::uint64_t seed);

// q-th quantile (q in [0,1]) with linear interpolation between order stats.
double percentile(std::vector<double> values, double q);

}  // namespace pforge
