#include "pforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "pforge/errors.hpp"
#include "pforge/util.hpp"

namespace pforge {

std::size_t levenshtein_codepoints(const std::string& a, const std::string& b) {
  const std::vector<char32_t> ca = utf8_decode(a);
  const std::vector<char32_t> cb = utf8_decode(b);
  if (ca.empty()) return cb.size();
  if (cb.empty()) return ca.size();

  std::vector<std::size_t> prev(cb.size() + 1);
  std::vector<std::size_t> curr(cb.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= ca.size(); ++i) {
    curr[0] = i;
    for (std::size_t j = 1; j <= cb.size(); ++j) {
      const std::size_t subst = prev[j - 1] + (ca[i - 1] == cb[j - 1] ? 0 : 1);
      curr[j] = std::min({prev[j] + 1, curr[j - 1] + 1, subst});
    }
    std::swap(prev, curr);
  }
  return prev[cb.size()];
}

double relative_edit_distance(const std::string& a, const std::string& b) {
  // Lengths come from the same decoding as the distance so the ratio stays
  // in [0, 1] even for byte sequences that are not valid UTF-8.
  const std::size_t len_a = utf8_decode(a).size();
  const std::size_t len_b = utf8_decode(b).size();
  const std::size_t longest = std::max(len_a, len_b);
  if (longest == 0) return 0.0;
  return static_cast<double>(levenshtein_codepoints(a, b)) / static_cast<double>(longest);
}

namespace {

bool is_word_cp(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= '0' && cp <= '9') || (cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z');
  }
  // Non-ASCII: treat everything that is not whitespace or common punctuation
  // as word material. Exact Unicode categories are overkill for corpus
  // statistics; what matters is a stable, script-agnostic segmentation.
  return true;
}

bool is_space_cp(char32_t cp) {
  return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == 0x0B || cp == 0x0C ||
         cp == 0xA0 || cp == 0x2028 || cp == 0x2029 ||
         (cp >= 0x2000 && cp <= 0x200A) || cp == 0x3000;
}

}  // namespace

std::vector<std::string> word_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::vector<char32_t> run;
  for (char32_t cp : utf8_decode(text)) {
    if (is_space_cp(cp)) {
      if (!run.empty()) {
        tokens.push_back(utf8_encode(run));
        run.clear();
      }
    } else if (is_word_cp(cp)) {
      run.push_back(cp);
    } else {
      if (!run.empty()) {
        tokens.push_back(utf8_encode(run));
        run.clear();
      }
      tokens.push_back(utf8_encode({cp}));
    }
  }
  if (!run.empty()) tokens.push_back(utf8_encode(run));
  return tokens;
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::vector<char32_t> run;
  for (char32_t cp : utf8_decode(text)) {
    if (is_space_cp(cp)) {
      if (!run.empty()) {
        tokens.push_back(utf8_encode(run));
        run.clear();
      }
    } else {
      run.push_back(cp);
    }
  }
  if (!run.empty()) tokens.push_back(utf8_encode(run));
  return tokens;
}

std::vector<std::string> tokenize(const std::string& text, TokenizerKind kind) {
  return kind == TokenizerKind::words ? word_tokens(text) : whitespace_tokens(text);
}

namespace {

// N-grams as joined strings with an unlikely separator; cheaper than vector
// keys and stable for counting.
std::string join_ngram(const std::vector<std::string>& tokens, std::size_t start,
                       std::size_t n) {
  std::string key;
  for (std::size_t k = 0; k < n; ++k) {
    if (k) key += '\x1f';
    key += tokens[start + k];
  }
  return key;
}

}  // namespace

std::vector<NgramOrderStats> corpus_ngram_stats(const std::vector<std::string>& corpus,
                                                std::size_t max_n, TokenizerKind tokenizer) {
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(corpus.size());
  for (const auto& text : corpus) tokenized.push_back(tokenize(text, tokenizer));

  std::vector<NgramOrderStats> stats;
  for (std::size_t n = 1; n <= max_n; ++n) {
    NgramOrderStats s;
    s.order = n;
    std::map<std::string, std::size_t> counts;
    for (const auto& tokens : tokenized) {
      if (tokens.size() < n) continue;
      for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[join_ngram(tokens, i, n)];
        ++s.total;
      }
    }
    s.unique = counts.size();
    stats.push_back(s);
  }
  return stats;
}

double ngram_diversity(const std::vector<std::string>& corpus, std::size_t max_n,
                       TokenizerKind tokenizer) {
  if (max_n == 0) throw DataError("ngram_diversity: max_n must be positive");
  const std::vector<NgramOrderStats> stats = corpus_ngram_stats(corpus, max_n, tokenizer);
  double sum = 0.0;
  for (const auto& s : stats) {
    if (s.total == 0) {
      throw DataError("ngram_diversity: corpus has no " + std::to_string(s.order) +
                      "-grams; need at least one text with >= " + std::to_string(max_n) +
                      " tokens");
    }
    sum += static_cast<double>(s.unique) / static_cast<double>(s.total);
  }
  return sum / static_cast<double>(max_n);
}

double perplexity_from_logprobs(const std::vector<double>& token_logprobs) {
  if (token_logprobs.empty()) {
    throw DataError("perplexity: no token logprobs");
  }
  double sum = 0.0;
  for (double lp : token_logprobs) sum += lp;
  return std::exp(-sum / static_cast<double>(token_logprobs.size()));
}

namespace {

std::map<std::string, std::size_t> ngram_counts(const std::vector<std::string>& tokens,
                                                std::size_t n) {
  std::map<std::string, std::size_t> counts;
  if (tokens.size() >= n) {
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
      ++counts[join_ngram(tokens, i, n)];
    }
  }
  return counts;
}

}  // namespace

double sentence_bleu(const std::vector<std::string>& hypothesis,
                     const std::vector<std::vector<std::string>>& references,
                     const BleuOptions& options) {
  if (hypothesis.empty() || references.empty()) return 0.0;

  const std::size_t hyp_len = hypothesis.size();
  const std::size_t orders = std::min(options.max_n, hyp_len);

  // Closest reference length; ties go to the shorter reference.
  std::size_t ref_len = references.front().size();
  for (const auto& ref : references) {
    const auto diff = [&](std::size_t len) {
      return len > hyp_len ? len - hyp_len : hyp_len - len;
    };
    if (diff(ref.size()) < diff(ref_len) ||
        (diff(ref.size()) == diff(ref_len) && ref.size() < ref_len)) {
      ref_len = ref.size();
    }
  }

  double log_precision_sum = 0.0;
  for (std::size_t n = 1; n <= orders; ++n) {
    const auto hyp_counts = ngram_counts(hypothesis, n);
    std::map<std::string, std::size_t> max_ref_counts;
    for (const auto& ref : references) {
      for (const auto& [gram, count] : ngram_counts(ref, n)) {
        auto& best = max_ref_counts[gram];
        best = std::max(best, count);
      }
    }
    std::size_t matched = 0;
    std::size_t total = 0;
    for (const auto& [gram, count] : hyp_counts) {
      total += count;
      const auto it = max_ref_counts.find(gram);
      if (it != max_ref_counts.end()) matched += std::min(count, it->second);
    }
    const double numerator =
        matched > 0 ? static_cast<double>(matched) : options.epsilon;
    log_precision_sum += std::log(numerator / static_cast<double>(total));
  }

  const double geo_mean = std::exp(log_precision_sum / static_cast<double>(orders));
  const double bp =
      hyp_len >= ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
  return bp * geo_mean;
}

double self_bleu(const std::vector<std::string>& corpus, const BleuOptions& options) {
  if (corpus.size() < 2) {
    throw DataError("self_bleu: need at least two texts, got " +
                    std::to_string(corpus.size()));
  }
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(corpus.size());
  for (const auto& text : corpus) tokenized.push_back(tokenize(text, options.tokenizer));

  double sum = 0.0;
  for (std::size_t i = 0; i < tokenized.size(); ++i) {
    std::vector<std::vector<std::string>> references;
    references.reserve(tokenized.size() - 1);
    for (std::size_t j = 0; j < tokenized.size(); ++j) {
      if (j == i) continue;
      references.push_back(tokenized[j]);
      if (options.max_references && references.size() >= *options.max_references) break;
    }
    sum += sentence_bleu(tokenized[i], references, options);
  }
  return sum / static_cast<double>(corpus.size());
}

}  // namespace pforge
