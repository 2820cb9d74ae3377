#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pforge {

// --- Edit distance -----------------------------------------------------------

// Levenshtein distance over Unicode codepoints (bytes would overweight
// non-Latin scripts). Unit costs for insert/delete/substitute.
std::size_t levenshtein_codepoints(const std::string& a, const std::string& b);

// levenshtein / max(codepoint lengths); both strings empty -> 0.0. Bounded
// in [0, 1], symmetric, zero iff equal.
double relative_edit_distance(const std::string& a, const std::string& b);

// --- Tokenization ---------------------------------------------------------------

enum class TokenizerKind {
  words,       // runs of letters/digits are tokens; punctuation one token each
  whitespace,  // split on whitespace only
};

std::vector<std::string> tokenize(const std::string& text, TokenizerKind kind);
std::vector<std::string> word_tokens(const std::string& text);
std::vector<std::string> whitespace_tokens(const std::string& text);

// --- N-gram statistics --------------------------------------------------------

struct NgramOrderStats {
  std::size_t order = 0;
  std::size_t unique = 0;
  std::size_t total = 0;
};

// Pools n-grams of each order 1..max_n across the whole corpus and reports
// unique/total per order. Documents with fewer than n tokens contribute
// nothing at order n.
std::vector<NgramOrderStats> corpus_ngram_stats(
    const std::vector<std::string>& corpus, std::size_t max_n,
    TokenizerKind tokenizer = TokenizerKind::words);

// Mean over orders 1..max_n of unique/total. Requires at least one document
// with >= max_n tokens (otherwise some order has no n-grams at all); throws
// DataError when the corpus is too short for the requested n.
double ngram_diversity(const std::vector<std::string>& corpus, std::size_t max_n = 4,
                       TokenizerKind tokenizer = TokenizerKind::words);

// --- Perplexity ----------------------------------------------------------------

// exp(-mean(token_logprobs)); throws DataError on an empty sequence.
double perplexity_from_logprobs(const std::vector<double>& token_logprobs);

// --- Self-BLEU -------------------------------------------------------------------

struct BleuOptions {
  std::size_t max_n = 4;
  double epsilon = 0.1;  // stands in for a zero n-gram match count
  // Cap on references per hypothesis (taken in corpus order); unset = all.
  std::optional<std::size_t> max_references;
  TokenizerKind tokenizer = TokenizerKind::words;
};

// BLEU of one hypothesis against reference token lists:
//   - modified n-gram precision p_n with clipped counts; a zero match count
//     is replaced by `epsilon` (the denominator is untouched),
//   - orders 1..min(max_n, hypothesis length), geometric mean,
//   - brevity penalty against the closest reference length, ties resolved
//     toward the shorter reference.
// Empty hypothesis or empty reference set -> 0.0.
double sentence_bleu(const std::vector<std::string>& hypothesis,
                     const std::vector<std::vector<std::string>>& references,
                     const BleuOptions& options = {});

// Mean over documents of sentence_bleu(doc, corpus minus doc). Requires at
// least two documents (throws DataError otherwise); identical documents
// score exactly 1.0. Lower = more diverse.
double self_bleu(const std::vector<std::string>& corpus, const BleuOptions& options = {});

}  // namespace pforge
