#include "pforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "pforge/errors.hpp"
#include "pforge/rng.hpp"
#include "pforge/util.hpp"

using namespace pforge;

namespace {

// Textbook full-matrix DP over codepoints, kept separate from the production
// implementation so the two can disagree.
std::size_t oracle_levenshtein(const std::string& a, const std::string& b) {
  const std::vector<char32_t> ua = utf8_decode(a);
  const std::vector<char32_t> ub = utf8_decode(b);
  std::vector<std::vector<std::size_t>> d(ua.size() + 1,
                                          std::vector<std::size_t>(ub.size() + 1, 0));
  for (std::size_t i = 0; i <= ua.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= ub.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= ua.size(); ++i) {
    for (std::size_t j = 1; j <= ub.size(); ++j) {
      const std::size_t sub = d[i - 1][j - 1] + (ua[i - 1] == ub[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  }
  return d[ua.size()][ub.size()];
}

std::string random_mixed_text(Rng& rng, std::size_t max_len) {
  static const std::vector<std::string> alphabet = {
      "a", "b", "c", " ", "ä", "ß", "č", "ž", "α", "β", "λ", "у", "ї", "д", "中", "文", "😀"};
  std::string out;
  const std::size_t len = rng.below(max_len + 1);
  for (std::size_t i = 0; i < len; ++i) out += alphabet[rng.below(alphabet.size())];
  return out;
}

}  // namespace

TEST_CASE("levenshtein matches known distances") {
  CHECK(levenshtein_codepoints("", "") == 0);
  CHECK(levenshtein_codepoints("abc", "") == 3);
  CHECK(levenshtein_codepoints("", "abc") == 3);
  CHECK(levenshtein_codepoints("kitten", "sitting") == 3);
  CHECK(levenshtein_codepoints("flaw", "lawn") == 2);
  CHECK(levenshtein_codepoints("abc", "abc") == 0);
}

TEST_CASE("levenshtein counts codepoints, not bytes") {
  // Each of these strings is multiple bytes per character.
  CHECK(levenshtein_codepoints("αβγ", "αβδ") == 1);
  CHECK(levenshtein_codepoints("中文", "中") == 1);
  CHECK(levenshtein_codepoints("😀", "😁") == 1);
}

TEST_CASE("relative edit distance normalizes by the longer string") {
  CHECK(relative_edit_distance("", "") == 0.0);
  CHECK(relative_edit_distance("abc", "abc") == 0.0);
  CHECK(relative_edit_distance("abcd", "") == 1.0);
  CHECK(relative_edit_distance("kitten", "sitting") == doctest::Approx(3.0 / 7.0));
  // Symmetry.
  CHECK(relative_edit_distance("flaw", "lawn") == relative_edit_distance("lawn", "flaw"));
  // Normalizer is codepoints: one substitution in a two-codepoint string.
  CHECK(relative_edit_distance("中文", "中国") == doctest::Approx(0.5));
}

TEST_CASE("edit distance agrees with the full-matrix oracle") {
  Rng rng(41);
  for (int round = 0; round < 300; ++round) {
    const std::string a = random_mixed_text(rng, 30);
    const std::string b = random_mixed_text(rng, 30);
    const std::size_t expected = oracle_levenshtein(a, b);
    CAPTURE(a);
    CAPTURE(b);
    CHECK(levenshtein_codepoints(a, b) == expected);
    const std::size_t longer = std::max(utf8_decode(a).size(), utf8_decode(b).size());
    const double rel = relative_edit_distance(a, b);
    if (longer == 0) {
      CHECK(rel == 0.0);
    } else {
      CHECK(rel == static_cast<double>(expected) / static_cast<double>(longer));
    }
  }
}

TEST_CASE("word tokenizer splits punctuation, whitespace tokenizer does not") {
  CHECK(word_tokens("Hello, world!") ==
        std::vector<std::string>{"Hello", ",", "world", "!"});
  CHECK(whitespace_tokens("Hello, world!") == std::vector<std::string>{"Hello,", "world!"});
  CHECK(word_tokens("").empty());
  CHECK(whitespace_tokens("  \t \n ").empty());
  CHECK(word_tokens("x2 + y2 = z2") ==
        std::vector<std::string>{"x2", "+", "y2", "=", "z2"});
  // Non-ASCII letters stay inside word tokens.
  CHECK(word_tokens("schön!") == std::vector<std::string>{"schön", "!"});
  CHECK(tokenize("a b", TokenizerKind::whitespace) == std::vector<std::string>{"a", "b"});
}

TEST_CASE("ngram stats pool across the corpus") {
  const std::vector<std::string> corpus = {"a b a b", "a b"};
  const auto stats = corpus_ngram_stats(corpus, 2);
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].order == 1);
  CHECK(stats[0].unique == 2);  // {a, b}
  CHECK(stats[0].total == 6);
  CHECK(stats[1].order == 2);
  CHECK(stats[1].unique == 2);  // {a b, b a}; doc 2's bigram pools into doc 1's
  CHECK(stats[1].total == 4);   // 3 bigrams + 1 bigram
}

TEST_CASE("ngram diversity is the mean of per-order ratios") {
  // Single doc "a b a b": unigrams 2/4, bigrams 2/3, trigrams 2/2, 4-grams 1/1.
  const double expected = (0.5 + 2.0 / 3.0 + 1.0 + 1.0) / 4.0;
  CHECK(ngram_diversity({"a b a b"}) == doctest::Approx(expected).epsilon(1e-12));
  // All-identical corpus is maximally repetitive at order 1.
  const double repeated = ngram_diversity({"a a a a a"});
  CHECK(repeated == doctest::Approx((1.0 / 5.0 + 1.0 / 4.0 + 1.0 / 3.0 + 1.0 / 2.0) / 4.0));
}

TEST_CASE("diversity requires one document long enough for max_n") {
  CHECK_THROWS_AS(ngram_diversity({}), DataError);
  CHECK_THROWS_AS(ngram_diversity({"a b c"}, 4), DataError);  // longest doc: 3 tokens
  CHECK_THROWS_AS(ngram_diversity({"", ""}), DataError);
  CHECK_NOTHROW(ngram_diversity({"a b c d"}, 4));
  CHECK_NOTHROW(ngram_diversity({"a b c", "a b c d e"}, 4));
}

TEST_CASE("perplexity closed forms") {
  CHECK(perplexity_from_logprobs({0.0, 0.0}) == doctest::Approx(1.0));
  const double ln_half = std::log(0.5);
  CHECK(perplexity_from_logprobs({ln_half, ln_half, ln_half}) == doctest::Approx(2.0));
  CHECK(perplexity_from_logprobs({-1.0, -2.0, -3.0}) == doctest::Approx(std::exp(2.0)));
  CHECK_THROWS_AS(perplexity_from_logprobs({}), DataError);
}

TEST_CASE("sentence BLEU on a hand-worked example") {
  // hyp: "the cat sat", ref: "the cat sat down". All 1..3-grams of the
  // hypothesis appear in the reference, so precisions are 1 and only the
  // brevity penalty bites: exp(1 - 4/3).
  const auto hyp = whitespace_tokens("the cat sat");
  const std::vector<std::vector<std::string>> refs = {whitespace_tokens("the cat sat down")};
  CHECK(sentence_bleu(hyp, refs) == doctest::Approx(std::exp(1.0 - 4.0 / 3.0)));

  SUBCASE("longer hypothesis has no brevity penalty") {
    const auto hyp2 = whitespace_tokens("the cat sat down today");
    // p1 = 4/5; p2 = 3/4; p3 = 2/3; p4 = 1/2. BP = 1.
    const double expected =
        std::pow((4.0 / 5.0) * (3.0 / 4.0) * (2.0 / 3.0) * (1.0 / 2.0), 0.25);
    CHECK(sentence_bleu(hyp2, refs) == doctest::Approx(expected));
  }
}

TEST_CASE("zero match counts fall back to epsilon") {
  const auto hyp = whitespace_tokens("x y");
  const std::vector<std::vector<std::string>> refs = {whitespace_tokens("a b")};
  // p1 = eps/2, p2 = eps/1, BP = 1 (equal lengths).
  BleuOptions options;
  options.epsilon = 0.1;
  const double expected = std::sqrt((0.1 / 2.0) * (0.1 / 1.0));
  CHECK(sentence_bleu(hyp, refs, options) == doctest::Approx(expected));
}

TEST_CASE("brevity penalty uses the closest reference, ties to the shorter") {
  const auto hyp = whitespace_tokens("a b a b");  // length 4
  // Reference lengths 3 and 5 are both distance 1; the tie resolves to 3,
  // and a 3-token reference gives BP = 1 (hyp longer).
  const std::vector<std::vector<std::string>> refs = {whitespace_tokens("a b a b a"),
                                                      whitespace_tokens("a b a")};
  // p1 = 4/4, p2 = 3/3, p3 = 2/2, p4 = 1/1 against the 5-token ref via clipping.
  CHECK(sentence_bleu(hyp, refs) == doctest::Approx(1.0));

  // Now both references miss every n-gram; only BP distinguishes closest refs.
  const std::vector<std::vector<std::string>> far = {whitespace_tokens("x x x x x"),
                                                     whitespace_tokens("y y y")};
  BleuOptions options;
  const auto hyp2 = whitespace_tokens("a b a b");
  // Closest lengths: |5-4| = 1, |3-4| = 1 -> pick 3 -> BP = 1.
  const double eps_only =
      std::pow((0.1 / 4.0) * (0.1 / 3.0) * (0.1 / 2.0) * (0.1 / 1.0), 0.25);
  CHECK(sentence_bleu(hyp2, far, options) == doctest::Approx(eps_only));
}

TEST_CASE("orders are capped by hypothesis length") {
  const auto hyp = whitespace_tokens("a b");  // only orders 1..2 participate
  const std::vector<std::vector<std::string>> refs = {whitespace_tokens("a b")};
  CHECK(sentence_bleu(hyp, refs) == doctest::Approx(1.0));
  CHECK(sentence_bleu({}, refs) == 0.0);
  CHECK(sentence_bleu(hyp, {}) == 0.0);
}

TEST_CASE("self-BLEU is 1.0 on identical documents and lower on varied ones") {
  CHECK(self_bleu({"the cat sat on the mat", "the cat sat on the mat",
                   "the cat sat on the mat"}) == doctest::Approx(1.0));
  const double varied = self_bleu(
      {"the cat sat on the mat", "a dog ran across the yard", "birds sing in the tree"});
  CHECK(varied < 0.5);
  CHECK(varied > 0.0);
  CHECK_THROWS_AS(self_bleu({"only one document"}), DataError);
  CHECK_THROWS_AS(self_bleu({}), DataError);
}

TEST_CASE("max_references caps the reference pool in corpus order") {
  // With the cap at 1, each document is scored against only the first other
  // document in corpus order.
  BleuOptions capped;
  capped.max_references = 1;
  const std::vector<std::string> corpus = {"a b c d", "a b c d", "x y z w"};
  // doc0 vs [doc1] -> 1.0; doc1 vs [doc0] -> 1.0; doc2 vs [doc0] -> epsilon floor.
  const double eps_only =
      std::pow((0.1 / 4.0) * (0.1 / 3.0) * (0.1 / 2.0) * (0.1 / 1.0), 0.25);
  CHECK(self_bleu(corpus, capped) == doctest::Approx((1.0 + 1.0 + eps_only) / 3.0));
}
