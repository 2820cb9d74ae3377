#include "pforge/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "pforge/errors.hpp"
#include "pforge/rng.hpp"

using namespace pforge;

namespace {

PairedExample example(const std::string& id, const std::string& lang) {
  PairedExample ex;
  ex.prompt.id = "n-" + lang + "-" + id;
  ex.prompt.lang = lang;
  ex.prompt.stage = Stage::naturalized;
  ex.prompt.text = "prompt " + id;
  ex.prompt.parent_id = "t-" + lang + "-" + id;
  ex.prompt.seed_id = "s-en-" + id;
  ex.prompt.created_at = "1970-01-01T00:00:00Z";
  ex.completion.id = "y-n-" + lang + "-" + id;
  ex.completion.prompt_id = ex.prompt.id;
  ex.completion.lang = lang;
  ex.completion.text = "completion " + id;
  ex.completion.backend_id = "mock";
  return ex;
}

std::vector<PairedExample> pool_of(std::size_t n, const std::string& lang,
                                   const std::string& tag) {
  std::vector<PairedExample> pool;
  for (std::size_t i = 0; i < n; ++i) {
    pool.push_back(example(tag + std::to_string(i), lang));
  }
  return pool;
}

std::vector<MixtureComponent> fifty_fifty() {
  return {{"cultural", 0.5}, {"difficulty", 0.5}};
}

}  // namespace

TEST_CASE("largest remainder on hand-worked vectors") {
  CHECK(apportion_largest_remainder({0.5, 0.5}, 10001) ==
        std::vector<std::size_t>{5001, 5000});
  CHECK(apportion_largest_remainder({0.5, 0.5}, 10000) ==
        std::vector<std::size_t>{5000, 5000});
  CHECK(apportion_largest_remainder({1.0 / 3, 1.0 / 3, 1.0 / 3}, 10) ==
        std::vector<std::size_t>{4, 3, 3});
  CHECK(apportion_largest_remainder({0.6, 0.4}, 5) == std::vector<std::size_t>{3, 2});
  // Leftover goes to the largest fractional parts, not the largest shares.
  CHECK(apportion_largest_remainder({0.5, 0.25, 0.25}, 7) ==
        std::vector<std::size_t>{3, 2, 2});
  CHECK(apportion_largest_remainder({1.0}, 17) == std::vector<std::size_t>{17});
  CHECK(apportion_largest_remainder({0.7, 0.3}, 0) == std::vector<std::size_t>{0, 0});
}

TEST_CASE("apportionment validates its input") {
  CHECK_THROWS_AS(apportion_largest_remainder({}, 10), DataError);
  CHECK_THROWS_AS(apportion_largest_remainder({0.5, 0.4}, 10), DataError);
  CHECK_THROWS_AS(apportion_largest_remainder({0.7, 0.5}, 10), DataError);
  CHECK_THROWS_AS(apportion_largest_remainder({1.2, -0.2}, 10), DataError);
}

TEST_CASE("apportionment is exact and within one of the ideal share") {
  Rng rng(7);
  for (int round = 0; round < 200; ++round) {
    const std::size_t k = 1 + rng.below(6);
    std::vector<double> weights(k);
    double sum = 0.0;
    for (auto& w : weights) {
      w = static_cast<double>(1 + rng.below(100));
      sum += w;
    }
    for (auto& w : weights) w /= sum;
    const std::size_t total = rng.below(5000);
    const auto counts = apportion_largest_remainder(weights, total);
    REQUIRE(counts.size() == k);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double exact = weights[i] * static_cast<double>(total);
      CHECK(static_cast<double>(counts[i]) >= std::floor(exact) - 1e-9);
      CHECK(static_cast<double>(counts[i]) <= std::floor(exact) + 1.0 + 1e-9);
      assigned += counts[i];
    }
    CHECK(assigned == total);
  }
}

TEST_CASE("planning a fixed total checks availability per component") {
  const auto plan = plan_mixture(fifty_fifty(), {6, 5}, 10);
  CHECK(plan.total == 10);
  CHECK(plan.counts == std::vector<std::size_t>{5, 5});

  CHECK_THROWS_WITH_AS(plan_mixture(fifty_fifty(), {6, 4}, 10),
                       doctest::Contains("difficulty"), DataError);
  CHECK_THROWS_AS(plan_mixture(fifty_fifty(), {6}, 10), DataError);
}

TEST_CASE("planning 'all' finds the largest feasible total") {
  // Odd totals put the spare unit on the first component, so 11 fits [7, 5].
  const auto generous = plan_mixture(fifty_fifty(), {7, 5}, std::nullopt);
  CHECK(generous.total == 11);
  CHECK(generous.counts == std::vector<std::size_t>{6, 5});

  const auto tight = plan_mixture(fifty_fifty(), {5, 5}, std::nullopt);
  CHECK(tight.total == 10);
  CHECK(tight.counts == std::vector<std::size_t>{5, 5});

  const auto skewed =
      plan_mixture({{"a", 0.9}, {"b", 0.1}}, {100, 3}, std::nullopt);
  CHECK(skewed.counts[1] <= 3);
  CHECK(skewed.counts[0] + skewed.counts[1] == skewed.total);
  // One more unit would overflow one of the pools.
  const auto counts_up =
      apportion_largest_remainder({0.9, 0.1}, skewed.total + 1);
  CHECK((counts_up[0] > 100 || counts_up[1] > 3));

  const auto empty_pool = plan_mixture(fifty_fifty(), {0, 9}, std::nullopt);
  CHECK(empty_pool.total == 0);
}

TEST_CASE("mixing draws the planned counts and shuffles deterministically") {
  const auto cultural = pool_of(6, "de", "c");
  const auto difficulty = pool_of(4, "de", "d");
  MixtureOptions options;
  options.size = 8;
  options.seed = 2024;

  const MixtureResult first = mix_datasets(fifty_fifty(), {cultural, difficulty}, options);
  CHECK(first.examples.size() == 8);
  CHECK(first.per_component.at("cultural") == 4);
  CHECK(first.per_component.at("difficulty") == 4);

  std::set<std::string> ids;
  std::size_t from_cultural = 0;
  for (const auto& ex : first.examples) {
    CHECK(ids.insert(ex.completion.id).second);  // duplicate-free
    if (ex.completion.id.rfind("y-n-de-c", 0) == 0) ++from_cultural;
  }
  CHECK(from_cultural == 4);

  const MixtureResult again = mix_datasets(fifty_fifty(), {cultural, difficulty}, options);
  REQUIRE(again.examples.size() == first.examples.size());
  for (std::size_t i = 0; i < first.examples.size(); ++i) {
    CHECK(again.examples[i].completion.id == first.examples[i].completion.id);
  }

  MixtureOptions other = options;
  other.seed = 2025;
  const MixtureResult reseeded =
      mix_datasets(fifty_fifty(), {cultural, difficulty}, other);
  bool any_difference = false;
  for (std::size_t i = 0; i < first.examples.size(); ++i) {
    if (reseeded.examples[i].completion.id != first.examples[i].completion.id) {
      any_difference = true;
    }
  }
  CHECK(any_difference);
}

TEST_CASE("mixing everything uses the full feasible pool") {
  const auto cultural = pool_of(5, "de", "c");
  const auto difficulty = pool_of(3, "de", "d");
  MixtureOptions options;
  options.seed = 1;
  const MixtureResult all = mix_datasets(fifty_fifty(), {cultural, difficulty}, options);
  // Largest feasible 50/50 total given pools of 5 and 3 is 7 ([4, 3]).
  CHECK(all.examples.size() == 7);
  CHECK(all.per_component.at("cultural") == 4);
  CHECK(all.per_component.at("difficulty") == 3);
}

TEST_CASE("a fixed request beyond the pools is refused") {
  const auto cultural = pool_of(3, "de", "c");
  const auto difficulty = pool_of(3, "de", "d");
  MixtureOptions options;
  options.size = 8;
  CHECK_THROWS_AS(mix_datasets(fifty_fifty(), {cultural, difficulty}, options), DataError);
}

TEST_CASE("language balancing splits each component's quota evenly") {
  std::vector<PairedExample> pool;
  for (const auto& ex : pool_of(5, "de", "p")) pool.push_back(ex);
  for (const auto& ex : pool_of(5, "es", "p")) pool.push_back(ex);
  for (const auto& ex : pool_of(5, "cs", "p")) pool.push_back(ex);

  MixtureOptions options;
  options.size = 8;
  options.seed = 5;
  options.per_language_balance = true;
  const MixtureResult result = mix_datasets({{"only", 1.0}}, {pool}, options);
  CHECK(result.examples.size() == 8);
  std::map<std::string, std::size_t> by_lang;
  for (const auto& ex : result.examples) ++by_lang[ex.completion.lang];
  // 8 over {cs, de, es}: base 2 each, remainder 2 to the earlier sorted codes.
  CHECK(by_lang.at("cs") == 3);
  CHECK(by_lang.at("de") == 3);
  CHECK(by_lang.at("es") == 2);

  SUBCASE("a language too small for its share is an error") {
    std::vector<PairedExample> lopsided;
    for (const auto& ex : pool_of(6, "de", "q")) lopsided.push_back(ex);
    for (const auto& ex : pool_of(1, "es", "q")) lopsided.push_back(ex);
    MixtureOptions tight;
    tight.size = 6;
    tight.per_language_balance = true;
    CHECK_THROWS_WITH_AS(mix_datasets({{"only", 1.0}}, {lopsided}, tight),
                         doctest::Contains("es"), DataError);
  }
}
