#include "pforge/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "pforge/errors.hpp"
#include "pforge/rng.hpp"

namespace pforge {

std::vector<std::size_t> apportion_largest_remainder(const std::vector<double>& proportions,
                                                     std::size_t total) {
  if (proportions.empty()) throw DataError("apportionment needs at least one proportion");
  double sum = 0.0;
  for (double p : proportions) {
    if (p < 0.0) throw DataError("negative proportion");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw DataError("proportions sum to " + std::to_string(sum) + ", expected 1");
  }

  std::vector<std::size_t> counts(proportions.size());
  std::vector<double> remainders(proportions.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < proportions.size(); ++i) {
    const double exact = proportions[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = exact - std::floor(exact);
    assigned += counts[i];
  }

  // Hand the leftover units to the largest remainders; equal remainders are
  // resolved by component order so odd splits stay reproducible.
  std::vector<std::size_t> order(proportions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < total; ++k) {
    ++counts[order[k % order.size()]];
    ++assigned;
  }
  return counts;
}

MixturePlan plan_mixture(const std::vector<MixtureComponent>& components,
                         const std::vector<std::size_t>& available,
                         std::optional<std::size_t> requested) {
  if (components.size() != available.size()) {
    throw DataError("mixture: component/pool count mismatch");
  }
  std::vector<double> proportions;
  proportions.reserve(components.size());
  for (const auto& c : components) proportions.push_back(c.proportion);

  std::size_t total;
  if (requested) {
    total = *requested;
  } else {
    // "all": the largest total whose apportionment fits every pool. Any
    // feasible total satisfies floor(p_i * total) <= available_i, i.e.
    // total < (available_i + 1) / p_i for every component, which bounds the
    // downward search; largest-remainder rounding decides the exact maximum.
    double bound = 0.0;
    bool first = true;
    for (std::size_t i = 0; i < components.size(); ++i) {
      if (components[i].proportion <= 0.0) continue;
      const double limit =
          static_cast<double>(available[i] + 1) / components[i].proportion;
      if (first || limit < bound) {
        bound = limit;
        first = false;
      }
    }
    if (first) throw DataError("mixture: no positive proportions");
    total = static_cast<std::size_t>(std::floor(bound)) + 1;
    while (total > 0) {
      const auto counts = apportion_largest_remainder(proportions, total);
      bool feasible = true;
      for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > available[i]) {
          feasible = false;
          break;
        }
      }
      if (feasible) break;
      --total;
    }
  }

  MixturePlan plan;
  plan.total = total;
  plan.counts = apportion_largest_remainder(proportions, total);
  for (std::size_t i = 0; i < plan.counts.size(); ++i) {
    if (plan.counts[i] > available[i]) {
      throw DataError("mixture: component \"" + components[i].name + "\" needs " +
                      std::to_string(plan.counts[i]) + " records but only " +
                      std::to_string(available[i]) + " are available");
    }
  }
  return plan;
}

namespace {

// Draws `quota` examples from one component pool without replacement. With
// language balancing, the quota is split evenly across the pool's languages
// (earlier languages in sorted order absorb the remainder).
std::vector<PairedExample> draw_component(const std::vector<PairedExample>& pool,
                                          std::size_t quota, bool per_language_balance,
                                          Rng& rng) {
  if (!per_language_balance) {
    std::vector<PairedExample> out;
    out.reserve(quota);
    for (std::size_t idx : rng.sample_indices(pool.size(), quota)) {
      out.push_back(pool[idx]);
    }
    return out;
  }

  std::map<std::string, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    by_lang[pool[i].prompt.lang].push_back(i);
  }
  const std::size_t n_langs = by_lang.size();
  const std::size_t base = quota / n_langs;
  std::size_t remainder = quota % n_langs;

  std::vector<PairedExample> out;
  out.reserve(quota);
  for (auto& [lang, indices] : by_lang) {
    std::size_t want = base + (remainder > 0 ? 1 : 0);
    if (remainder > 0) --remainder;
    if (want > indices.size()) {
      throw DataError("mixture: language \"" + lang + "\" has " +
                      std::to_string(indices.size()) + " examples, balanced draw needs " +
                      std::to_string(want));
    }
    for (std::size_t pick : rng.sample_indices(indices.size(), want)) {
      out.push_back(pool[indices[pick]]);
    }
  }
  return out;
}

}  // namespace

MixtureResult mix_datasets(const std::vector<MixtureComponent>& components,
                           const std::vector<std::vector<PairedExample>>& pools,
                           const MixtureOptions& options) {
  std::vector<std::size_t> available;
  available.reserve(pools.size());
  for (const auto& pool : pools) available.push_back(pool.size());
  const MixturePlan plan = plan_mixture(components, available, options.size);

  Rng rng(options.seed);
  MixtureResult result;
  result.examples.reserve(plan.total);
  for (std::size_t i = 0; i < components.size(); ++i) {
    auto drawn =
        draw_component(pools[i], plan.counts[i], options.per_language_balance, rng);
    result.per_component[components[i].name] = drawn.size();
    for (auto& ex : drawn) result.examples.push_back(std::move(ex));
  }
  rng.shuffle(result.examples);

  std::set<std::string> ids;
  for (const auto& ex : result.examples) {
    if (!ids.insert(ex.completion.id).second) {
      throw DataError("mixture drew duplicate example " + ex.completion.id);
    }
  }
  return result;
}

}  // namespace pforge
