#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pforge/corpus.hpp"

namespace pforge {

struct MixtureComponent {
  std::string name;       // manifest/dataset label, e.g. "cultural"
  double proportion = 0;  // proportions across components must sum to 1
};

// Integer apportionment of `total` across proportions by largest remainder:
// floor everything, then hand out the leftover units to the largest
// fractional parts, breaking ties by component order. Sums to `total`
// exactly and never goes negative.
std::vector<std::size_t> apportion_largest_remainder(const std::vector<double>& proportions,
                                                     std::size_t total);

struct MixturePlan {
  std::vector<std::size_t> counts;  // aligned with components
  std::size_t total = 0;
};

// Resolves requested size against availability. `requested` empty means
// "all": the largest total that keeps the exact proportions feasible given
// each component's pool size. Throws DataError when a fixed request cannot
// be met.
MixturePlan plan_mixture(const std::vector<MixtureComponent>& components,
                         const std::vector<std::size_t>& available,
                         std::optional<std::size_t> requested);

struct MixtureOptions {
  std::optional<std::size_t> size;  // nullopt = "all"
  bool per_language_balance = false;
  std::uint64_t seed = 0;
};

struct MixtureResult {
  std::vector<PairedExample> examples;
  // name -> drawn count, for the manifest's source bookkeeping.
  std::map<std::string, std::size_t> per_component;
};

// Draws the planned counts from each component without replacement using the
// shared seeded RNG; with per_language_balance, each component's quota is
// split equally across its languages (remainder to earlier languages in
// sorted order). The combined result is shuffled with the same RNG so the
// output interleaves components deterministically, and it never contains the
// same completion id twice.
MixtureResult mix_datasets(const std::vector<MixtureComponent>& components,
                           const std::vector<std::vector<PairedExample>>& pools,
                           const MixtureOptions& options);

}  // namespace pforge
