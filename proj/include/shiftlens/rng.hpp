#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "shiftlens/common.hpp"

namespace shiftlens {

// Deterministic 64-bit generator (splitmix64 steps) with named sub-streams.
//
// A stream is identified by (global seed, tag, index). Derivation depends only
// on those three values, never on how many draws other streams have made, so
// results are identical under any thread count and on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Child generator for an independent call site. `tag` names the use site
  // ("shapley.kernel", "model.epoch", ...), `index` distinguishes instances.
  Rng stream(std::string_view tag, std::uint64_t index = 0) const;

  std::uint64_t next_u64();

  // Uniform in [0, 1), 53-bit mantissa.
  double uniform();

  // Standard normal via Box-Muller; two uniforms per draw, no cached spare.
  double normal();

  // Uniform integer in [0, bound), unbiased (rejection). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(values[i - 1], values[j]);
    }
  }

  // First k positions of a shuffled [0, population) range, in draw order.
  std::vector<Index> sample_without_replacement(Index population, Index k);

 private:
  Rng(std::uint64_t identity, std::uint64_t state);

  std::uint64_t identity_;  // stream identity, fixed at construction
  std::uint64_t state_;     // advances with each draw
};

}  // namespace shiftlens
