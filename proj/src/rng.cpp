#include "shiftlens/rng.hpp"

#include <cmath>
#include <numbers>

namespace shiftlens {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

Rng::Rng(std::uint64_t seed) : identity_(seed), state_(seed) {}

Rng::Rng(std::uint64_t identity, std::uint64_t state)
    : identity_(identity), state_(state) {}

Rng Rng::stream(std::string_view tag, std::uint64_t index) const {
  std::uint64_t derived = mix64(identity_ ^ mix64(fnv1a(tag) ^ mix64(index + kGolden)));
  return Rng(derived, derived);
}

std::uint64_t Rng::next_u64() {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  double u1 = 1.0 - uniform();  // (0, 1]
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t bound) {
  // Reject draws from the tail that would bias the modulus.
  std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

std::vector<Index> Rng::sample_without_replacement(Index population, Index k) {
  std::vector<Index> pool(static_cast<std::size_t>(population));
  for (Index i = 0; i < population; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<Index> picked;
  picked.reserve(static_cast<std::size_t>(k));
  for (Index i = 0; i < k && i < population; ++i) {
    std::size_t j = static_cast<std::size_t>(below(static_cast<std::uint64_t>(population - i)));
    std::swap(pool[j], pool[static_cast<std::size_t>(population - 1 - i)]);
    picked.push_back(pool[static_cast<std::size_t>(population - 1 - i)]);
  }
  return picked;
}

}  // namespace shiftlens
