#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "shiftlens/common.hpp"

namespace shiftlens {

// Subset of the player set {0..players-1}, stored as packed 64-bit words so
// games are not limited to 64 players.
class Coalition {
 public:
  Coalition() = default;
  explicit Coalition(int players)
      : players_(players), words_(static_cast<std::size_t>((players + 63) / 64), 0) {}

  static Coalition full(int players) {
    Coalition c(players);
    for (int i = 0; i < players; ++i) c.add(i);
    return c;
  }

  // Low `players` bits of `mask`; convenient for small games.
  static Coalition from_bits(std::uint64_t mask, int players) {
    Coalition c(players);
    for (int i = 0; i < players && i < 64; ++i)
      if (mask >> i & 1) c.add(i);
    return c;
  }

  int players() const { return players_; }

  bool contains(int i) const {
    return words_[static_cast<std::size_t>(i >> 6)] >> (i & 63) & 1;
  }

  void add(int i) { words_[static_cast<std::size_t>(i >> 6)] |= std::uint64_t{1} << (i & 63); }
  void remove(int i) { words_[static_cast<std::size_t>(i >> 6)] &= ~(std::uint64_t{1} << (i & 63)); }

  Coalition with(int i) const {
    Coalition c = *this;
    c.add(i);
    return c;
  }

  Coalition complemented() const {
    Coalition c(players_);
    for (std::size_t w = 0; w < words_.size(); ++w) c.words_[w] = ~words_[w];
    int tail = players_ & 63;
    if (tail != 0) c.words_.back() &= (std::uint64_t{1} << tail) - 1;
    return c;
  }

  int size() const {
    int total = 0;
    for (std::uint64_t w : words_) total += __builtin_popcountll(w);
    return total;
  }

  bool empty() const { return size() == 0; }

  std::vector<int> members() const {
    std::vector<int> out;
    for (int i = 0; i < players_; ++i)
      if (contains(i)) out.push_back(i);
    return out;
  }

  const std::vector<std::uint64_t>& words() const { return words_; }

  bool operator==(const Coalition& other) const {
    return players_ == other.players_ && words_ == other.words_;
  }

  // Lexicographic on words; gives a deterministic total order for std::map.
  bool operator<(const Coalition& other) const {
    if (players_ != other.players_) return players_ < other.players_;
    return words_ < other.words_;
  }

 private:
  int players_ = 0;
  std::vector<std::uint64_t> words_;
};

struct CoalitionHash {
  std::size_t operator()(const Coalition& c) const {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ static_cast<std::uint64_t>(c.players());
    for (std::uint64_t w : c.words()) {
      h ^= w + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
    }
    return static_cast<std::size_t>(h);
  }
};

}  // namespace shiftlens
