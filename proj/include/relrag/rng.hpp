#pragma once

// Counter-based random streams.
//
// Every random decision in the library is drawn from a Stream whose key is
// derived from the run's root seed plus a tuple of identifiers (trial, round,
// vertex pair, ...). Outputs therefore depend only on those identifiers and
// never on iteration order or on how trials are spread across threads.
//
// The block function is Philox4x32-10 (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). Uniform doubles use the top 53 bits, and no
// std:: distribution is involved, so streams are identical across platforms.

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>

namespace relrag::rng {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key of a child stream: hash-chains the parent key with each tag.
inline constexpr std::uint64_t derive(std::uint64_t parent,
                                      std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = splitmix64(parent);
  for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t + 0x632BE59BD9B4E019ULL));
  return h;
}

// Domain tags keep streams used for different purposes apart.
inline constexpr std::uint64_t kTagJudge = 0x4A55444745ULL;      // pair judgments
inline constexpr std::uint64_t kTagSample = 0x53414D504CULL;     // context draws
inline constexpr std::uint64_t kTagTrial = 0x545249414CULL;      // simulation trials
inline constexpr std::uint64_t kTagRoles = 0x524F4C4553ULL;      // role assignment noise
inline constexpr std::uint64_t kTagAggregate = 0x4147475245ULL;  // context-level judge

using Block = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

inline constexpr Block philox4x32_10(Block ctr, Key key) noexcept {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
    const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

/// Sequential view over one keyed substream. Cheap to construct; copy freely.
class Stream {
 public:
  explicit constexpr Stream(std::uint64_t key) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  constexpr std::uint64_t next_u64() noexcept {
    if (cached_ == 0) {
      const Block out = philox4x32_10(
          {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), 0, 0},
          key_);
      ++counter_;
      buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
      buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
      cached_ = 2;
    }
    return buffer_[2 - cached_--];
  }

  /// Uniform in [0, 1).
  constexpr double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// True with probability p; p <= 0 never fires and p >= 1 always does.
  constexpr bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Index drawn from unnormalized cumulative weights (non-decreasing, last > 0).
  /// Zero-weight entries are never returned.
  std::size_t categorical(std::span<const double> cumulative) noexcept {
    const double total = cumulative.back();
    const double x = uniform() * total;
    std::size_t lo = 0, hi = cumulative.size() - 1;
    while (lo < hi) {  // first index with cumulative > x
      const std::size_t mid = lo + (hi - lo) / 2;
      if (cumulative[mid] > x) hi = mid; else lo = mid + 1;
    }
    // Rounding can leave x at the total; step back to the last positive weight.
    while (lo > 0 && cumulative[lo] == cumulative[lo - 1]) --lo;
    return lo;
  }

 private:
  Key key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int cached_ = 0;
};

}  // namespace relrag::rng
