#pragma once

// Counter-based random streams.
//
// Every random draw in the library comes from a Generator bound to a Stream.
// A Stream is a 64-bit key; child streams are derived by hashing (parent key,
// child index), so stream(seed, r, k) is a pure function of its path and the
// numbers a replicate sees never depend on how work was scheduled.

#include <array>
#include <cstdint>

namespace wustat {

/// Philox4x32-10 block function (Salmon et al., Random123).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// SplitMix64 finalizer; used only for key derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Position in the stream tree. Cheap to copy.
class Stream {
 public:
  explicit constexpr Stream(std::uint64_t seed, std::uint64_t domain = 0) noexcept
      : key_(mix64(mix64(seed) ^ mix64(~domain))) {}

  constexpr Stream child(std::uint64_t index) const noexcept {
    return Stream(Raw{}, mix64(key_ ^ mix64(index * 0xD1B54A32D192ED03ull + 1)));
  }

  constexpr std::uint64_t key() const noexcept { return key_; }

  friend constexpr bool operator==(const Stream&, const Stream&) = default;

 private:
  struct Raw {};
  constexpr Stream(Raw, std::uint64_t key) noexcept : key_(key) {}
  std::uint64_t key_;
};

/// Sequential generator over one stream. Satisfies UniformRandomBitGenerator.
class Generator {
 public:
  using result_type = std::uint64_t;

  explicit Generator(const Stream& stream) noexcept
      : key_{static_cast<std::uint32_t>(stream.key()),
             static_cast<std::uint32_t>(stream.key() >> 32)} {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }

  result_type operator()() noexcept {
    if (slot_ == 2) refill();
    return buffer_[slot_++];
  }

  /// Uniform on (0, 1].
  double uniform() noexcept { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

  /// Uniform integer in [0, bound), unbiased (Lemire).
  std::uint64_t below(std::uint64_t bound) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Standard normal (Box-Muller, pairs cached).
  double normal() noexcept;

  /// Gamma(shape, 1) by Marsaglia-Tsang; shape > 0.
  double gamma(double shape) noexcept;

  double chi_square(double df) noexcept { return 2.0 * gamma(0.5 * df); }

 private:
  void refill() noexcept {
    const auto out = Philox4x32::block(
        {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32), 0, 0},
        key_);
    ++counter_;
    buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
    buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
    slot_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t counter_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int slot_ = 2;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace wustat
