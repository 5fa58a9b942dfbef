#pragma once

#include <cstdint>

namespace cwl {

namespace detail {

// SplitMix64 constants (Steele/Lea/Flood; finalizer is Stafford's mix13).
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kStreamSalt = 0x1F123BB5159A55E5ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based 64-bit generator (SplitMix64). A stream is addressed by
/// (seed, stream_id); distinct ids give statistically independent sequences,
/// so per-trial or per-task substreams can be consumed in any order; serial
/// and parallel runs produce identical results.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : state_(detail::mix64(
            seed ^ detail::mix64(stream_id * detail::kGolden + detail::kStreamSalt))) {}

  std::uint64_t next() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  /// Uniform double in [0, 1), 53 random bits.
  double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool next_bernoulli(double p) { return next_unit() < p; }

  /// Equiprobable ±1 from the top bit.
  std::int8_t next_sign() { return (next() >> 63) ? std::int8_t{1} : std::int8_t{-1}; }

 private:
  std::uint64_t state_;
};

/// Hashes (seed, tag) into a fresh seed for a nested family of substreams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return detail::mix64(seed + detail::kGolden * detail::mix64(tag + detail::kStreamSalt));
}

}  // namespace cwl
