#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace softseq {

namespace detail {

/** SplitMix64 finalizer: a well-mixed 64-bit permutation. */
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

}  // namespace detail

/**
 * Counter-based splittable random stream. The draw sequence is a pure
 * function of (seed, stream_id, counter), so replay is bitwise deterministic
 * and disjoint stream_ids give independent streams regardless of thread
 * scheduling. split(lane) derives a fresh stream keyed by this stream and
 * the lane index, which is how per-sample substreams stay worker-count
 * independent.
 */
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0)
      : key_(detail::mix64(detail::mix64(seed + detail::kGolden) ^
                           detail::mix64(stream_id + 0xD1B54A32D192ED03ull))) {}

  /** Next raw 64-bit draw. */
  std::uint64_t next_u64() {
    counter_ += 1;
    return detail::mix64(key_ + counter_ * detail::kGolden);
  }

  /** Uniform double in [0, 1) with 53 random bits. */
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /** Standard normal via Box-Muller (one spare cached per pair). */
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - next_unit();  // (0, 1], keeps log finite
    const double u2 = next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  /** Independent substream addressed by lane; deterministic in (this, lane). */
  RandomStream split(std::uint64_t lane) const {
    RandomStream out(0, 0);
    out.key_ = detail::mix64(key_ ^ detail::mix64(lane + 0x8CB92BA72F3D8DD7ull));
    out.counter_ = 0;
    out.has_spare_ = false;
    return out;
  }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace softseq
