#pragma once

#include <cstdint>

namespace sgdlab {

namespace detail {

// splitmix64 finalizer; full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

}  // namespace detail

/// Generator for one step of one replication. Values are a pure function of
/// the (master seed, replication, step) triple, so draws can be made in any
/// order and from any thread without changing the result.
class StepRng {
 public:
  explicit StepRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  /// Uniform in the open interval (0,1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; the second value of each pair is cached.
  double next_normal();

  /// Rademacher sign, +1 or -1.
  double next_sign() { return (next_u64() >> 63) ? 1.0 : -1.0; }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Counter-based stream keyed by (master seed, replication). Streams for
/// distinct replications are statistically independent; positioning by step
/// index makes replay bit-exact regardless of thread schedule.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t replication)
      : key_(detail::mix64(master_seed ^
                           detail::mix64(replication + 0x6a09e667f3bcc909ull))) {}

  StepRng at_step(std::uint64_t n) const {
    return StepRng(detail::mix64(key_ + detail::mix64(n + 0xbb67ae8584caa73bull)));
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

}  // namespace sgdlab
