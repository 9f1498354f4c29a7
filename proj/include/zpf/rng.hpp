#pragma once

#include <cstdint>
#include <limits>

namespace zpf {

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Counter-based stream keyed by (seed, trial_index): the n-th draw is a pure
/// function of (seed, trial_index, n), so trials can be evaluated in any order
/// on any worker. Satisfies UniformRandomBitGenerator.
class TrialStream {
 public:
  using result_type = std::uint64_t;

  TrialStream(std::uint64_t seed, std::uint64_t trial_index) noexcept
      : key_(detail::splitmix64(detail::splitmix64(seed) ^
                                detail::splitmix64(trial_index + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    return detail::splitmix64(key_ + 0x9e3779b97f4a7c15ULL * (++counter_));
  }

  /// Uniform double in the open interval (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace zpf
