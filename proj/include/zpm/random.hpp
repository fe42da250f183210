#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace zpm {

/// Counter-based random stream.  Output `i` is a pure function of
/// (key, i), so a stream can be re-derived anywhere from its key path and the
/// draws it produces never depend on what other streams did.  Substreams are
/// keyed by hashing the parent key with an index.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  explicit RandomStream(std::uint64_t seed) noexcept : key_(mix(seed ^ 0x6a09e667f3bcc908ULL)) {}

  RandomStream substream(std::uint64_t index) const noexcept {
    RandomStream s(0);
    s.key_ = mix(key_ ^ mix(index + 0x9e3779b97f4a7c15ULL));
    return s;
  }

  RandomStream substream(std::initializer_list<std::uint64_t> path) const noexcept {
    RandomStream s = *this;
    for (auto id : path) s = s.substream(id);
    return s;
  }

  result_type operator()() noexcept { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform double on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Named substream tags; the numeric values are part of the reproducibility
/// contract and must not be renumbered.
namespace stream_tag {
inline constexpr std::uint64_t kSignalPulse = 1;
inline constexpr std::uint64_t kSignalBackground = 2;
inline constexpr std::uint64_t kBackgroundRun = 3;
inline constexpr std::uint64_t kProtectionStage = 4;
inline constexpr std::uint64_t kDetector = 5;
}  // namespace stream_tag

}  // namespace zpm
