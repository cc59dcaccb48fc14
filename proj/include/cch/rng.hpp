#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace cch {

/// Finalizer of the splitmix64 generator. Bijective on 64-bit words, used
/// both for stream advancement and for key derivation.
inline std::uint64_t splitmix64_mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Folds a list of identifiers into a single stream key. Order-sensitive,
/// so (a, b) and (b, a) give unrelated streams.
inline std::uint64_t derive_key(std::initializer_list<std::uint64_t> ids) {
  std::uint64_t key = 0x243f6a8885a308d3ULL;  // pi digits; arbitrary nonzero start
  for (std::uint64_t id : ids) {
    key = splitmix64_mix(key ^ splitmix64_mix(id + 0x9e3779b97f4a7c15ULL));
  }
  return key;
}

/// Deterministic pseudo-random stream with a splitmix64 core.
///
/// Every random quantity in the library is drawn from a stream constructed
/// from explicit identifiers (seed, stage tag, grid index, ...), which makes
/// all sampling reproducible bit for bit regardless of evaluation order or
/// thread count.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : state_(key), has_spare_(false), spare_(0.0) {}

  static RandomStream from_ids(std::initializer_list<std::uint64_t> ids) {
    return RandomStream(derive_key(ids));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64_mix(state_);
  }

  /// Uniform double in (0, 1]. The open lower end keeps log() finite below.
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform double in [0, 1).
  double next_unit_halfopen() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal deviate via the Box-Muller transform. The paired
  /// deviate is cached, so draws come in deterministic couples.
  double next_gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_unit();
    const double u2 = next_unit_halfopen();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::uint64_t state_;
  bool has_spare_;
  double spare_;
};

/// Stage tags keep the streams that feed each sampling stage independent.
/// Values are part of the determinism contract: changing them changes every
/// dataset, so they are fixed here once.
namespace stream_tag {
inline constexpr std::uint64_t labels = 1;          // latent responses y
inline constexpr std::uint64_t student_noise = 2;   // x2 conditional noise
inline constexpr std::uint64_t teacher_noise = 3;   // x1 conditional noise
inline constexpr std::uint64_t injected_noise = 4;  // post-hoc degradation of x1
inline constexpr std::uint64_t ksg_jitter = 5;      // tie-breaking jitter
inline constexpr std::uint64_t train = 10;          // harness roles
inline constexpr std::uint64_t test = 11;
inline constexpr std::uint64_t noise_train = 12;
inline constexpr std::uint64_t noise_test = 13;
}  // namespace stream_tag

}  // namespace cch
