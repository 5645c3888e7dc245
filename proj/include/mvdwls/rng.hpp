#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace mvdwls::rng {

/// Philox4x32-10 block function (Salmon et al., SC'11): a keyed bijection on
/// 128-bit counters.
using Counter = std::array<std::uint32_t, 4>;
using Key = std::array<std::uint32_t, 2>;

Counter philox4x32(Counter ctr, Key key) noexcept;

/// What a stream is used for. Distinct purposes of the same replicate never
/// share random numbers.
enum class Purpose : std::uint32_t {
  Design = 1,
  Noise = 2,
  Optimizer = 3,
  Split = 4,
  Test = 5,
};

/// UniformRandomBitGenerator over Philox. The stream identity (seed,
/// replicate, purpose) fixes the key and the upper counter words; the lower
/// counter word walks the stream. Streams are independent of evaluation order.
class Stream {
 public:
  using result_type = std::uint32_t;

  Stream(std::uint64_t seed, std::uint64_t replicate, Purpose purpose) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept;

 private:
  Key key_;
  Counter base_;
  std::uint32_t block_ = 0;
  Counter buffer_{};
  int used_ = 4;
};

/// Derives a 64-bit seed for a child stream (e.g. the optimizer seed of one
/// replicate) from a parent identity.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replicate, Purpose purpose) noexcept;

}  // namespace mvdwls::rng
