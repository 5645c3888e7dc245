#include "mvdwls/rng.hpp"

namespace mvdwls::rng {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) noexcept {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

}  // namespace

Counter philox4x32(Counter ctr, Key key) noexcept {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

Stream::Stream(std::uint64_t seed, std::uint64_t replicate, Purpose purpose) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      base_{0u, static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(replicate),
            static_cast<std::uint32_t>(replicate >> 32)} {}

Stream::result_type Stream::operator()() noexcept {
  if (used_ == 4) {
    Counter ctr = base_;
    ctr[0] = block_++;
    buffer_ = philox4x32(ctr, key_);
    used_ = 0;
  }
  return buffer_[static_cast<std::size_t>(used_++)];
}

double Stream::uniform01() noexcept {
  const std::uint64_t hi = (*this)();
  const std::uint64_t lo = (*this)();
  const std::uint64_t bits = ((hi << 32) | lo) >> 11;
  return static_cast<double>(bits) * 0x1.0p-53;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replicate, Purpose purpose) noexcept {
  Stream s(seed, replicate, purpose);
  const std::uint64_t hi = s();
  return (hi << 32) | s();
}

}  // namespace mvdwls::rng
