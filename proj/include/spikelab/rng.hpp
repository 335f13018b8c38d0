#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace spikelab {

/// Philox4x32-10 counter-based generator (Salmon et al. 2011). Satisfies
/// UniformRandomBitGenerator with 32-bit output. A stream is fixed by a 64-bit
/// key and the upper 64 bits of the counter, so (seed, replication) pairs map
/// to disjoint sequences.
class Philox {
 public:
  using result_type = std::uint32_t;

  explicit Philox(std::uint64_t seed = 0, std::uint64_t stream = 0) {
    key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    ctr_ = {0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    if (pos_ == 4) {
      block_ = generate(ctr_, key_);
      advance();
      pos_ = 0;
    }
    return block_[pos_++];
  }

  /// Uniform double in [0, 1) from 53 random bits.
  double uniform() {
    const std::uint64_t hi = (*this)() >> 5;
    const std::uint64_t lo = (*this)() >> 6;
    return (static_cast<double>(hi) * 67108864.0 + static_cast<double>(lo)) * (1.0 / 9007199254740992.0);
  }

  static std::array<std::uint32_t, 4> generate(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += 0x9E3779B9u;
      key[1] += 0xBB67AE85u;
    }
    return ctr;
  }

 private:
  void advance() {
    if (++ctr_[0] == 0) ++ctr_[1];
  }

  std::array<std::uint32_t, 2> key_{};
  std::array<std::uint32_t, 4> ctr_{};
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
};

}  // namespace spikelab
