#pragma once

// Counter-based random number generation (Philox4x32-10).
//
// Every stochastic quantity in the library is drawn from an explicitly keyed
// stream: (seed) -> key, (purpose, substream, trial) -> counter prefix. Streams
// never share counter space, so Monte Carlo results are bit-reproducible for
// any assignment of trials to worker threads. The generator follows the
// published Philox4x32 round function with 10 rounds and is validated against
// the reference known-answer vectors in the unit tests.

#include <array>
#include <cstdint>

#include "isacim/common.hpp"

namespace isacim {

namespace detail {

inline void philox_mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                           std::uint32_t& lo) {
  std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  // One 10-round block: 128-bit counter + 64-bit key -> 128 output bits.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      std::uint32_t hi0, lo0, hi1, lo1;
      detail::philox_mulhilo(kMul0, ctr[0], hi0, lo0);
      detail::philox_mulhilo(kMul1, ctr[2], hi1, lo1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

// Stream purposes. Each (purpose, substream, trial) triple owns an independent
// 2^64-block counter space under a given seed.
enum class StreamPurpose : std::uint32_t {
  generic = 0,
  geometry = 1,
  channel_comm = 2,
  channel_sensor = 3,
  noise = 4,         // substream carries the SNR index
  messages = 5,
  plan = 6,          // precoder / coding-vector draws
  bench_noise = 7,   // benchmark-chain noise, substream carries the SNR index
};

class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, StreamPurpose purpose, std::uint32_t trial = 0,
               std::uint32_t substream = 0)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        hi_{(static_cast<std::uint32_t>(purpose) << 16) | (substream & 0xFFFFu), trial} {}

  std::uint64_t next_u64() {
    if (have_u64_) {
      have_u64_ = false;
      return spare_u64_;
    }
    auto out = next_block();
    spare_u64_ = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
    have_u64_ = true;
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  }

  // Uniform on [0, 1): 53 random mantissa bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1]: safe as a Box-Muller log argument.
  double uniform_pos() {
    return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  }

  double uniform_range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; pairs are cached so scalar and complex
  // draws interleave without waste.
  double gauss() {
    if (have_gauss_) {
      have_gauss_ = false;
      return spare_gauss_;
    }
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * kPi * u2;
    spare_gauss_ = r * std::sin(a);
    have_gauss_ = true;
    return r * std::cos(a);
  }

  // Circularly-symmetric complex Gaussian, unit variance (components N(0,1/2)).
  cxd cgauss() {
    double u1 = uniform_pos();
    double u2 = uniform();
    double r = std::sqrt(-std::log(u1));  // = sqrt(-2 ln u)/sqrt(2)
    double a = 2.0 * kPi * u2;
    return {r * std::cos(a), r * std::sin(a)};
  }

 private:
  std::array<std::uint32_t, 4> next_block() {
    std::array<std::uint32_t, 4> ctr = {static_cast<std::uint32_t>(block_),
                                        static_cast<std::uint32_t>(block_ >> 32), hi_[1],
                                        hi_[0]};
    ++block_;
    return Philox4x32::block(ctr, key_);
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 2> hi_;  // {purpose|substream, trial}
  std::uint64_t block_ = 0;
  std::uint64_t spare_u64_ = 0;
  bool have_u64_ = false;
  double spare_gauss_ = 0.0;
  bool have_gauss_ = false;
};

}  // namespace isacim
