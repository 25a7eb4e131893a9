#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "isacim/rng.hpp"

using namespace isacim;

// Known-answer vectors for the 10-round counter-based generator, from the
// reference implementation's published test vectors.
TEST_CASE("counter generator known answers", "[rng]") {
  {
    std::array<std::uint32_t, 4> out =
        Philox4x32::block({0u, 0u, 0u, 0u}, {0u, 0u});
    REQUIRE(out[0] == 0x6627e8d5u);
    REQUIRE(out[1] == 0xe169c58du);
    REQUIRE(out[2] == 0xbc57ac4cu);
    REQUIRE(out[3] == 0x9b00dbd8u);
  }
  {
    std::array<std::uint32_t, 4> out = Philox4x32::block(
        {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
        {0xffffffffu, 0xffffffffu});
    REQUIRE(out[0] == 0x408f276du);
    REQUIRE(out[1] == 0x41c83b0eu);
    REQUIRE(out[2] == 0xa20bc7c6u);
    REQUIRE(out[3] == 0x6d5451fdu);
  }
  {
    std::array<std::uint32_t, 4> out = Philox4x32::block(
        {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
        {0xa4093822u, 0x299f31d0u});
    REQUIRE(out[0] == 0xd16cfe09u);
    REQUIRE(out[1] == 0x94fdccebu);
    REQUIRE(out[2] == 0x5001e420u);
    REQUIRE(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("streams are deterministic and keyed by their coordinates", "[rng]") {
  PhiloxStream a(42, StreamPurpose::noise, 7, 3);
  PhiloxStream b(42, StreamPurpose::noise, 7, 3);
  for (int i = 0; i < 64; ++i) REQUIRE(a.next_u64() == b.next_u64());

  // Any change of coordinate must decorrelate the stream immediately.
  PhiloxStream base(42, StreamPurpose::noise, 7, 3);
  PhiloxStream other_trial(42, StreamPurpose::noise, 8, 3);
  PhiloxStream other_sub(42, StreamPurpose::noise, 7, 4);
  PhiloxStream other_purpose(42, StreamPurpose::messages, 7, 3);
  PhiloxStream other_seed(43, StreamPurpose::noise, 7, 3);
  std::uint64_t v = base.next_u64();
  REQUIRE(v != other_trial.next_u64());
  REQUIRE(v != other_sub.next_u64());
  REQUIRE(v != other_purpose.next_u64());
  REQUIRE(v != other_seed.next_u64());
}

TEST_CASE("stream draws are unique across a block of coordinates", "[rng]") {
  std::set<std::uint64_t> seen;
  for (int trial = 0; trial < 16; ++trial)
    for (int sub = 0; sub < 16; ++sub) {
      PhiloxStream s(314159, StreamPurpose::channel_comm, trial, sub);
      for (int i = 0; i < 4; ++i) seen.insert(s.next_u64());
    }
  REQUIRE(seen.size() == 16u * 16u * 4u);
}

TEST_CASE("uniform draws have the right range and moments", "[rng]") {
  PhiloxStream s(1, StreamPurpose::generic, 0, 0);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double u = s.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    sum2 += u * u;
  }
  double mean = sum / n;
  double var = sum2 / n - mean * mean;
  REQUIRE(std::abs(mean - 0.5) < 0.005);
  REQUIRE(std::abs(var - 1.0 / 12.0) < 0.002);
}

TEST_CASE("gaussian draws are standard normal", "[rng]") {
  PhiloxStream s(2, StreamPurpose::generic, 0, 0);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    double g = s.gauss();
    sum += g;
    sum2 += g * g;
  }
  REQUIRE(std::abs(sum / n) < 0.01);
  REQUIRE(std::abs(sum2 / n - 1.0) < 0.02);
}

TEST_CASE("complex gaussian draws have unit total variance", "[rng]") {
  PhiloxStream s(3, StreamPurpose::generic, 0, 0);
  const int n = 200000;
  double p = 0.0;
  cxd acc = 0.0;
  for (int i = 0; i < n; ++i) {
    cxd z = s.cgauss();
    p += std::norm(z);
    acc += z;
  }
  REQUIRE(std::abs(p / n - 1.0) < 0.02);
  REQUIRE(std::abs(acc) / n < 0.01);
}

TEST_CASE("uniform_range maps onto the requested interval", "[rng]") {
  PhiloxStream s(4, StreamPurpose::geometry, 0, 0);
  for (int i = 0; i < 1000; ++i) {
    double v = s.uniform_range(50.0, 100.0);
    REQUIRE(v >= 50.0);
    REQUIRE(v < 100.0);
  }
}
