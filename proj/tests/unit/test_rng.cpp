#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "sojd/rng.hpp"

using sojd::rng::Philox4x32;
using sojd::rng::Stream;
using sojd::rng::stream_key;

TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::apply({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Philox4x32::apply({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                     {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Philox4x32::apply({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                     {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(Stream, DeterministicAndDistinct) {
  Stream a(stream_key(7, 1)), b(stream_key(7, 1)), c(stream_key(7, 2));
  for (int i = 0; i < 100; ++i) {
    const auto va = a.next_u64();
    EXPECT_EQ(va, b.next_u64());
    EXPECT_NE(va, c.next_u64());
  }
  std::set<std::uint64_t> keys;
  for (std::uint64_t s = 0; s < 50; ++s)
    for (std::uint64_t r = 0; r < 50; ++r) keys.insert(stream_key(s, r));
  EXPECT_EQ(keys.size(), 2500u);
}

TEST(Stream, UniformInOpenUnitInterval) {
  Stream s(stream_key(1));
  double sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Stream, NormalMoments) {
  Stream s(stream_key(2));
  const int n = 400000;
  double m1 = 0, m2 = 0, m4 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    m1 += z;
    m2 += z * z;
    m4 += z * z * z * z;
  }
  m1 /= n;
  m2 /= n;
  m4 /= n;
  EXPECT_NEAR(m1, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(m2, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(m4, 3.0, 4.0 * std::sqrt(96.0 / n));
}

TEST(Stream, PoissonMeanAndVariance) {
  for (double mean : {0.001, 0.05, 3.0}) {
    Stream s(stream_key(3, static_cast<std::uint64_t>(mean * 1000)));
    const int n = 300000;
    double m1 = 0, m2 = 0;
    for (int i = 0; i < n; ++i) {
      const double k = s.poisson(mean);
      m1 += k;
      m2 += k * k;
    }
    m1 /= n;
    m2 = m2 / n - m1 * m1;
    EXPECT_NEAR(m1, mean, 4.0 * std::sqrt(mean / n)) << mean;
    EXPECT_NEAR(m2, mean, 0.05 * mean + 4.0 * std::sqrt((mean + 2 * mean * mean) / n)) << mean;
  }
  Stream s(stream_key(4));
  EXPECT_EQ(s.poisson(0.0), 0u);
}
