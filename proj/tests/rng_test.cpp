#include "relrag/rng.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

namespace relrag::rng {
namespace {

// Known-answer vectors published with the Random123 reference implementation.
TEST(PhiloxTest, KnownAnswers) {
  EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
            (Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
  EXPECT_EQ(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}),
            (Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
  EXPECT_EQ(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}),
            (Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(StreamTest, SameKeySameSequence) {
  Stream a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(StreamTest, DeriveDependsOnEveryTagAndOrder) {
  EXPECT_NE(derive(1, {2, 3}), derive(1, {3, 2}));
  EXPECT_NE(derive(1, {2, 3}), derive(2, {2, 3}));
  EXPECT_NE(derive(1, {2}), derive(1, {2, 0}));
  EXPECT_EQ(derive(7, {8, 9}), derive(7, {8, 9}));
}

TEST(StreamTest, UniformMomentsAndRange) {
  Stream s(derive(2026, {1}));
  constexpr int kN = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < kN; ++i) {
    const double u = s.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / kN;
  EXPECT_NEAR(mean, 0.5, 3 * std::sqrt(1.0 / 12 / kN));
  EXPECT_NEAR(sq / kN - mean * mean, 1.0 / 12, 0.002);
}

TEST(StreamTest, BernoulliEdgeProbabilities) {
  Stream s(5);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_FALSE(s.bernoulli(0.0));
    EXPECT_TRUE(s.bernoulli(1.0));
  }
}

TEST(StreamTest, CategoricalNeverPicksZeroWeight) {
  const std::vector<double> cumulative{0.5, 0.5, 1.0, 1.0};
  Stream s(9);
  std::vector<int> hits(4, 0);
  for (int i = 0; i < 10000; ++i) ++hits[s.categorical(cumulative)];
  EXPECT_EQ(hits[1], 0);
  EXPECT_EQ(hits[3], 0);
  EXPECT_GT(hits[0], 0);
  EXPECT_GT(hits[2], 0);
}

}  // namespace
}  // namespace relrag::rng
