#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "hybridssr/random.hpp"

using namespace hybridssr;

// Known-answer vectors distributed with Random123 (kat_vectors).
TEST(Philox, KnownAnswerVectors) {
    EXPECT_EQ(philox4x32_10({0, 0, 0, 0}, {0, 0}),
              (std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c,
                                            0x9b00dbd8}));
    EXPECT_EQ(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
                            {0xffffffff, 0xffffffff}),
              (std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6,
                                            0x6d5451fd}));
    EXPECT_EQ(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
                            {0xa4093822, 0x299f31d0}),
              (std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420,
                                            0x24126ea1}));
}

TEST(RandomStream, SameTripleSameSequence) {
    RandomStream a(42, 7, 3), b(42, 7, 3);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(a(), b());
}

TEST(RandomStream, DistinctStreamsAndSubstreamsDiffer) {
    RandomStream base(42, 7, 3), other_stream(42, 8, 3), other_sub(42, 7, 4),
        other_seed(43, 7, 3);
    int same_stream = 0, same_sub = 0, same_seed = 0;
    for (int i = 0; i < 256; ++i) {
        const auto v = base();
        same_stream += v == other_stream();
        same_sub += v == other_sub();
        same_seed += v == other_seed();
    }
    EXPECT_LT(same_stream, 3);
    EXPECT_LT(same_sub, 3);
    EXPECT_LT(same_seed, 3);
}

TEST(RandomStream, UniformIsOpenInterval) {
    RandomStream s(1, 0);
    double lo = 1, hi = 0, sum = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        lo = std::min(lo, u), hi = std::max(hi, u), sum += u;
    }
    EXPECT_NEAR(sum / n, 0.5, 3 * std::sqrt(1.0 / 12 / n));
}

TEST(RandomStream, BelowIsUniform) {
    RandomStream s(9, 1);
    const int bound = 7, n = 70000;
    std::vector<int> counts(bound);
    for (int i = 0; i < n; ++i) {
        const auto v = s.below(bound);
        ASSERT_LT(v, std::uint64_t(bound));
        ++counts[v];
    }
    double chi2 = 0;
    for (int c : counts) chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
    EXPECT_LT(chi2, 22.46);  // chi-square(6) 0.999 quantile
}

TEST(RandomStream, NormalMoments) {
    RandomStream s(5, 2);
    const int n = 200000;
    double m = 0, m2 = 0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal();
        m += z, m2 += z * z;
    }
    m /= n, m2 /= n;
    EXPECT_NEAR(m, 0.0, 4 / std::sqrt(n));
    EXPECT_NEAR(m2, 1.0, 4 * std::sqrt(2.0 / n));
}
