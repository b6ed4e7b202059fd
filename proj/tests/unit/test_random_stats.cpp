#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "nupbr/parallel.hpp"
#include "nupbr/random.hpp"
#include "nupbr/stats.hpp"

using namespace nupbr;

// Known-answer vectors of the reference Philox4x32-10 implementation.
TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x32::generate({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out, (Philox4x32::Block{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u}));
}

TEST(Philox, KnownAnswerOnes) {
  const auto out = Philox4x32::generate({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                        {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out, (Philox4x32::Block{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu}));
}

TEST(Philox, KnownAnswerPi) {
  const auto out = Philox4x32::generate({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                                        {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out, (Philox4x32::Block{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u}));
}

TEST(PathStream, SameTripleSameStream) {
  PathStream a(7, 123, 0), b(7, 123, 0);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(PathStream, DistinctTriplesDiffer) {
  std::set<std::uint64_t> first;
  for (std::uint64_t seed : {1u, 2u})
    for (std::uint64_t path : {0u, 1u, 1000u})
      for (std::uint32_t sub : {0u, 1u, 2u, 17u}) first.insert(PathStream(seed, path, sub)());
  EXPECT_EQ(first.size(), 2u * 3u * 4u);
}

TEST(PathStream, UniformInOpenInterval) {
  PathStream s(1, 0);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = s.uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000.0, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / 100000.0));
}

TEST(PathStream, ExponentialMean) {
  PathStream s(3, 9);
  std::vector<double> x(200000);
  for (auto& v : x) v = s.exponential(2.0);
  const Estimate e = estimate_mean(x);
  EXPECT_TRUE(e.within_se(0.5, 4.0)) << e.mean;
}

TEST(PathStream, NormalMoments) {
  PathStream s(5, 1);
  std::vector<double> x(200000), x2(200000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = s.normal();
    x2[i] = x[i] * x[i];
  }
  EXPECT_TRUE(estimate_mean(x).within_se(0.0, 4.0));
  EXPECT_TRUE(estimate_mean(x2).within_se(1.0, 4.0));
}

TEST(Stats, NormalFunctions) {
  EXPECT_NEAR(normal_cdf(0.0), 0.5, 1e-15);
  EXPECT_NEAR(2.0 * normal_cdf(-1.0), 0.31731050786291415, 1e-14);
  EXPECT_NEAR(2.0 * normal_pdf(1.0), 0.48394144903828673, 1e-14);
  EXPECT_NEAR(normal_quantile(0.995), 2.5758293035489004, 1e-12);
  EXPECT_THROW(normal_quantile(1.0), std::domain_error);
}

TEST(Stats, EstimateMeanUsesSampleVariance) {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const Estimate e = estimate_mean(x);
  EXPECT_DOUBLE_EQ(e.mean, 2.5);
  EXPECT_DOUBLE_EQ(e.std_error, std::sqrt((5.0 / 3.0) / 4.0));
  EXPECT_EQ(e.n, 4u);
  EXPECT_NEAR(e.upper() - e.mean, 2.5758293035489004 * e.std_error, 1e-12);
}

TEST(Stats, EstimateMeanErrors) {
  EXPECT_THROW(estimate_mean(std::vector<double>{}), std::invalid_argument);
  EXPECT_THROW(estimate_mean(std::vector<double>{1.0}, 1.0), std::invalid_argument);
}

TEST(Stats, ClampedInterval) {
  Estimate e{0.999, 0.01, 100, 0.99, 0.0, 1.0};
  EXPECT_DOUBLE_EQ(e.upper(), 1.0);
  EXPECT_GT(e.lower(), 0.0);
  EXPECT_TRUE(ci_contains(e, 1.0));
}

TEST(Stats, KolmogorovSurvivalKnownValues) {
  // Q(1.3581) = 0.05 and Q(1.6276) = 0.01 for the limiting distribution.
  EXPECT_NEAR(kolmogorov_survival(1.3581), 0.05, 1e-4);
  EXPECT_NEAR(kolmogorov_survival(1.6276), 0.01, 1e-4);
  EXPECT_DOUBLE_EQ(kolmogorov_survival(0.0), 1.0);
}

TEST(Stats, KsSameLawHighPValue) {
  PathStream s(11, 0);
  std::vector<double> a(20000), b(20000);
  for (auto& v : a) v = s.uniform();
  for (auto& v : b) v = s.uniform();
  EXPECT_GT(ks_two_sample(a, b).p_value, 0.001);
}

TEST(Stats, KsShiftedLawLowPValue) {
  PathStream s(11, 1);
  std::vector<double> a(20000), b(20000);
  for (auto& v : a) v = s.uniform();
  for (auto& v : b) v = s.uniform() + 0.05;
  EXPECT_LT(ks_two_sample(a, b).p_value, 1e-6);
}

TEST(Stats, KsIdenticalSamplesZeroStatistic) {
  const std::vector<double> a{0.1, 0.2, 0.2, 0.5};
  EXPECT_DOUBLE_EQ(ks_two_sample(a, a).statistic, 0.0);
}

TEST(Parallel, EverySlotVisitedOnce) {
  for (unsigned w : {1u, 2u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(1003);
    parallel_for(hits.size(), w, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) ASSERT_EQ(h.load(), 1);
  }
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 57) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Parallel, ZeroItems) {
  int calls = 0;
  parallel_for(0, 4, [&](std::size_t) { ++calls; });
  EXPECT_EQ(calls, 0);
}
