#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "dtest/parallel.hpp"
#include "dtest/sampling.hpp"

using dtest::CounterRng;

TEST(CounterRng, SameSeedAndStreamRepeat) {
  CounterRng a(42, 7);
  CounterRng b(42, 7);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(CounterRng, StreamsDiffer) {
  CounterRng a(42, 7);
  CounterRng b(42, 8);
  CounterRng c(43, 7);
  const auto x = a.next();
  EXPECT_NE(x, b.next());
  EXPECT_NE(x, c.next());
}

TEST(CounterRng, BoundedOutputsStayInRangeAndCoverIt) {
  CounterRng rng(1, 1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = rng.uniform(7);
    ASSERT_LT(v, 7u);
    ++counts[v];
  }
  for (int c : counts) {
    EXPECT_GT(c, 850);
    EXPECT_LT(c, 1150);
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
}

TEST(SampleStream, DistinctForDistinctPairs) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 5; ++s) {
    for (std::uint64_t r = 0; r < 60; ++r) seen.insert(dtest::sample_stream(s, r));
  }
  EXPECT_EQ(seen.size(), 300u);
}

TEST(SampleIndices, WithoutReplacementIsDistinct) {
  CounterRng rng(3, 0);
  auto idx = dtest::sample_indices(50, 50, false, rng);
  std::sort(idx.begin(), idx.end());
  for (std::size_t i = 0; i < 50; ++i) EXPECT_EQ(idx[i], i);
}

TEST(SampleIndices, WithReplacementRepeats) {
  CounterRng rng(3, 0);
  auto idx = dtest::sample_indices(10, 200, true, rng);
  EXPECT_EQ(idx.size(), 200u);
  EXPECT_TRUE(std::all_of(idx.begin(), idx.end(), [](std::size_t i) { return i < 10; }));
  EXPECT_LT(std::set<std::size_t>(idx.begin(), idx.end()).size(), 200u);
}

TEST(Shuffle, IsAPermutation) {
  CounterRng rng(4, 0);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  auto sorted = v;
  dtest::shuffle(v, rng);
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, sorted);
}

TEST(ParallelFor, EveryIndexOnceAndExceptionsPropagate) {
  std::vector<int> hits(1000, 0);
  dtest::parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  EXPECT_THROW(dtest::parallel_for(100, 3,
                                   [](std::size_t i) {
                                     if (i == 17) throw std::runtime_error("boom");
                                   }),
               std::runtime_error);
}
