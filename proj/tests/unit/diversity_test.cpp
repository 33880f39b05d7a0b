#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <cmath>
#include <random>

#include "dtest/compression.hpp"
#include "dtest/diversity.hpp"
#include "fixtures.hpp"

using dtest::DiversityMetric;
using dtest::ErrorCode;
using dtest::NcdMode;
using dtest::NcdOptions;
using dtest::RowMatrix;
using fixtures::error_code_of;

namespace {

std::string random_bytes(std::size_t n, std::mt19937_64& rng) {
  std::string s(n, '\0');
  for (auto& c : s) c = static_cast<char>(rng() & 0xFF);
  return s;
}

}  // namespace

TEST(GeometricDiversity, OrthonormalRowsScoreZero) {
  RowMatrix v = RowMatrix::Zero(2, 4);
  v(0, 1) = 1;
  v(1, 3) = 1;
  auto s = dtest::geometric_diversity(v);
  EXPECT_EQ(s.metric, DiversityMetric::GD);
  EXPECT_NEAR(s.value, 0.0, 1e-14);
  EXPECT_FALSE(s.degenerate);
  EXPECT_EQ(s.set_size, 2u);
}

TEST(GeometricDiversity, DiagonalExample) {
  RowMatrix v(2, 3);
  v << 1, 0, 0, 0, 2, 0;
  EXPECT_NEAR(dtest::geometric_diversity(v).value, std::log(4.0), 1e-12);
}

TEST(GeometricDiversity, DuplicateRowWithoutDedupIsDegenerate) {
  RowMatrix v(3, 4);
  v << 1, 0, 0, 0, 0, 1, 0, 0, 1, 0, 0, 0;
  auto raw = dtest::geometric_diversity(v, false);
  EXPECT_TRUE(raw.degenerate);
  EXPECT_EQ(raw.set_size, 3u);
  auto dedup = dtest::geometric_diversity(v, true);
  EXPECT_FALSE(dedup.degenerate);
  EXPECT_EQ(dedup.set_size, 2u);
  EXPECT_NEAR(dedup.value, 0.0, 1e-14);
}

TEST(GeometricDiversity, RowFarFromSpanIncreasesScore) {
  std::mt19937_64 rng(5);
  RowMatrix s = fixtures::gaussian_matrix(3, 8, rng);
  // Unit vector orthogonal to the rows of s, scaled to distance 3.
  Eigen::MatrixXd basis = s.transpose().householderQr().householderQ();
  Eigen::RowVectorXd v = 3.0 * basis.col(5).transpose();
  RowMatrix joined(4, 8);
  joined << s, v;
  const double before = dtest::geometric_diversity(s).value;
  const double after = dtest::geometric_diversity(joined).value;
  EXPECT_GT(after, before);
  EXPECT_NEAR(after - before, 2.0 * std::log(3.0), 1e-9);
}

TEST(GeometricDiversity, EmptySetThrows) {
  EXPECT_EQ(error_code_of([] { dtest::geometric_diversity(RowMatrix(0, 3)); }), ErrorCode::EmptySet);
}

TEST(StdNorm, Examples) {
  RowMatrix same(3, 2);
  same << 1, 2, 1, 2, 1, 2;
  EXPECT_EQ(dtest::std_norm(same).value, 0.0);
  RowMatrix two(2, 2);
  two << 0, 0, 1, 1;
  EXPECT_NEAR(dtest::std_norm(two).value, std::sqrt(0.5), 1e-15);
  EXPECT_EQ(dtest::std_norm(RowMatrix::Ones(1, 4)).value, 0.0);
}

TEST(StdNorm, DuplicatingEveryRowLeavesItUnchanged) {
  std::mt19937_64 rng(6);
  RowMatrix v = fixtures::uniform_matrix(9, 5, rng);
  RowMatrix twice(18, 5);
  twice << v, v;
  EXPECT_NEAR(dtest::std_norm(v).value, dtest::std_norm(twice).value, 1e-14);
}

TEST(Compression, KnownCompressorsRoundTripNames) {
  for (auto id : {dtest::CompressorId::bzip2, dtest::CompressorId::gzip, dtest::CompressorId::zstd}) {
    EXPECT_EQ(dtest::parse_compressor(dtest::to_string(id)), id);
  }
  EXPECT_FALSE(dtest::parse_compressor("lzma").has_value());
}

TEST(Compression, RepetitiveDataShrinks) {
  const std::string zeros(4096, '\0');
  for (auto id : {dtest::CompressorId::bzip2, dtest::CompressorId::gzip}) {
    EXPECT_LT(dtest::compressed_size(zeros, id), 200u);
  }
}

TEST(Ncd, IdenticalPairIsNearZero) {
  const std::vector<std::string> items{std::string(1024, '\0'), std::string(1024, '\0')};
  auto s = dtest::ncd_multiset(items);
  EXPECT_EQ(s.metric, DiversityMetric::NCD);
  EXPECT_LT(s.value, 0.1);
}

TEST(Ncd, RandomPairIsNearOne) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> items{random_bytes(1024, rng), random_bytes(1024, rng)};
  // bzip2 carries a few hundred bytes of table overhead per block, which
  // pulls the 1 KiB pair well below 1; gzip's overhead is a few bytes.
  const double bz = dtest::ncd_multiset(items).value;
  EXPECT_GT(bz, 0.8);
  EXPECT_LE(bz, 1.1);
  const double gz = dtest::ncd_multiset(items, {dtest::CompressorId::gzip, dtest::NcdMode::exact, 12}).value;
  EXPECT_GT(gz, 0.95);
  EXPECT_LE(gz, 1.1);
}

TEST(Ncd, SingleElementIsTooSmall) {
  const std::vector<std::string> items{"abc"};
  EXPECT_EQ(error_code_of([&] { dtest::ncd_multiset(items); }), ErrorCode::SetTooSmall);
}

TEST(Ncd, ExactModeRefusesLargeSets) {
  std::vector<std::string> items(5, "x");
  NcdOptions opts{dtest::CompressorId::gzip, NcdMode::exact, 4};
  EXPECT_EQ(error_code_of([&] { dtest::ncd_multiset(items, opts); }), ErrorCode::InvalidArgument);
}

TEST(Ncd, OrderDoesNotMatter) {
  std::mt19937_64 rng(8);
  std::vector<std::string> items;
  for (int i = 0; i < 5; ++i) items.push_back(random_bytes(64, rng) + std::string(64, 'a'));
  const double a = dtest::ncd_multiset(items).value;
  std::reverse(items.begin(), items.end());
  EXPECT_EQ(a, dtest::ncd_multiset(items).value);
}

TEST(Ncd, GreedyMatchesExactOnSmallSets) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 2 + rng() % 5;
    std::vector<std::string> items;
    for (std::size_t i = 0; i < n; ++i) items.push_back(random_bytes(16 + rng() % 48, rng) + std::string(rng() % 64, 'q'));
    NcdOptions exact{dtest::CompressorId::bzip2, NcdMode::exact, 12};
    NcdOptions greedy{dtest::CompressorId::bzip2, NcdMode::greedy, 1};
    EXPECT_EQ(dtest::ncd_multiset(items, exact).value, dtest::ncd_multiset(items, greedy).value);
  }
}

TEST(Ncd, FeatureRowsSerializeAsLittleEndianDoubles) {
  RowMatrix v(1, 2);
  v << 1.0, -2.5;
  const std::string bytes = dtest::serialize_row(v, 0);
  ASSERT_EQ(bytes.size(), 16u);
  double back[2];
  std::memcpy(back, bytes.data(), 16);
  EXPECT_EQ(back[0], 1.0);
  EXPECT_EQ(back[1], -2.5);
}
