#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dtest/feature_matrix.hpp"
#include "fixtures.hpp"

using dtest::ErrorCode;
using dtest::FeatureMatrix;
using dtest::RowMatrix;
using fixtures::error_code_of;

namespace {

RowMatrix rows(std::initializer_list<std::initializer_list<double>> values) {
  RowMatrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : values) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

}  // namespace

TEST(FeatureMatrix, RejectsBrokenInvariants) {
  EXPECT_EQ(error_code_of([] { FeatureMatrix({"a", "a"}, rows({{1}, {2}})); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_code_of([] { FeatureMatrix({"a"}, rows({{1}, {2}})); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(error_code_of([] { FeatureMatrix({}, RowMatrix(0, 3)); }), ErrorCode::EmptySet);
  EXPECT_EQ(error_code_of([] { FeatureMatrix({"a"}, rows({{std::nan("")}})); }), ErrorCode::NonFiniteInput);
  EXPECT_EQ(error_code_of([] { FeatureMatrix({"a"}, rows({{1.5}}), true); }), ErrorCode::InvalidArgument);
}

TEST(FeatureMatrix, SelectAndFind) {
  FeatureMatrix m({"a", "b", "c"}, rows({{1, 2}, {3, 4}, {5, 6}}));
  const std::vector<std::size_t> pick{2, 0};
  auto sub = m.select(pick);
  EXPECT_EQ(sub.ids(), (std::vector<std::string>{"c", "a"}));
  EXPECT_EQ(sub.values()(0, 1), 6.0);
  EXPECT_EQ(m.find("b"), 1);
  EXPECT_EQ(m.find("zz"), -1);
}

TEST(MinMaxNormalize, ScalesEachColumn) {
  FeatureMatrix m({"a", "b", "c"}, rows({{0, 10}, {1, 20}, {2, 30}}));
  auto n = dtest::min_max_normalize(m);
  EXPECT_TRUE(n.normalized());
  EXPECT_TRUE(n.values().isApprox(rows({{0, 0}, {0.5, 0.5}, {1, 1}})));
}

TEST(MinMaxNormalize, ConstantColumnMapsToZero) {
  FeatureMatrix m({"a", "b", "c"}, rows({{5, 2}, {5, 4}, {5, 6}}));
  auto n = dtest::min_max_normalize(m);
  EXPECT_EQ(n.values().col(0).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(n.values()(1, 1), 0.5);
}

TEST(MinMaxNormalize, IsIdempotent) {
  std::mt19937_64 rng(3);
  FeatureMatrix m(fixtures::make_ids(20), fixtures::uniform_matrix(20, 7, rng, -4, 9));
  auto once = dtest::min_max_normalize(m);
  auto twice = dtest::min_max_normalize(once);
  EXPECT_LE((once.values() - twice.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MinMaxNormalize, InPlaceRejectsNonFinite) {
  RowMatrix m = rows({{1, std::numeric_limits<double>::infinity()}});
  EXPECT_EQ(error_code_of([&] { dtest::min_max_normalize_in_place(m); }), ErrorCode::NonFiniteInput);
}

TEST(DedupRows, DropsExactDuplicates) {
  FeatureMatrix m({"a", "b", "c"}, rows({{1, 0}, {1, 0}, {0, 1}}));
  auto r = dtest::dedup_rows(m);
  EXPECT_EQ(r.matrix.ids(), (std::vector<std::string>{"a", "c"}));
  EXPECT_EQ(r.removed_ids, std::vector<std::string>{"b"});
}

TEST(DedupRows, DistinctRowsAreKept) {
  FeatureMatrix m({"a", "b"}, rows({{1, 0}, {0, 1}}));
  auto r = dtest::dedup_rows(m);
  EXPECT_EQ(r.matrix.rows(), 2u);
  EXPECT_TRUE(r.removed_ids.empty());
}

TEST(DedupRows, ToleranceUsesMaxNorm) {
  FeatureMatrix m({"a", "b"}, rows({{1, 0}, {1, 1e-9}}));
  auto r = dtest::dedup_rows(m, 1e-6);
  EXPECT_EQ(r.matrix.ids(), std::vector<std::string>{"a"});
  EXPECT_EQ(r.removed_ids, std::vector<std::string>{"b"});
  EXPECT_EQ(dtest::dedup_rows(m, 0.0).matrix.rows(), 2u);
  EXPECT_EQ(error_code_of([&] { dtest::dedup_rows(m, -1.0); }), ErrorCode::InvalidArgument);
}
