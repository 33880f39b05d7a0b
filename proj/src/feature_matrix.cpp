#include "dtest/feature_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>
#include <unordered_set>

#include "dtest/error.hpp"

namespace dtest {

namespace {

void require_finite(const MatrixRef& values) {
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      if (!std::isfinite(values(i, j))) {
        throw Error(ErrorCode::NonFiniteInput, "non-finite entry at row " + std::to_string(i) +
                                                   ", column " + std::to_string(j));
      }
    }
  }
}

std::uint64_t hash_row(const MatrixRef& values, Eigen::Index row) {
  // FNV-1a over the bit patterns; -0.0 is folded onto +0.0 so that rows equal
  // under == hash identically.
  std::uint64_t h = 1469598103934665603ULL;
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    double v = values(row, j);
    if (v == 0.0) v = 0.0;
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffU;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

bool rows_within(const MatrixRef& values, Eigen::Index a, Eigen::Index b, double tolerance) {
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    if (std::abs(values(a, j) - values(b, j)) > tolerance) return false;
  }
  return true;
}

}  // namespace

FeatureMatrix::FeatureMatrix(std::vector<std::string> ids, RowMatrix values, bool normalized)
    : ids_(std::move(ids)), values_(std::move(values)), normalized_(normalized) {
  if (ids_.empty() || values_.cols() == 0) {
    throw Error(ErrorCode::EmptySet, "feature matrix needs at least one row and one column");
  }
  if (static_cast<Eigen::Index>(ids_.size()) != values_.rows()) {
    throw Error(ErrorCode::InvalidArgument, "id count " + std::to_string(ids_.size()) +
                                                " does not match row count " +
                                                std::to_string(values_.rows()));
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate id '" + id + "'");
    }
  }
  require_finite(values_);
  if (normalized_ && (values_.minCoeff() < 0.0 || values_.maxCoeff() > 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "normalized matrix has entries outside [0, 1]");
  }
}

FeatureMatrix FeatureMatrix::select(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  RowMatrix values(static_cast<Eigen::Index>(rows.size()), values_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ids.push_back(ids_.at(rows[r]));
    values.row(static_cast<Eigen::Index>(r)) = values_.row(static_cast<Eigen::Index>(rows[r]));
  }
  return FeatureMatrix(std::move(ids), std::move(values), normalized_);
}

std::ptrdiff_t FeatureMatrix::find(const std::string& id) const {
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (ids_[i] == id) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

void min_max_normalize_in_place(RowMatrix& values) {
  require_finite(values);
  for (Eigen::Index j = 0; j < values.cols(); ++j) {
    auto column = values.col(j);
    const double lo = column.minCoeff();
    const double hi = column.maxCoeff();
    if (hi == lo) {
      column.setZero();
      continue;
    }
    const double span = hi - lo;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      // Pin the extremes so rounding cannot push them off 0 and 1.
      const double v = column(i);
      column(i) = v == lo ? 0.0 : v == hi ? 1.0 : std::clamp((v - lo) / span, 0.0, 1.0);
    }
  }
}

FeatureMatrix min_max_normalize(const FeatureMatrix& matrix) {
  RowMatrix values = matrix.values();
  min_max_normalize_in_place(values);
  return FeatureMatrix(matrix.ids(), std::move(values), true);
}

std::vector<std::size_t> dedup_row_indices(const MatrixRef& values, double tolerance) {
  if (!(tolerance >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "dedup tolerance must be >= 0");
  }
  std::vector<std::size_t> kept;
  if (tolerance == 0.0) {
    std::unordered_multimap<std::uint64_t, Eigen::Index> buckets;
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
      const auto h = hash_row(values, i);
      bool duplicate = false;
      auto [first, last] = buckets.equal_range(h);
      for (auto it = first; it != last && !duplicate; ++it) {
        duplicate = rows_within(values, it->second, i, 0.0);
      }
      if (!duplicate) {
        buckets.emplace(h, i);
        kept.push_back(static_cast<std::size_t>(i));
      }
    }
    return kept;
  }
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    bool duplicate = false;
    for (std::size_t k : kept) {
      if (rows_within(values, static_cast<Eigen::Index>(k), i, tolerance)) {
        duplicate = true;
        break;
      }
    }
    if (!duplicate) kept.push_back(static_cast<std::size_t>(i));
  }
  return kept;
}

DedupResult dedup_rows(const FeatureMatrix& matrix, double tolerance) {
  const auto kept = dedup_row_indices(matrix.values(), tolerance);
  std::vector<std::string> removed;
  std::size_t next = 0;
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    if (next < kept.size() && kept[next] == i) {
      ++next;
    } else {
      removed.push_back(matrix.ids()[i]);
    }
  }
  return {matrix.select(kept), std::move(removed)};
}

}  // namespace dtest
