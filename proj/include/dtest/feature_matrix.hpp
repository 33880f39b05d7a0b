#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace dtest {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixRef = Eigen::Ref<const RowMatrix>;

/// Per-input feature vectors: one row per input, one column per feature.
///
/// Construction validates the invariants (unique ids, n >= 1, m >= 1, finite
/// entries and, when flagged normalized, every entry in [0, 1]); a
/// FeatureMatrix that exists is always valid.
class FeatureMatrix {
 public:
  FeatureMatrix(std::vector<std::string> ids, RowMatrix values, bool normalized = false);

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const RowMatrix& values() const noexcept { return values_; }
  bool normalized() const noexcept { return normalized_; }
  std::size_t rows() const noexcept { return ids_.size(); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(values_.cols()); }

  /// Sub-matrix of the given rows in the given order. Indices must be
  /// distinct (ids stay unique).
  FeatureMatrix select(std::span<const std::size_t> rows) const;

  /// Row index of `id`, or -1.
  std::ptrdiff_t find(const std::string& id) const;

 private:
  std::vector<std::string> ids_;
  RowMatrix values_;
  bool normalized_;
};

/// Min-max scaling per column; constant columns map to 0.
FeatureMatrix min_max_normalize(const FeatureMatrix& matrix);

/// In-place variant over a raw matrix. Throws NonFiniteInput.
void min_max_normalize_in_place(RowMatrix& values);

struct DedupResult {
  FeatureMatrix matrix;
  std::vector<std::string> removed_ids;
};

/// Keeps the first row of every group of rows within `tolerance` (L-infinity)
/// of an already kept row. Tolerance 0 means exact equality.
DedupResult dedup_rows(const FeatureMatrix& matrix, double tolerance = 0.0);

/// Indices of the rows kept by dedup_rows, in input order.
std::vector<std::size_t> dedup_row_indices(const MatrixRef& values, double tolerance = 0.0);

}  // namespace dtest
