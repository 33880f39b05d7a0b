#pragma once

#include <limits>

#include "dtest/feature_matrix.hpp"

namespace dtest {

/// Natural log of det(V * V^T) for a set of feature rows V.
///
/// The determinant itself is never formed: the Gram matrix is factorized by a
/// diagonally pivoted Cholesky and the log-pivots are summed. When the Gram
/// is numerically singular the result is flagged and `log_det` is -infinity.
struct GramLogDet {
  double log_det = 0.0;
  bool rank_deficient = false;
  std::size_t effective_rank = 0;
};

struct GramOptions {
  /// Pivots at or below `relative_pivot_epsilon * max(diag(G))` end the
  /// factorization and mark the Gram as rank deficient.
  double relative_pivot_epsilon = 1e-10;
};

inline constexpr double kRankDeficientLogDet = -std::numeric_limits<double>::infinity();

GramLogDet gram_log_det(const MatrixRef& rows, const GramOptions& options = {});
GramLogDet gram_log_det(const FeatureMatrix& matrix, const GramOptions& options = {});

/// Log-determinant of a symmetric positive semi-definite matrix by pivoted
/// Cholesky. Only the lower triangle is read.
GramLogDet spd_log_det(RowMatrix gram, const GramOptions& options = {});

}  // namespace dtest
