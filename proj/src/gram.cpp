#include "dtest/gram.hpp"

#include <cmath>

#include "dtest/error.hpp"

namespace dtest {

GramLogDet spd_log_det(RowMatrix gram, const GramOptions& options) {
  const Eigen::Index n = gram.rows();
  GramLogDet result;
  if (n == 0) return result;
  if (!gram.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "Gram matrix has non-finite entries");
  }
  // Work on the full symmetric matrix; the trailing block always holds the
  // current Schur complement.
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  const double threshold = options.relative_pivot_epsilon * gram.diagonal().maxCoeff();

  double log_det = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index offset = 0;
    const double pivot = gram.diagonal().tail(n - k).maxCoeff(&offset);
    if (!(pivot > threshold) || pivot <= 0.0) {
      result.rank_deficient = true;
      result.effective_rank = static_cast<std::size_t>(k);
      result.log_det = kRankDeficientLogDet;
      return result;
    }
    const Eigen::Index p = k + offset;
    if (p != k) {
      gram.row(k).swap(gram.row(p));
      gram.col(k).swap(gram.col(p));
    }
    log_det += std::log(pivot);
    const Eigen::Index rest = n - k - 1;
    if (rest > 0) {
      const Eigen::VectorXd v = gram.col(k).tail(rest) / std::sqrt(pivot);
      gram.bottomRightCorner(rest, rest).noalias() -= v * v.transpose();
    }
  }
  result.log_det = log_det;
  result.effective_rank = static_cast<std::size_t>(n);
  return result;
}

GramLogDet gram_log_det(const MatrixRef& rows, const GramOptions& options) {
  if (!rows.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "feature rows contain non-finite entries");
  }
  RowMatrix gram = RowMatrix::Zero(rows.rows(), rows.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(rows);
  auto result = spd_log_det(std::move(gram), options);
  const auto bound = static_cast<std::size_t>(std::min(rows.rows(), rows.cols()));
  result.effective_rank = std::min(result.effective_rank, bound);
  if (rows.rows() > rows.cols() && !result.rank_deficient) {
    // More rows than features: the Gram is singular in exact arithmetic even
    // if rounding left every pivot above the threshold.
    result.rank_deficient = true;
    result.log_det = kRankDeficientLogDet;
  }
  return result;
}

GramLogDet gram_log_det(const FeatureMatrix& matrix, const GramOptions& options) {
  return gram_log_det(matrix.values(), options);
}

}  // namespace dtest
