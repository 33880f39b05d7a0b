#include <Eigen/Eigenvalues>

#include "dtest/error.hpp"
#include "dtest/faults.hpp"

namespace dtest {

void Embedding::validate() const {
  if (coordinates.cols() < 1) throw Error(ErrorCode::InvalidArgument, "embedding needs at least one dimension");
  if (static_cast<std::size_t>(coordinates.rows()) != ids.size()) {
    throw Error(ErrorCode::InvalidArgument, "embedding has " + std::to_string(coordinates.rows()) +
                                                " rows for " + std::to_string(ids.size()) + " ids");
  }
  if (!coordinates.allFinite()) throw Error(ErrorCode::NonFiniteInput, "embedding has non-finite values");
}

Embedding pca_embed(const FeatureMatrix& features, std::size_t dims) {
  const auto m = features.cols();
  if (dims == 0) throw Error(ErrorCode::InvalidArgument, "PCA needs at least one output dimension");
  if (dims > m) {
    throw Error(ErrorCode::DimsTooLarge,
                "cannot keep " + std::to_string(dims) + " of " + std::to_string(m) + " dimensions");
  }
  const RowMatrix centered = features.values().rowwise() - features.values().colwise().mean();
  const double denom = features.rows() > 1 ? static_cast<double>(features.rows() - 1) : 1.0;
  const Eigen::MatrixXd covariance = (centered.transpose() * centered) / denom;

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(covariance);
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorCode::InvalidArgument, "covariance eigen-decomposition did not converge");
  }
  // Eigen returns ascending eigenvalues; take them from the top.
  const auto k = static_cast<Eigen::Index>(dims);
  const auto mm = static_cast<Eigen::Index>(m);
  Eigen::MatrixXd basis(mm, k);
  Embedding out;
  out.source = EmbeddingSource::pca;
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(mm - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0.0) v = -v;
    basis.col(c) = v;
    out.explained_variance.push_back(std::max(0.0, solver.eigenvalues()(mm - 1 - c)));
  }
  out.ids = features.ids();
  out.coordinates = centered * basis;
  return out;
}

}  // namespace dtest
