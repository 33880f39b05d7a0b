#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtest/feature_matrix.hpp"

namespace dtest {

struct Outcome {
  int actual_class = 0;
  int predicted_class = 0;
  bool mispredicted() const noexcept { return actual_class != predicted_class; }
};

/// Actual and predicted class of every input, keyed by id.
class OutcomeTable {
 public:
  OutcomeTable() = default;
  explicit OutcomeTable(std::vector<std::pair<std::string, Outcome>> rows);

  const std::vector<std::pair<std::string, Outcome>>& rows() const noexcept { return rows_; }
  const Outcome* find(const std::string& id) const;
  std::size_t size() const noexcept { return rows_.size(); }
  /// Smallest and largest class id appearing in either column.
  std::pair<int, int> class_range() const;

 private:
  std::vector<std::pair<std::string, Outcome>> rows_;
  std::map<std::string, std::size_t> index_;
};

/// Rows of `features` whose outcome is a misprediction, in feature order.
/// Throws EmptySet when there are none and InvalidArgument for ids missing
/// from `outcomes`.
FeatureMatrix mispredicted_subset(const FeatureMatrix& features, const OutcomeTable& outcomes);

/// Appends the actual and the predicted class as two extra columns, each
/// scaled to [0, 1] over the class-id range of `outcomes`. Every row must be
/// a misprediction (NotMispredicted otherwise).
FeatureMatrix augment_features(const FeatureMatrix& features, const OutcomeTable& outcomes);

enum class EmbeddingSource { precomputed, pca };

struct Embedding {
  std::vector<std::string> ids;
  RowMatrix coordinates;
  EmbeddingSource source = EmbeddingSource::precomputed;
  /// PCA only: variance along each kept component, descending.
  std::vector<double> explained_variance;

  /// Throws InvalidArgument / NonFiniteInput on broken invariants.
  void validate() const;
};

/// Projection of the centered features onto the top `dims` eigenvectors of
/// their covariance. Each component's largest-magnitude loading is positive.
Embedding pca_embed(const FeatureMatrix& features, std::size_t dims);

struct FaultClustering {
  std::vector<std::string> ids;
  std::vector<int> labels;  // -1 = noise
  std::size_t num_clusters = 0;
  /// Quality scores; empty when fewer than two clusters were found.
  std::optional<double> silhouette;
  std::optional<double> dbcv;
  std::size_t min_cluster_size = 0;
  std::size_t min_samples = 0;

  std::size_t noise_count() const;
  /// Label of `id`, or nullopt when the id is not part of the clustering.
  std::optional<int> label_of(const std::string& id) const;
};

/// Density clustering of an embedding; min_samples of 0 means
/// "same as min_cluster_size".
FaultClustering hdbscan(const Embedding& embedding, std::size_t min_cluster_size,
                        std::size_t min_samples = 0);

/// Clustering from already known labels (planted faults, loaded CSVs).
FaultClustering clustering_from_labels(std::vector<std::string> ids, std::vector<int> labels);

/// Mean silhouette of non-noise points; points of singleton clusters count 0.
/// Throws SingleCluster with fewer than two clusters.
double silhouette(const MatrixRef& points, std::span<const int> labels);

/// Density-based clustering validation index, weighted by cluster size over
/// non-noise points. Throws SingleCluster with fewer than two clusters.
double dbcv(const MatrixRef& points, std::span<const int> labels);

/// Number of distinct non-noise clusters among the sample's ids. Ids absent
/// from the clustering (correctly predicted inputs) contribute nothing.
std::size_t count_faults(std::span<const std::string> sample_ids, const FaultClustering& clustering);

struct SweepRow {
  std::string embedding;  // label of the embedding the row was computed on
  std::size_t min_cluster_size = 0;
  std::size_t min_samples = 0;
  std::size_t num_clusters = 0;
  std::size_t noise_count = 0;
  std::optional<double> silhouette;
  std::optional<double> dbcv;
};

struct NamedEmbedding {
  std::string name;
  Embedding embedding;
};

/// Clusters every (embedding, min_cluster_size, min_samples) combination.
/// Rows come back in grid order regardless of `threads`.
std::vector<SweepRow> sweep(std::span<const NamedEmbedding> embeddings,
                            std::span<const std::size_t> min_cluster_sizes,
                            std::span<const std::size_t> min_samples, unsigned threads = 1);

/// Index of the row with the largest sum of silhouette and DBCV ranks (rank
/// 1 = worst), ties broken by the higher DBCV. Rows without scores are
/// skipped; nullopt when no row has scores.
std::optional<std::size_t> select_best(std::span<const SweepRow> rows);

}  // namespace dtest
