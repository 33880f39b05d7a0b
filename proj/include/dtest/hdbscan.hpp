#pragma once

#include <vector>

#include "dtest/feature_matrix.hpp"

namespace dtest {

/// One row of the condensed cluster tree. `child` is either a cluster id
/// (>= number of points) or a point index (< number of points).
struct CondensedEdge {
  std::size_t parent = 0;
  std::size_t child = 0;
  double lambda = 0.0;  // 1 / distance at which `child` left `parent`
  std::size_t child_size = 1;
};

struct HdbscanResult {
  /// Cluster label per point, -1 for noise. Clusters are numbered 0..k-1 in
  /// order of their lowest-indexed member.
  std::vector<int> labels;
  std::size_t num_clusters = 0;
  std::vector<CondensedEdge> condensed_tree;
  /// Stability of every selected cluster, indexed by label.
  std::vector<double> stabilities;
};

/// Distance from every point to its `min_samples`-th nearest point, the point
/// itself counted first (so min_samples = 1 gives 0).
std::vector<double> core_distances(const MatrixRef& points, std::size_t min_samples);

/// Hierarchical density clustering: mutual-reachability MST, single-linkage
/// hierarchy, condensed tree pruned at `min_cluster_size`, excess-of-mass
/// cluster selection (the root is never selected). Merges at equal
/// mutual-reachability distance count as one multi-way split, so the result
/// does not depend on input order.
///
/// Throws TooFewPoints when there are fewer points than `min_cluster_size`.
HdbscanResult hdbscan_cluster(const MatrixRef& points, std::size_t min_cluster_size,
                              std::size_t min_samples);

/// Relabels so clusters are numbered by first appearance; noise stays -1.
std::vector<int> canonical_labels(const std::vector<int>& labels);

}  // namespace dtest
