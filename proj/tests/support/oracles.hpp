#pragma once

// Slow, direct implementations used to check the library. None of them
// share code with src/.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace oracle {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Determinant by Laplace expansion along the first row.
double cofactor_det(const Matrix& a);

/// Euclidean distance from v to the row span of s (modified Gram-Schmidt in
/// long double with one re-orthogonalization pass).
double distance_to_span(const Matrix& s, const Eigen::RowVectorXd& v);

/// Level-wise density clustering on the dense mutual-reachability graph:
/// a cluster is a connected component at some distance level, it splits
/// where its components separate, and the selected clusters are the cut of
/// the cluster tree with maximum total stability (found by enumerating all
/// cuts; ties keep the ancestor). Labels are numbered by first appearance.
std::vector<int> brute_force_hdbscan(const Matrix& points, std::size_t min_cluster_size, std::size_t min_samples);

/// True when two labelings induce the same partition and the same noise set.
bool same_partition(const std::vector<int>& a, const std::vector<int>& b);

/// Two-sided exact signed-rank p-value by enumerating all 2^n sign
/// assignments of the (average) ranks of |d|, zeros dropped.
double wilcoxon_enumerated_p(const std::vector<double>& a, const std::vector<double>& b);
/// min(W+, W-) from the same ranks.
double wilcoxon_statistic(const std::vector<double>& a, const std::vector<double>& b);

/// Spearman rho of tie-free data via 1 - 6 sum d^2 / (n (n^2 - 1)).
double spearman_formula(const std::vector<double>& x, const std::vector<double>& y);
/// Exact two-sided permutation p-value of tie-free data (Heap's algorithm
/// over all n! orderings of y's ranks).
double spearman_enumerated_p(const std::vector<double>& x, const std::vector<double>& y);

/// Eigenvalues of a symmetric matrix, descending, by cyclic Jacobi rotations.
std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a);

// Coverage by enumeration. `acts` is inputs x neurons; `widths` splits the
// columns into layers; ranges are per neuron.
double nc(const Matrix& acts, const std::vector<std::size_t>& widths, double threshold, bool scale);
double kmnc(const Matrix& acts, const std::vector<std::pair<double, double>>& ranges, std::size_t k);
double nbc(const Matrix& acts, const std::vector<std::pair<double, double>>& ranges);
double snac(const Matrix& acts, const std::vector<std::pair<double, double>>& ranges);
double tknc(const Matrix& acts, const std::vector<std::size_t>& widths, std::size_t k);
/// Bucket enumeration of [0, upper] into n equal parts, values clamped.
double surprise_coverage(const std::vector<double>& surprises, double upper, std::size_t buckets);
/// -log of the product-Gaussian KDE with per-feature bandwidths `h`; features
/// in `keep` only.
double lsc_surprise(const Matrix& class_points, const std::vector<double>& x, const std::vector<double>& h,
                    const std::vector<std::size_t>& keep);
double dsc_surprise(const Matrix& training, const std::vector<int>& labels, const std::vector<double>& x,
                    int predicted);

}  // namespace oracle
