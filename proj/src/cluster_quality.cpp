#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "dtest/error.hpp"
#include "dtest/faults.hpp"

namespace dtest {

namespace {

using Members = std::map<int, std::vector<Eigen::Index>>;

Members group_members(const MatrixRef& points, std::span<const int> labels) {
  if (labels.size() != static_cast<std::size_t>(points.rows())) {
    throw Error(ErrorCode::LengthMismatch, "one label per point required");
  }
  if (!points.allFinite()) throw Error(ErrorCode::NonFiniteInput, "points have non-finite values");
  Members members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) members[labels[i]].push_back(static_cast<Eigen::Index>(i));
  }
  if (members.size() < 2) {
    throw Error(ErrorCode::SingleCluster, "cluster quality needs at least two clusters, got " +
                                              std::to_string(members.size()));
  }
  return members;
}

double dist(const MatrixRef& points, Eigen::Index a, Eigen::Index b) {
  return (points.row(a) - points.row(b)).norm();
}

}  // namespace

double silhouette(const MatrixRef& points, std::span<const int> labels) {
  const Members members = group_members(points, labels);
  double total = 0.0;
  std::size_t count = 0;
  for (const auto& [label, own] : members) {
    for (const auto i : own) {
      ++count;
      if (own.size() == 1) continue;
      double a = 0.0;
      for (const auto j : own) a += dist(points, i, j);
      a /= static_cast<double>(own.size() - 1);
      double b = std::numeric_limits<double>::infinity();
      for (const auto& [other_label, other] : members) {
        if (other_label == label) continue;
        double mean = 0.0;
        for (const auto j : other) mean += dist(points, i, j);
        b = std::min(b, mean / static_cast<double>(other.size()));
      }
      const double denom = std::max(a, b);
      if (denom > 0.0) total += (b - a) / denom;
    }
  }
  return total / static_cast<double>(count);
}

namespace {

struct ClusterDensity {
  std::vector<Eigen::Index> members;
  std::vector<double> core;          // all-points core distance per member
  std::vector<Eigen::Index> internal;  // MST nodes of degree > 1
  std::vector<double> internal_core;
  double sparseness = 0.0;
};

// All-points core distance of `i` within its cluster:
// (sum_j (1/d_ij)^dim / (n - 1))^(-1/dim), evaluated in log space.
double all_points_core(const MatrixRef& points, const std::vector<Eigen::Index>& members,
                       Eigen::Index i, double dim) {
  if (members.size() < 2) return 0.0;
  std::vector<double> logs;
  logs.reserve(members.size() - 1);
  for (const auto j : members) {
    if (j == i) continue;
    const double d = dist(points, i, j);
    if (d == 0.0) return 0.0;
    logs.push_back(-dim * std::log(d));
  }
  const double peak = *std::max_element(logs.begin(), logs.end());
  double sum = 0.0;
  for (double l : logs) sum += std::exp(l - peak);
  const double log_mean = peak + std::log(sum) - std::log(static_cast<double>(logs.size()));
  return std::exp(-log_mean / dim);
}

ClusterDensity analyse_cluster(const MatrixRef& points, std::vector<Eigen::Index> members, double dim) {
  ClusterDensity c;
  c.members = std::move(members);
  const std::size_t n = c.members.size();
  for (const auto i : c.members) c.core.push_back(all_points_core(points, c.members, i, dim));

  auto mrd = [&](std::size_t a, std::size_t b) {
    return std::max({c.core[a], c.core[b], dist(points, c.members[a], c.members[b])});
  };
  // Prim over the cluster's mutual-reachability graph.
  struct Edge {
    std::size_t a, b;
    double w;
  };
  std::vector<Edge> edges;
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  if (n > 0) in_tree[0] = true;
  std::size_t current = 0;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = mrd(current, j);
      if (w < best[j]) {
        best[j] = w;
        from[j] = current;
      }
      if (next == n || best[j] < best[next]) next = j;
    }
    in_tree[next] = true;
    edges.push_back({from[next], next, best[next]});
    current = next;
  }

  std::vector<std::size_t> degree(n, 0);
  for (const auto& e : edges) {
    ++degree[e.a];
    ++degree[e.b];
  }
  std::vector<bool> internal(n, false);
  bool any_internal = false;
  for (std::size_t i = 0; i < n; ++i) {
    internal[i] = degree[i] > 1;
    any_internal = any_internal || internal[i];
  }
  if (!any_internal) std::fill(internal.begin(), internal.end(), true);
  for (std::size_t i = 0; i < n; ++i) {
    if (!internal[i]) continue;
    c.internal.push_back(c.members[i]);
    c.internal_core.push_back(c.core[i]);
  }

  bool found = false;
  for (const auto& e : edges) {
    if (internal[e.a] && internal[e.b]) {
      c.sparseness = found ? std::max(c.sparseness, e.w) : e.w;
      found = true;
    }
  }
  if (!found) {
    for (const auto& e : edges) c.sparseness = std::max(c.sparseness, e.w);
  }
  return c;
}

double separation(const MatrixRef& points, const ClusterDensity& x, const ClusterDensity& y) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.internal.size(); ++i) {
    for (std::size_t j = 0; j < y.internal.size(); ++j) {
      best = std::min(best, std::max({x.internal_core[i], y.internal_core[j],
                                      dist(points, x.internal[i], y.internal[j])}));
    }
  }
  return best;
}

}  // namespace

double dbcv(const MatrixRef& points, std::span<const int> labels) {
  const Members members = group_members(points, labels);
  const double dim = static_cast<double>(points.cols());
  std::vector<ClusterDensity> clusters;
  std::size_t total = 0;
  for (const auto& [label, rows] : members) {
    total += rows.size();
    clusters.push_back(analyse_cluster(points, rows, dim));
  }
  double index = 0.0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    double sep = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < clusters.size(); ++j) {
      if (j != i) sep = std::min(sep, separation(points, clusters[i], clusters[j]));
    }
    const double sparse = clusters[i].sparseness;
    const double denom = std::max(sep, sparse);
    const double validity = denom > 0.0 ? (sep - sparse) / denom : 0.0;
    index += static_cast<double>(clusters[i].members.size()) / static_cast<double>(total) * validity;
  }
  return index;
}

}  // namespace dtest
