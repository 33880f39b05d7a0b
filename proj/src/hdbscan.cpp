#include "dtest/hdbscan.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "dtest/error.hpp"

namespace dtest {

namespace {

double distance(const MatrixRef& points, Eigen::Index a, Eigen::Index b) {
  return (points.row(a) - points.row(b)).norm();
}

double to_lambda(double dist) {
  return dist > 0.0 ? 1.0 / dist : std::numeric_limits<double>::max();
}

struct MstEdge {
  std::size_t a = 0;
  std::size_t b = 0;
  double weight = 0.0;
};

// Prim's algorithm on the dense mutual-reachability graph.
std::vector<MstEdge> mutual_reachability_mst(const MatrixRef& points,
                                             const std::vector<double>& core) {
  const auto n = static_cast<std::size_t>(points.rows());
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  edges.reserve(n - 1);
  std::vector<bool> in_tree(n, false);
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> from(n, 0);
  std::size_t current = 0;
  in_tree[0] = true;
  for (std::size_t step = 1; step < n; ++step) {
    std::size_t next = n;
    double next_weight = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double mrd = std::max(
          {core[current], core[j],
           distance(points, static_cast<Eigen::Index>(current), static_cast<Eigen::Index>(j))});
      if (mrd < best[j]) {
        best[j] = mrd;
        from[j] = current;
      }
      if (best[j] < next_weight) {
        next_weight = best[j];
        next = j;
      }
    }
    in_tree[next] = true;
    edges.push_back({from[next], next, next_weight});
    current = next;
  }
  return edges;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void link(std::size_t child, std::size_t root) { parent_[child] = root; }

 private:
  std::vector<std::size_t> parent_;
};

struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

// Single-linkage dendrogram: node i < n is point i, node n + k is merge k.
std::vector<Merge> single_linkage(std::vector<MstEdge> mst, std::size_t n) {
  std::stable_sort(mst.begin(), mst.end(),
                   [](const MstEdge& x, const MstEdge& y) { return x.weight < y.weight; });
  UnionFind uf(2 * n);
  std::vector<std::size_t> node_of(2 * n);
  std::iota(node_of.begin(), node_of.end(), 0);
  std::vector<std::size_t> size(2 * n, 1);
  std::vector<Merge> merges;
  merges.reserve(n - 1);
  for (const auto& e : mst) {
    const auto ra = uf.find(e.a);
    const auto rb = uf.find(e.b);
    const std::size_t node = n + merges.size();
    merges.push_back({ra, rb, e.weight, size[ra] + size[rb]});
    size[node] = size[ra] + size[rb];
    uf.link(ra, node);
    uf.link(rb, node);
  }
  return merges;
}

std::vector<CondensedEdge> condense(const std::vector<Merge>& merges, std::size_t n,
                                    std::size_t min_cluster_size) {
  std::vector<CondensedEdge> tree;
  if (merges.empty()) return tree;
  auto node_size = [&](std::size_t node) { return node < n ? std::size_t{1} : merges[node - n].size; };
  auto emit_points = [&](std::size_t subtree, std::size_t parent, double lambda) {
    std::vector<std::size_t> stack{subtree};
    while (!stack.empty()) {
      const auto node = stack.back();
      stack.pop_back();
      if (node < n) {
        tree.push_back({parent, node, lambda, 1});
      } else {
        stack.push_back(merges[node - n].left);
        stack.push_back(merges[node - n].right);
      }
    }
  };

  const std::size_t root = n + merges.size() - 1;
  std::size_t next_label = n + 1;
  // (dendrogram node, condensed cluster it belongs to)
  std::vector<std::pair<std::size_t, std::size_t>> stack{{root, n}};
  while (!stack.empty()) {
    const auto [node, cluster] = stack.back();
    stack.pop_back();
    // All merges at this node's distance happen at the same density level,
    // so they form one multi-way split regardless of the order single
    // linkage recorded them in.
    const double dist = merges[node - n].distance;
    const double lambda = to_lambda(dist);
    std::vector<std::size_t> parts;
    std::vector<std::size_t> pending{merges[node - n].left, merges[node - n].right};
    while (!pending.empty()) {
      const auto part = pending.back();
      pending.pop_back();
      if (part >= n && merges[part - n].distance == dist) {
        pending.push_back(merges[part - n].left);
        pending.push_back(merges[part - n].right);
      } else {
        parts.push_back(part);
      }
    }
    std::sort(parts.begin(), parts.end());
    const auto big = static_cast<std::size_t>(std::count_if(
        parts.begin(), parts.end(), [&](std::size_t part) { return node_size(part) >= min_cluster_size; }));
    for (const auto part : parts) {
      if (node_size(part) < min_cluster_size) {
        emit_points(part, cluster, lambda);
      } else if (big == 1) {
        stack.push_back({part, cluster});
      } else {
        const auto label = next_label++;
        tree.push_back({cluster, label, lambda, node_size(part)});
        stack.push_back({part, label});
      }
    }
  }
  return tree;
}

}  // namespace

std::vector<double> core_distances(const MatrixRef& points, std::size_t min_samples) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (min_samples == 0 || min_samples > n) {
    throw Error(ErrorCode::TooFewPoints, "min_samples must lie in [1, " + std::to_string(n) + "]");
  }
  std::vector<double> core(n);
  std::vector<double> dists(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      dists[j] = distance(points, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    dists[i] = 0.0;
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(min_samples - 1),
                     dists.end());
    core[i] = dists[min_samples - 1];
  }
  return core;
}

std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::map<int, int> remap;
  std::vector<int> out(labels.size(), -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) continue;
    auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

HdbscanResult hdbscan_cluster(const MatrixRef& points, std::size_t min_cluster_size,
                              std::size_t min_samples) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (min_cluster_size < 2) {
    throw Error(ErrorCode::InvalidArgument, "min_cluster_size must be at least 2");
  }
  if (n < min_cluster_size) {
    throw Error(ErrorCode::TooFewPoints, std::to_string(n) + " points cannot form a cluster of " +
                                             std::to_string(min_cluster_size));
  }
  if (!points.allFinite()) throw Error(ErrorCode::NonFiniteInput, "embedding has non-finite values");

  const auto core = core_distances(points, min_samples);
  const auto merges = single_linkage(mutual_reachability_mst(points, core), n);

  HdbscanResult result;
  result.condensed_tree = condense(merges, n, min_cluster_size);
  result.labels.assign(n, -1);
  if (result.condensed_tree.empty()) return result;

  // Cluster ids run from n (root) to max_id; children always have larger ids.
  std::size_t max_id = n;
  for (const auto& e : result.condensed_tree) {
    if (e.child >= n) max_id = std::max(max_id, e.child);
  }
  const std::size_t clusters = max_id - n + 1;
  std::vector<double> birth(clusters, 0.0);
  std::vector<std::size_t> parent_of(clusters, 0);
  std::vector<std::vector<std::size_t>> children(clusters);
  for (const auto& e : result.condensed_tree) {
    if (e.child >= n) {
      birth[e.child - n] = e.lambda;
      parent_of[e.child - n] = e.parent - n;
      children[e.parent - n].push_back(e.child - n);
    }
  }
  std::vector<double> stability(clusters, 0.0);
  for (const auto& e : result.condensed_tree) {
    stability[e.parent - n] += (e.lambda - birth[e.parent - n]) * static_cast<double>(e.child_size);
  }

  // Excess-of-mass: keep a cluster unless its descendants together are more
  // stable. The root (index 0) is never a candidate.
  std::vector<bool> selected(clusters, false);
  std::vector<double> best = stability;
  for (std::size_t c = clusters; c-- > 1;) {
    double subtree = 0.0;
    for (auto child : children[c]) subtree += best[child];
    if (subtree > stability[c]) {
      best[c] = subtree;
    } else {
      selected[c] = true;
      std::vector<std::size_t> stack(children[c].begin(), children[c].end());
      while (!stack.empty()) {
        const auto d = stack.back();
        stack.pop_back();
        selected[d] = false;
        stack.insert(stack.end(), children[d].begin(), children[d].end());
      }
    }
  }

  std::vector<int> cluster_label(clusters, -1);
  for (std::size_t c = 1; c < clusters; ++c) {
    if (selected[c]) cluster_label[c] = static_cast<int>(c);
  }
  std::vector<int> raw(n, -1);
  for (const auto& e : result.condensed_tree) {
    if (e.child >= n) continue;
    std::size_t c = e.parent - n;
    while (c != 0 && cluster_label[c] < 0) c = parent_of[c];
    raw[e.child] = cluster_label[c];
  }
  result.labels = canonical_labels(raw);

  // Reorder stabilities to follow the canonical numbering.
  std::vector<double> ordered;
  std::map<int, int> raw_to_label;
  for (std::size_t i = 0; i < n; ++i) {
    if (raw[i] >= 0) raw_to_label.try_emplace(raw[i], result.labels[i]);
  }
  ordered.resize(raw_to_label.size());
  for (const auto& [raw_label, label] : raw_to_label) {
    ordered[static_cast<std::size_t>(label)] = stability[static_cast<std::size_t>(raw_label)];
  }
  result.stabilities = std::move(ordered);
  result.num_clusters = raw_to_label.size();
  return result;
}

}  // namespace dtest
