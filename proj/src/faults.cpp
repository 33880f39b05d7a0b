#include <algorithm>
#include <set>
#include <unordered_map>

#include "dtest/error.hpp"
#include "dtest/faults.hpp"
#include "dtest/hdbscan.hpp"
#include "dtest/parallel.hpp"
#include "dtest/stats.hpp"

namespace dtest {

std::size_t FaultClustering::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
}

std::optional<int> FaultClustering::label_of(const std::string& id) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] == id) return labels[i];
  }
  return std::nullopt;
}

namespace {

void score_quality(FaultClustering& clustering, const MatrixRef& points) {
  if (clustering.num_clusters < 2) return;
  clustering.silhouette = silhouette(points, clustering.labels);
  clustering.dbcv = dbcv(points, clustering.labels);
}

}  // namespace

FaultClustering hdbscan(const Embedding& embedding, std::size_t min_cluster_size, std::size_t min_samples) {
  embedding.validate();
  const std::size_t samples = min_samples == 0 ? min_cluster_size : min_samples;
  auto result = hdbscan_cluster(embedding.coordinates, min_cluster_size, samples);
  FaultClustering out;
  out.ids = embedding.ids;
  out.labels = std::move(result.labels);
  out.num_clusters = result.num_clusters;
  out.min_cluster_size = min_cluster_size;
  out.min_samples = samples;
  score_quality(out, embedding.coordinates);
  return out;
}

FaultClustering clustering_from_labels(std::vector<std::string> ids, std::vector<int> labels) {
  if (ids.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "one label per id required");
  }
  std::set<std::string> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) throw Error(ErrorCode::InvalidArgument, "duplicate id in clustering");
  FaultClustering out;
  out.ids = std::move(ids);
  std::set<int> distinct;
  for (int& l : labels) {
    if (l < 0) l = -1;
    else distinct.insert(l);
  }
  out.labels = std::move(labels);
  out.num_clusters = distinct.size();
  return out;
}

std::size_t count_faults(std::span<const std::string> sample_ids, const FaultClustering& clustering) {
  std::unordered_map<std::string_view, int> label_by_id;
  label_by_id.reserve(clustering.ids.size());
  for (std::size_t i = 0; i < clustering.ids.size(); ++i) label_by_id.emplace(clustering.ids[i], clustering.labels[i]);
  std::set<int> hit;
  for (const auto& id : sample_ids) {
    auto it = label_by_id.find(id);
    if (it != label_by_id.end() && it->second >= 0) hit.insert(it->second);
  }
  return hit.size();
}

std::vector<SweepRow> sweep(std::span<const NamedEmbedding> embeddings,
                            std::span<const std::size_t> min_cluster_sizes,
                            std::span<const std::size_t> min_samples, unsigned threads) {
  struct Job {
    std::size_t embedding;
    std::size_t mcs;
    std::size_t ms;
  };
  std::vector<Job> jobs;
  const std::vector<std::size_t> default_samples{0};
  const auto samples = min_samples.empty() ? std::span<const std::size_t>(default_samples) : min_samples;
  for (std::size_t e = 0; e < embeddings.size(); ++e) {
    for (auto mcs : min_cluster_sizes) {
      for (auto ms : samples) jobs.push_back({e, mcs, ms == 0 ? mcs : ms});
    }
  }
  std::vector<SweepRow> rows(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto& named = embeddings[job.embedding];
    const auto c = hdbscan(named.embedding, job.mcs, job.ms);
    rows[i] = {named.name, job.mcs, job.ms, c.num_clusters, c.noise_count(), c.silhouette, c.dbcv};
  });
  return rows;
}

std::optional<std::size_t> select_best(std::span<const SweepRow> rows) {
  std::vector<std::size_t> scored;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].silhouette && rows[i].dbcv) scored.push_back(i);
  }
  if (scored.empty()) return std::nullopt;
  std::vector<double> sil;
  std::vector<double> dbc;
  for (auto i : scored) {
    sil.push_back(*rows[i].silhouette);
    dbc.push_back(*rows[i].dbcv);
  }
  const auto sil_rank = average_ranks(sil);
  const auto dbcv_rank = average_ranks(dbc);
  std::size_t best = 0;
  for (std::size_t k = 1; k < scored.size(); ++k) {
    const double total = sil_rank[k] + dbcv_rank[k];
    const double best_total = sil_rank[best] + dbcv_rank[best];
    if (total > best_total || (total == best_total && dbc[k] > dbc[best])) best = k;
  }
  return scored[best];
}

}  // namespace dtest
