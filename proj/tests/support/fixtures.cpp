#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <stdexcept>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "dtest/formats.hpp"

namespace fixtures {

std::vector<std::string> make_ids(std::size_t n, const std::string& prefix) {
  std::vector<std::string> ids;
  ids.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ids.push_back(prefix + std::to_string(i));
  return ids;
}

RowMatrix uniform_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

RowMatrix gaussian_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> dist(0.0, sigma);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Blobs gaussian_blobs(const std::vector<std::size_t>& per_blob, std::size_t dims, double sigma, double spacing,
                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  std::size_t total = 0;
  for (auto n : per_blob) total += n;
  Blobs out;
  out.points.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(dims));
  Eigen::Index row = 0;
  for (std::size_t c = 0; c < per_blob.size(); ++c) {
    Eigen::RowVectorXd center = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(dims));
    if (dims >= per_blob.size()) {
      center(static_cast<Eigen::Index>(c)) = spacing;
    } else {
      center(0) = spacing * static_cast<double>(c);
    }
    for (std::size_t i = 0; i < per_blob[c]; ++i, ++row) {
      for (std::size_t j = 0; j < dims; ++j) {
        out.points(row, static_cast<Eigen::Index>(j)) = center(static_cast<Eigen::Index>(j)) + noise(rng);
      }
      out.labels.push_back(static_cast<int>(c));
    }
  }
  return out;
}

PlantedPopulation planted_population(const std::vector<std::size_t>& per_cluster, std::size_t dims, double sigma,
                                     double spacing, std::uint64_t seed) {
  auto blobs = gaussian_blobs(per_cluster, dims, sigma, spacing, seed);
  auto ids = make_ids(static_cast<std::size_t>(blobs.points.rows()), "p");
  dtest::FeatureMatrix features(ids, std::move(blobs.points));
  auto clustering = dtest::clustering_from_labels(ids, blobs.labels);
  return {std::move(features), std::move(clustering)};
}

dtest::ActivationTrace random_trace(const std::vector<std::string>& ids, const std::vector<std::size_t>& widths,
                                    std::mt19937_64& rng, double lo, double hi) {
  std::vector<dtest::LayerInfo> layers;
  std::size_t total = 0;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    layers.push_back({"L" + std::to_string(l), widths[l]});
    total += widths[l];
  }
  std::uniform_real_distribution<float> dist(static_cast<float>(lo), static_cast<float>(hi));
  dtest::ActivationMatrix acts(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(total));
  for (Eigen::Index i = 0; i < acts.size(); ++i) acts.data()[i] = dist(rng);
  return dtest::ActivationTrace(ids, std::move(layers), std::move(acts));
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("dtest-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

void write_experiment_workspace(const std::filesystem::path& dir) {
  namespace io = dtest::io;
  using nlohmann::json;
  const std::vector<std::size_t> per_class{12, 12, 12, 12};
  auto blobs = gaussian_blobs(per_class, 30, 0.4, 5.0, 404);
  const auto ids = make_ids(48, "x");
  io::save_features(dir / "features.fmat", dtest::FeatureMatrix(ids, blobs.points));

  std::mt19937_64 rng(405);
  auto trace = random_trace(ids, {5, 3}, rng, -1.0, 1.0);
  io::save_trace(dir / "trace.atrc", trace);
  auto training = random_trace(make_ids(20, "t"), {5, 3}, rng, -0.8, 0.8);
  std::vector<int> training_labels;
  for (int i = 0; i < 20; ++i) training_labels.push_back(i % 4);
  const std::vector<std::string> surprise_layers{"L0"};
  io::save_profile(dir / "profile.json", dtest::build_profile(training, training_labels, surprise_layers));

  std::vector<std::pair<std::string, dtest::Outcome>> outcomes;
  std::vector<std::string> wrong_ids;
  std::vector<int> wrong_labels;
  std::string labels_csv = "id,class\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const int actual = blobs.labels[i];
    const int predicted = i % 3 == 0 ? actual : (actual + 1) % 4;
    outcomes.push_back({ids[i], {actual, predicted}});
    labels_csv += ids[i] + "," + std::to_string(actual) + "\n";
    if (predicted != actual) {
      wrong_ids.push_back(ids[i]);
      wrong_labels.push_back(i % 7 == 0 ? -1 : static_cast<int>(i % 5));
    }
  }
  write_text(dir / "outcomes.csv", io::encode_outcomes_csv(dtest::OutcomeTable(outcomes)));
  write_text(dir / "clusters.csv", io::encode_clusters_csv(dtest::clustering_from_labels(wrong_ids, wrong_labels)));
  write_text(dir / "labels.csv", labels_csv);

  const json base{{"features", "features.fmat"},
                  {"trace", "trace.atrc"},
                  {"profile", "profile.json"},
                  {"outcomes", "outcomes.csv"},
                  {"clusters", "clusters.csv"},
                  {"sizes", {8, 16}},
                  {"repetitions", 5},
                  {"seed", 7}};
  json rq1{{"features", "features.fmat"}, {"labels", "labels.csv"}, {"set_size", 10}, {"repetitions", 4},
           {"include_ncd", true}, {"seed", 7}};
  json rq2 = base;
  rq2["metric"] = "GD";
  rq2["record_samples"] = true;
  json rq3 = base;
  rq3["metric"] = {{"name", "LSC"}, {"layer", "L0"}, {"upper_bound", 20.0}, {"buckets", 50}};
  json rq4 = base;
  rq4["metrics"] = {"GD", "STD", {{"name", "KMNC"}, {"k", 10}}};
  rq4["preprocessing_seconds"] = 2.5;
  json rq5 = base;
  rq5["metric"] = "STD";
  rq5["metric_b"] = {{"name", "DSC"}, {"layer", "L0"}, {"upper_bound", 3.0}, {"buckets", 30}};
  rq5["threads"] = 3;
  for (const auto& [name, config] : {std::pair{"rq1", rq1}, {"rq2", rq2}, {"rq3", rq3}, {"rq4", rq4}, {"rq5", rq5}}) {
    write_text(dir / (std::string(name) + ".json"), config.dump(2));
  }
}

}  // namespace fixtures
