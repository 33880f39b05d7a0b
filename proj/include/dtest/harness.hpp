#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dtest/activation.hpp"
#include "dtest/coverage.hpp"
#include "dtest/diversity.hpp"
#include "dtest/faults.hpp"
#include "dtest/stats.hpp"

namespace dtest {

struct SampleSpec {
  std::vector<std::size_t> sizes{100, 200, 300, 400, 1000};
  std::size_t repetitions = 60;
  std::uint64_t seed = 0;
  bool with_replacement = true;

  /// Throws SpecInvalid unless sizes is non-empty, every size is in
  /// [1, population] and repetitions >= 2.
  void validate(std::size_t population) const;
};

/// Positions (into the sorted population) of repetition `repetition` of the
/// `size_index`-th size. Depends only on (population, spec, indices), which
/// is what lets different experiments see identical subsets.
std::vector<std::size_t> draw_sample(std::size_t population, const SampleSpec& spec, std::size_t size_index,
                                     std::size_t repetition);

/// Which score a sample gets, with its hyperparameters. `name` is one of
/// GD, STD, NCD (feature based), NC, KMNC, NBC, SNAC, TKNC, LSC, DSC (trace
/// based) or CLUSTERS: the number of distinct clusters of
/// ExperimentData::reference_clusters the sample touches, used to check
/// whether a fault count merely tracks cluster structure of the whole set.
struct MetricConfig {
  std::string name = "GD";
  bool auto_dedup = true;
  NcdOptions ncd;
  double nc_threshold = 0.1;
  bool nc_scale_per_layer = true;
  std::size_t kmnc_k = 1000;
  std::size_t tknc_k = 3;
  SurpriseParams surprise;
};

bool is_diversity_metric(const std::string& name);
bool is_coverage_metric(const std::string& name);
bool is_reference_cluster_metric(const std::string& name);

/// Inputs shared by the experiments. Pointers are borrowed; null means "not
/// supplied". When both features and trace are given they must describe the
/// same ids.
struct ExperimentData {
  const FeatureMatrix* features = nullptr;
  const ActivationTrace* trace = nullptr;
  const ActivationProfile* profile = nullptr;
  const OutcomeTable* outcomes = nullptr;
  const FaultClustering* clustering = nullptr;
  const FaultClustering* reference_clusters = nullptr;  // CLUSTERS metric only
  unsigned threads = 1;
};

/// Ids of the sampling population in ascending order.
std::vector<std::string> sorted_population(const ExperimentData& data);

/// Scores samples of the population under one metric. Per-input work (feature
/// normalization over the whole population, surprise values) is done once
/// at construction; score() is const and safe to call concurrently.
class MetricEvaluator {
 public:
  MetricEvaluator(MetricConfig config, const ExperimentData& data, const std::vector<std::string>& population);

  double score(std::span<const std::size_t> sample) const;
  const MetricConfig& config() const noexcept { return config_; }

 private:
  double diversity(std::span<const std::size_t> sample) const;
  double coverage(std::span<const std::size_t> sample) const;

  MetricConfig config_;
  const ExperimentData* data_;
  std::optional<CoverageCriterion> criterion_;
  std::vector<int> reference_labels_;       // CLUSTERS, population order
  RowMatrix features_;                      // population order, normalized
  std::vector<std::size_t> trace_rows_;     // population position -> trace row
  std::vector<double> surprises_;           // LSC / DSC, population order
};

/// Correlation of one size, or the reason it is undefined.
struct SizeReport {
  std::size_t size = 0;
  std::vector<double> scores;
  std::vector<double> scores_b;  // second metric (metric-vs-metric only)
  std::vector<std::size_t> faults;
  std::optional<CorrelationResult> correlation;
  std::string correlation_error;  // error code name when correlation is null
  std::vector<std::vector<std::string>> samples;  // filled on request
};

struct ExperimentReport {
  std::string experiment;
  std::string metric;
  std::string metric_b;
  SampleSpec spec;
  std::size_t population = 0;
  std::vector<SizeReport> sizes;
};

/// Score vs. fault count for repeated samples of every size. The metric may
/// be feature based (diversity) or trace based (coverage).
ExperimentReport sample_and_correlate(const ExperimentData& data, const MetricConfig& metric, const SampleSpec& spec,
                                      bool record_samples = false);

/// Diversity score (or CLUSTERS) vs. faults.
ExperimentReport rq2_sample_and_correlate(const ExperimentData& data, const MetricConfig& metric,
                                          const SampleSpec& spec, bool record_samples = false);
/// Coverage score vs. faults on the same subsets rq2 draws.
ExperimentReport rq3_coverage_correlate(const ExperimentData& data, const MetricConfig& metric,
                                        const SampleSpec& spec, bool record_samples = false);
/// Two metrics on the same subsets, correlated with each other.
ExperimentReport rq5_metric_vs_metric(const ExperimentData& data, const MetricConfig& metric_a,
                                      const MetricConfig& metric_b, const SampleSpec& spec);

struct Rq1Config {
  std::size_t set_size = 100;
  std::size_t repetitions = 20;
  std::uint64_t seed = 0;
  bool include_ncd = false;
  NcdOptions ncd;
  bool auto_dedup = true;
  unsigned threads = 1;
};

struct Rq1Stage {
  std::size_t k = 0;  // number of classes in every set of this stage
  std::vector<double> gd;
  std::vector<double> std_norm;
  std::vector<double> ncd;  // empty unless requested
  /// Per repetition: class -> number of members in the set.
  std::vector<std::map<int, std::size_t>> class_counts;
};

struct Rq1Report {
  Rq1Config config;
  int first_class = 0;
  std::vector<Rq1Stage> stages;
};

/// Controlled class-diversity procedure: every repetition starts from a set
/// drawn from one class, then folds in the remaining classes one at a time
/// (in a per-repetition random order), keeping the per-class counts within
/// one of each other. Features are min-max normalized over the whole input
/// first. Throws ClassTooSmall when a class has fewer than set_size members.
Rq1Report rq1_class_diversity(const FeatureMatrix& features, const std::map<std::string, int>& class_of,
                              const Rq1Config& config);

struct TimingRow {
  std::string metric;
  std::size_t size = 0;
  std::vector<double> seconds;  // one per repetition, warm-up excluded
  std::vector<double> scores;
};

struct PairwiseTiming {
  std::string metric_a;
  std::string metric_b;
  std::optional<WilcoxonResult> test;
  std::string error;
};

struct BenchReport {
  SampleSpec spec;
  std::vector<TimingRow> rows;
  std::vector<PairwiseTiming> comparisons;
  /// Feature-extraction time supplied by the user; reported, not measured.
  std::optional<double> preprocessing_seconds;
};

/// Wall-clock (steady clock) time of every metric on every sample, single
/// threaded, plus a Wilcoxon test for every pair of metrics over the paired
/// per-sample times.
BenchReport rq4_bench(const ExperimentData& data, std::span<const MetricConfig> metrics, const SampleSpec& spec,
                      std::optional<double> preprocessing_seconds = std::nullopt);

}  // namespace dtest
