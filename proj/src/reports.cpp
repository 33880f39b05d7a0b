#include "dtest/reports.hpp"

#include <cmath>

namespace dtest::io {

using nlohmann::json;

namespace {

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json numbers(const std::vector<double>& values) {
  json out = json::array();
  for (double v : values) out.push_back(number(v));
  return out;
}

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

}  // namespace

json to_json(const DiversityScore& score) {
  return {{"metric", std::string(to_string(score.metric))},
          {"value", number(score.value)},
          {"set_size", score.set_size},
          {"degenerate", score.degenerate}};
}

json to_json(const CoverageScore& score) {
  json out{{"criterion", std::string(to_string(score.criterion))}, {"value", number(score.value)}};
  json params = json::object();
  for (const auto& [k, v] : score.params) params[k] = number(v);
  out["params"] = params;
  if (!score.layer.empty()) out["layer"] = score.layer;
  return out;
}

json to_json(const CorrelationResult& result) {
  return {{"rho", number(result.rho)},
          {"p_value", number(result.p_value)},
          {"n", result.n},
          {"significant", result.significant},
          {"p_method", std::string(to_string(result.method))}};
}

json to_json(const WilcoxonResult& result) {
  return {{"statistic", number(result.statistic)},
          {"p_value", number(result.p_value)},
          {"n_effective", result.n_effective},
          {"exact", result.exact}};
}

json quality_json(const FaultClustering& clustering) {
  return {{"num_clusters", clustering.num_clusters},
          {"silhouette", optional_number(clustering.silhouette)},
          {"dbcv", optional_number(clustering.dbcv)},
          {"noise_count", clustering.noise_count()},
          {"params",
           {{"min_cluster_size", clustering.min_cluster_size}, {"min_samples", clustering.min_samples}}}};
}

json to_json(const SweepRow& row) {
  return {{"embedding", row.embedding},
          {"min_cluster_size", row.min_cluster_size},
          {"min_samples", row.min_samples},
          {"num_clusters", row.num_clusters},
          {"noise_count", row.noise_count},
          {"silhouette", optional_number(row.silhouette)},
          {"dbcv", optional_number(row.dbcv)}};
}

json to_json(const SampleSpec& spec) {
  return {{"sizes", spec.sizes},
          {"repetitions", spec.repetitions},
          {"seed", spec.seed},
          {"with_replacement", spec.with_replacement}};
}

json to_json(const ExperimentReport& report) {
  json sizes = json::array();
  for (const auto& s : report.sizes) {
    json entry{{"size", s.size}, {"scores", numbers(s.scores)}};
    if (!s.scores_b.empty()) entry["scores_b"] = numbers(s.scores_b);
    if (!s.faults.empty()) entry["faults"] = s.faults;
    entry["correlation"] = s.correlation ? to_json(*s.correlation) : json(nullptr);
    if (!s.correlation_error.empty()) entry["correlation_error"] = s.correlation_error;
    if (!s.samples.empty()) entry["samples"] = s.samples;
    sizes.push_back(std::move(entry));
  }
  json out{{"experiment", report.experiment},
           {"metric", report.metric},
           {"population", report.population},
           {"spec", to_json(report.spec)},
           {"sizes", std::move(sizes)}};
  if (!report.metric_b.empty()) out["metric_b"] = report.metric_b;
  return out;
}

json to_json(const Rq1Report& report) {
  json stages = json::array();
  for (const auto& stage : report.stages) {
    json counts = json::array();
    for (const auto& per_rep : stage.class_counts) {
      json c = json::object();
      for (const auto& [cls, n] : per_rep) c[std::to_string(cls)] = n;
      counts.push_back(std::move(c));
    }
    json entry{{"k", stage.k}, {"gd", numbers(stage.gd)}, {"std", numbers(stage.std_norm)},
               {"class_counts", std::move(counts)}};
    if (!stage.ncd.empty()) entry["ncd"] = numbers(stage.ncd);
    stages.push_back(std::move(entry));
  }
  return {{"experiment", "rq1"},
          {"first_class", report.first_class},
          {"config",
           {{"set_size", report.config.set_size},
            {"repetitions", report.config.repetitions},
            {"seed", report.config.seed},
            {"include_ncd", report.config.include_ncd},
            {"auto_dedup", report.config.auto_dedup}}},
          {"stages", std::move(stages)}};
}

json bench_scores_json(const BenchReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"metric", row.metric}, {"size", row.size}, {"scores", numbers(row.scores)}});
  }
  return {{"experiment", "rq4"},
          {"spec", to_json(report.spec)},
          {"rows", std::move(rows)},
          {"preprocessing_seconds", report.preprocessing_seconds ? json(*report.preprocessing_seconds) : json(nullptr)},
          {"preprocessing_measured", false}};
}

json bench_timings_json(const BenchReport& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"metric", row.metric}, {"size", row.size}, {"seconds", numbers(row.seconds)}});
  }
  json comparisons = json::array();
  for (const auto& c : report.comparisons) {
    json entry{{"metric_a", c.metric_a}, {"metric_b", c.metric_b}};
    entry["wilcoxon"] = c.test ? to_json(*c.test) : json(nullptr);
    if (!c.error.empty()) entry["error"] = c.error;
    comparisons.push_back(std::move(entry));
  }
  return {{"rows", std::move(rows)}, {"comparisons", std::move(comparisons)}};
}

}  // namespace dtest::io
