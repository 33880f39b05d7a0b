#pragma once

#include <nlohmann/json.hpp>

#include "dtest/coverage.hpp"
#include "dtest/diversity.hpp"
#include "dtest/faults.hpp"
#include "dtest/harness.hpp"
#include "dtest/stats.hpp"

// JSON views of results. Objects use sorted keys, so equal results always
// serialize to equal bytes; non-finite numbers become null.
namespace dtest::io {

nlohmann::json to_json(const DiversityScore& score);
nlohmann::json to_json(const CoverageScore& score);
nlohmann::json to_json(const CorrelationResult& result);
nlohmann::json to_json(const WilcoxonResult& result);
/// {num_clusters, silhouette, dbcv, noise_count, params}
nlohmann::json quality_json(const FaultClustering& clustering);
nlohmann::json to_json(const SweepRow& row);
nlohmann::json to_json(const SampleSpec& spec);
nlohmann::json to_json(const ExperimentReport& report);
nlohmann::json to_json(const Rq1Report& report);
/// Everything in a bench report except the clock readings.
nlohmann::json bench_scores_json(const BenchReport& report);
/// Clock readings and the Wilcoxon comparisons built on them.
nlohmann::json bench_timings_json(const BenchReport& report);

}  // namespace dtest::io
