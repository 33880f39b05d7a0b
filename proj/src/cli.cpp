#include "dtest/cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <filesystem>
#include <functional>
#include <optional>

#include "dtest/coverage.hpp"
#include "dtest/diversity.hpp"
#include "dtest/error.hpp"
#include "dtest/faults.hpp"
#include "dtest/formats.hpp"
#include "dtest/harness.hpp"
#include "dtest/reports.hpp"
#include "dtest/stats.hpp"

namespace dtest::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string log_level = "warn";

  // shared inputs
  std::string features;
  std::string trace;
  std::string profile;
  std::string outcomes;
  std::string out;

  // diversity
  bool no_dedup = false;
  bool raw = false;
  std::string compressor = "bzip2";
  std::string ncd_mode = "greedy";
  std::size_t exact_limit = 12;

  // coverage
  std::string criterion;
  double threshold = 0.1;
  bool no_scale = false;
  std::optional<std::size_t> k;
  std::string layer;
  double upper_bound = 0.0;
  std::size_t buckets = 1000;

  // faults
  std::string embedding;
  std::string reduce;
  std::size_t dims = 2;
  std::size_t min_cluster_size = 5;
  std::size_t min_samples = 0;
  std::string embedding_out;
  std::string grid;
  std::string clusters;
  std::string sample;

  // correlate
  std::string x;
  std::string y;
  std::string p_method = "automatic";

  // experiments and bench
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> metrics;
  std::vector<std::size_t> sizes;
  std::size_t repetitions = 10;
  unsigned threads = 1;

  // formats
  std::string input;
};

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorCode::InvalidArgument, message); }

void print(std::ostream& out, const json& value) { out << value.dump() << '\n'; }

FeatureMatrix load_scoring_features(const Options& o) {
  auto fm = io::load_features(o.features);
  return o.raw ? fm : min_max_normalize(fm);
}

NcdOptions ncd_options(const std::string& compressor, const std::string& mode, std::size_t exact_limit) {
  NcdOptions opts;
  const auto id = parse_compressor(compressor);
  if (!id) invalid("unknown compressor '" + compressor + "'");
  opts.compressor = *id;
  if (mode == "exact") opts.mode = NcdMode::exact;
  else if (mode == "greedy") opts.mode = NcdMode::greedy;
  else invalid("unknown NCD mode '" + mode + "'");
  opts.exact_limit = exact_limit;
  return opts;
}

std::vector<int> predicted_classes(const ActivationTrace& trace, const OutcomeTable& outcomes) {
  std::vector<int> predicted;
  for (const auto& id : trace.ids()) {
    const Outcome* o = outcomes.find(id);
    if (o == nullptr) invalid("outcomes file has no row for '" + id + "'");
    predicted.push_back(o->predicted_class);
  }
  return predicted;
}

int run_diversity(const Options& o, DiversityMetric metric, std::ostream& out) {
  const auto fm = load_scoring_features(o);
  DiversityScore score;
  switch (metric) {
    case DiversityMetric::GD: score = geometric_diversity(fm, !o.no_dedup); break;
    case DiversityMetric::STD: score = std_norm(fm); break;
    case DiversityMetric::NCD: score = ncd_multiset(fm, ncd_options(o.compressor, o.ncd_mode, o.exact_limit)); break;
  }
  print(out, io::to_json(score));
  return 0;
}

int run_coverage(const Options& o, std::ostream& out) {
  const auto criterion = parse_criterion(o.criterion);
  if (!criterion) invalid("unknown coverage criterion '" + o.criterion + "'");
  const auto trace = io::load_trace(o.trace);
  std::optional<ActivationProfile> profile;
  if (!o.profile.empty()) profile = io::load_profile(o.profile);
  std::optional<OutcomeTable> outcomes;
  if (!o.outcomes.empty()) outcomes = io::parse_outcomes_csv(io::read_file(o.outcomes));
  auto need_profile = [&]() -> const ActivationProfile& {
    if (!profile) invalid(std::string(to_string(*criterion)) + " needs --profile");
    return *profile;
  };
  auto surprise = [&]() {
    if (o.layer.empty()) invalid("surprise criteria need --layer");
    if (!outcomes) invalid("surprise criteria need --outcomes for the predicted classes");
    return SurpriseParams{o.layer, o.upper_bound, o.buckets};
  };

  CoverageScore score;
  switch (*criterion) {
    case CoverageCriterion::NC: score = nc(trace, o.threshold, !o.no_scale); break;
    case CoverageCriterion::KMNC: score = kmnc(trace, need_profile(), o.k.value_or(1000)); break;
    case CoverageCriterion::NBC: score = nbc(trace, need_profile()); break;
    case CoverageCriterion::SNAC: score = snac(trace, need_profile()); break;
    case CoverageCriterion::TKNC: score = tknc(trace, o.k.value_or(3)); break;
    case CoverageCriterion::LSC: {
      const auto params = surprise();
      score = lsc(trace, need_profile(), predicted_classes(trace, *outcomes), params);
      break;
    }
    case CoverageCriterion::DSC: {
      const auto params = surprise();
      score = dsc(trace, need_profile(), predicted_classes(trace, *outcomes), params);
      break;
    }
  }
  print(out, io::to_json(score));
  return 0;
}

int run_faults_cluster(const Options& o, std::ostream& out) {
  std::optional<OutcomeTable> outcomes;
  if (!o.outcomes.empty()) outcomes = io::parse_outcomes_csv(io::read_file(o.outcomes));
  std::optional<FeatureMatrix> features;
  if (!o.features.empty()) features = io::load_features(o.features);
  std::optional<Embedding> precomputed;
  if (!o.embedding.empty()) precomputed = io::parse_embedding_csv(io::read_file(o.embedding));

  Embedding embedding;
  if (precomputed) {
    if (!o.reduce.empty()) invalid("--embedding and --reduce are mutually exclusive");
    embedding = std::move(*precomputed);
    if (outcomes) {
      // Keep only the mispredicted inputs.
      Embedding kept;
      std::vector<Eigen::Index> rows;
      for (std::size_t i = 0; i < embedding.ids.size(); ++i) {
        const Outcome* oc = outcomes->find(embedding.ids[i]);
        if (oc == nullptr) invalid("outcomes file has no row for '" + embedding.ids[i] + "'");
        if (oc->mispredicted()) {
          rows.push_back(static_cast<Eigen::Index>(i));
          kept.ids.push_back(embedding.ids[i]);
        }
      }
      if (rows.empty()) throw Error(ErrorCode::EmptySet, "no mispredicted inputs");
      kept.coordinates = embedding.coordinates(rows, Eigen::all);
      embedding = std::move(kept);
    }
  } else {
    if (!features || !outcomes) invalid("faults cluster needs --features and --outcomes, or --embedding");
    if (o.reduce != "pca") invalid("without --embedding, --reduce pca is required");
    const auto augmented = augment_features(mispredicted_subset(min_max_normalize(*features), *outcomes), *outcomes);
    embedding = pca_embed(augmented, o.dims);
    if (!o.embedding_out.empty()) io::write_file(o.embedding_out, io::encode_embedding_csv(embedding));
  }
  const auto clustering = hdbscan(embedding, o.min_cluster_size, o.min_samples);
  if (!o.out.empty()) io::write_file(o.out, io::encode_clusters_csv(clustering));
  print(out, io::quality_json(clustering));
  return 0;
}

json load_json(const fs::path& path) {
  const auto text = io::read_file(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": offset " + std::to_string(e.byte) + ": invalid JSON");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base.parent_path() / path;
}

int run_faults_sweep(const Options& o, std::ostream& out) {
  const json grid = load_json(o.grid);
  std::vector<NamedEmbedding> embeddings;
  std::vector<std::size_t> mcs;
  std::vector<std::size_t> ms;
  try {
    for (const auto& [name, path] : grid.at("embeddings").items()) {
      embeddings.push_back({name, io::parse_embedding_csv(io::read_file(resolve(o.grid, path.get<std::string>())))});
    }
    mcs = grid.at("min_cluster_sizes").get<std::vector<std::size_t>>();
    if (grid.contains("min_samples")) ms = grid.at("min_samples").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SpecInvalid, o.grid + ": " + e.what());
  }
  if (embeddings.empty() || mcs.empty()) throw Error(ErrorCode::SpecInvalid, "sweep grid is empty");
  const auto rows = sweep(embeddings, mcs, ms, o.threads);
  json result{{"rows", json::array()}};
  for (const auto& row : rows) result["rows"].push_back(io::to_json(row));
  const auto best = select_best(rows);
  result["best"] = best ? json(*best) : json(nullptr);
  print(out, result);
  return 0;
}

int run_faults_count(const Options& o, std::ostream& out) {
  const auto clustering = io::parse_clusters_csv(io::read_file(o.clusters));
  const auto ids = io::parse_id_list(io::read_file(o.sample));
  print(out, {{"faults", count_faults(ids, clustering)}, {"sample_size", ids.size()}});
  return 0;
}

int run_correlate(const Options& o, std::ostream& out) {
  const auto x = io::parse_value_column(io::read_file(o.x));
  const auto y = io::parse_value_column(io::read_file(o.y));
  PValueMethod method = PValueMethod::automatic;
  if (o.p_method == "t") method = PValueMethod::t_approximation;
  else if (o.p_method == "exact") method = PValueMethod::exact;
  else if (o.p_method != "automatic") invalid("unknown p-value method '" + o.p_method + "'");
  print(out, io::to_json(spearman(x, y, method)));
  return 0;
}

// Everything an experiment config can reference, loaded up front.
struct ExperimentInputs {
  std::optional<FeatureMatrix> features;
  std::optional<ActivationTrace> trace;
  std::optional<ActivationProfile> profile;
  std::optional<OutcomeTable> outcomes;
  std::optional<FaultClustering> clustering;
  std::optional<FaultClustering> reference_clusters;
  std::map<std::string, int> labels;
  ExperimentData data;
};

template <typename T>
T config_value(const json& config, const char* key, T fallback) {
  if (!config.contains(key)) return fallback;
  try {
    return config.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SpecInvalid, std::string("config field '") + key + "': " + e.what());
  }
}

MetricConfig metric_from_json(const json& j) {
  MetricConfig m;
  if (j.is_string()) {
    m.name = j.get<std::string>();
    return m;
  }
  if (!j.is_object()) throw Error(ErrorCode::SpecInvalid, "metric must be a name or an object");
  m.name = config_value<std::string>(j, "name", "");
  if (m.name.empty()) throw Error(ErrorCode::SpecInvalid, "metric needs a name");
  m.auto_dedup = config_value(j, "auto_dedup", true);
  try {
    m.ncd = ncd_options(config_value<std::string>(j, "compressor", "bzip2"),
                        config_value<std::string>(j, "ncd_mode", "greedy"), config_value<std::size_t>(j, "exact_limit", 12));
  } catch (const Error& e) {
    throw Error(ErrorCode::SpecInvalid, e.what());
  }
  m.nc_threshold = config_value(j, "threshold", 0.1);
  m.nc_scale_per_layer = config_value(j, "scale_per_layer", true);
  m.kmnc_k = config_value<std::size_t>(j, "k", 1000);
  m.tknc_k = config_value<std::size_t>(j, "k", 3);
  m.surprise.layer = config_value<std::string>(j, "layer", "");
  m.surprise.upper_bound = config_value(j, "upper_bound", 0.0);
  m.surprise.n_buckets = config_value<std::size_t>(j, "buckets", 1000);
  if (!is_diversity_metric(m.name) && !is_coverage_metric(m.name) && !is_reference_cluster_metric(m.name)) {
    throw Error(ErrorCode::SpecInvalid, "unknown metric '" + m.name + "'");
  }
  return m;
}

void load_inputs(const json& config, const fs::path& config_path, ExperimentInputs& in) {
  auto path_of = [&](const char* key) -> std::optional<fs::path> {
    const auto p = config_value<std::string>(config, key, "");
    if (p.empty()) return std::nullopt;
    return resolve(config_path, p);
  };
  if (auto p = path_of("features")) in.features = io::load_features(*p);
  if (auto p = path_of("trace")) in.trace = io::load_trace(*p);
  if (auto p = path_of("profile")) in.profile = io::load_profile(*p);
  if (auto p = path_of("outcomes")) in.outcomes = io::parse_outcomes_csv(io::read_file(*p));
  if (auto p = path_of("clusters")) in.clustering = io::parse_clusters_csv(io::read_file(*p));
  if (auto p = path_of("reference_clusters")) {
    in.reference_clusters = io::parse_clusters_csv(io::read_file(*p));
  }
  if (auto p = path_of("labels")) in.labels = io::parse_labels_csv(io::read_file(*p));
  in.data.features = in.features ? &*in.features : nullptr;
  in.data.trace = in.trace ? &*in.trace : nullptr;
  in.data.profile = in.profile ? &*in.profile : nullptr;
  in.data.outcomes = in.outcomes ? &*in.outcomes : nullptr;
  in.data.clustering = in.clustering ? &*in.clustering : nullptr;
  in.data.reference_clusters = in.reference_clusters ? &*in.reference_clusters : nullptr;
  in.data.threads = config_value<unsigned>(config, "threads", 1);
}

SampleSpec spec_from_json(const json& config, std::uint64_t seed) {
  SampleSpec spec;
  spec.sizes = config_value(config, "sizes", spec.sizes);
  spec.repetitions = config_value(config, "repetitions", spec.repetitions);
  spec.with_replacement = config_value(config, "with_replacement", spec.with_replacement);
  spec.seed = seed;
  return spec;
}

void emit_report(const Options& o, const json& report, std::ostream& out) {
  if (o.out.empty()) {
    print(out, report);
    return;
  }
  io::write_file(o.out, report.dump(2) + "\n");
  print(out, {{"report", o.out}});
}

int run_experiment(const std::string& which, const Options& o, std::ostream& out) {
  const fs::path config_path(o.config);
  const json config = load_json(config_path);
  if (!config.is_object()) throw Error(ErrorCode::SpecInvalid, "experiment config must be a JSON object");
  const std::uint64_t seed = o.seed.value_or(config_value<std::uint64_t>(config, "seed", 0));
  ExperimentInputs in;
  load_inputs(config, config_path, in);

  auto need = [&](bool present, const char* what) {
    if (!present) throw Error(ErrorCode::SpecInvalid, which + " config needs '" + what + "'");
  };
  auto metric = [&](const char* key) {
    need(config.contains(key), key);
    return metric_from_json(config.at(key));
  };

  if (which == "rq1") {
    need(in.features.has_value(), "features");
    need(!in.labels.empty(), "labels");
    Rq1Config rc;
    rc.set_size = config_value(config, "set_size", rc.set_size);
    rc.repetitions = config_value(config, "repetitions", rc.repetitions);
    rc.include_ncd = config_value(config, "include_ncd", rc.include_ncd);
    rc.auto_dedup = config_value(config, "auto_dedup", rc.auto_dedup);
    rc.threads = in.data.threads;
    rc.seed = seed;
    emit_report(o, io::to_json(rq1_class_diversity(*in.features, in.labels, rc)), out);
    return 0;
  }
  const SampleSpec spec = spec_from_json(config, seed);
  if (which == "rq2" || which == "rq3") {
    need(in.clustering.has_value(), "clusters");
    const auto m = metric("metric");
    const bool record = config_value(config, "record_samples", false);
    const auto report = which == "rq2" ? rq2_sample_and_correlate(in.data, m, spec, record)
                                       : rq3_coverage_correlate(in.data, m, spec, record);
    emit_report(o, io::to_json(report), out);
    return 0;
  }
  if (which == "rq5") {
    emit_report(o, io::to_json(rq5_metric_vs_metric(in.data, metric("metric"), metric("metric_b"), spec)), out);
    return 0;
  }
  // rq4
  need(config.contains("metrics") && config.at("metrics").is_array(), "metrics");
  std::vector<MetricConfig> metrics;
  for (const auto& m : config.at("metrics")) metrics.push_back(metric_from_json(m));
  std::optional<double> pre;
  if (config.contains("preprocessing_seconds")) pre = config_value(config, "preprocessing_seconds", 0.0);
  const auto report = rq4_bench(in.data, metrics, spec, pre);
  if (o.out.empty()) {
    print(out, {{"report", io::bench_scores_json(report)}, {"timings", io::bench_timings_json(report)}});
    return 0;
  }
  const std::string timings = o.out + ".timings.json";
  io::write_file(o.out, io::bench_scores_json(report).dump(2) + "\n");
  io::write_file(timings, io::bench_timings_json(report).dump(2) + "\n");
  print(out, {{"report", o.out}, {"timings", timings}});
  return 0;
}

int run_bench(const Options& o, std::ostream& out) {
  const auto fm = io::load_features(o.features);
  ExperimentData data;
  data.features = &fm;
  std::vector<MetricConfig> metrics;
  for (const auto& name : o.metrics) {
    MetricConfig m;
    m.name = name;
    if (!is_diversity_metric(name)) invalid("bench runs diversity metrics only, got '" + name + "'");
    m.ncd = ncd_options(o.compressor, o.ncd_mode, o.exact_limit);
    metrics.push_back(m);
  }
  SampleSpec spec;
  spec.sizes = o.sizes;
  spec.repetitions = o.repetitions;
  spec.seed = o.seed.value_or(0);
  const auto report = rq4_bench(data, metrics, spec);
  print(out, {{"report", io::bench_scores_json(report)}, {"timings", io::bench_timings_json(report)}});
  return 0;
}

int run_formats_convert(const Options& o, std::ostream& out) {
  const auto kind = io::detect_kind(o.input);
  if (kind != io::FileKind::fmat1 && kind != io::FileKind::feature_csv) {
    invalid("formats convert handles feature matrices only, got " + std::string(io::to_string(kind)));
  }
  const auto fm = io::load_features(o.input);
  io::save_features(o.out, fm);
  print(out, {{"in", o.input}, {"out", o.out}, {"rows", fm.rows()}, {"cols", fm.cols()}});
  return 0;
}

int run_formats_validate(const Options& o, std::ostream& out) {
  const auto kind = io::detect_kind(o.input);
  json result{{"file", o.input}, {"kind", std::string(io::to_string(kind))}, {"valid", true}};
  switch (kind) {
    case io::FileKind::fmat1:
    case io::FileKind::feature_csv: {
      const auto fm = io::load_features(o.input);
      result["rows"] = fm.rows();
      result["cols"] = fm.cols();
      break;
    }
    case io::FileKind::atrc1: {
      const auto t = io::load_trace(o.input);
      result["rows"] = t.inputs();
      result["cols"] = t.neurons();
      break;
    }
    case io::FileKind::profile: result["rows"] = io::load_profile(o.input).neurons.size(); break;
    case io::FileKind::outcomes: result["rows"] = io::parse_outcomes_csv(io::read_file(o.input)).size(); break;
    case io::FileKind::clusters: result["rows"] = io::parse_clusters_csv(io::read_file(o.input)).ids.size(); break;
    case io::FileKind::embedding: {
      const auto e = io::parse_embedding_csv(io::read_file(o.input));
      result["rows"] = e.ids.size();
      result["cols"] = e.coordinates.cols();
      break;
    }
  }
  print(out, result);
  return 0;
}

void error_line(std::ostream& err, std::string_view code, std::string_view message) {
  err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err, const std::string& level) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto logger = std::make_shared<spdlog::logger>("dtest", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::from_str(level));
  return logger;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  std::function<int()> action;

  CLI::App app{"Diversity, coverage and fault-estimation metrics for DNN test sets", "dtest"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "Print the version and exit");
  app.add_option("--log-level", o.log_level, "trace|debug|info|warn|error|off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));

  auto add_diversity = [&](const char* name, DiversityMetric metric, const char* help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--features", o.features, "FMAT1 or CSV feature matrix")->required();
    cmd->add_flag("--raw", o.raw, "Score the features as given instead of min-max normalizing them");
    if (metric == DiversityMetric::GD) cmd->add_flag("--no-dedup", o.no_dedup, "Keep duplicate rows");
    if (metric == DiversityMetric::NCD) {
      cmd->add_option("--compressor", o.compressor, "bzip2|gzip|zstd");
      cmd->add_option("--ncd-mode", o.ncd_mode, "exact|greedy");
      cmd->add_option("--exact-limit", o.exact_limit, "Largest multiset scored exhaustively");
    }
    cmd->callback([&, metric] { action = [&, metric] { return run_diversity(o, metric, out); }; });
  };
  add_diversity("gd", DiversityMetric::GD, "Geometric diversity (log-det of the Gram matrix)");
  add_diversity("ncd", DiversityMetric::NCD, "Multiset normalized compression distance");
  add_diversity("std", DiversityMetric::STD, "Norm of per-feature standard deviations");

  auto* coverage_cmd = app.add_subcommand("coverage", "Coverage of an activation trace");
  coverage_cmd->add_option("criterion", o.criterion, "nc|kmnc|nbc|snac|tknc|lsc|dsc")->required();
  coverage_cmd->add_option("--trace", o.trace, "ATRC1 trace")->required();
  coverage_cmd->add_option("--profile", o.profile, "Profile JSON");
  coverage_cmd->add_option("--outcomes", o.outcomes, "Outcomes CSV (predicted classes for lsc/dsc)");
  coverage_cmd->add_option("--threshold", o.threshold, "NC activation threshold");
  coverage_cmd->add_flag("--no-scale", o.no_scale, "NC on raw activations");
  coverage_cmd->add_option("--k", o.k, "KMNC buckets or TKNC top-k");
  coverage_cmd->add_option("--layer", o.layer, "Layer for lsc/dsc");
  coverage_cmd->add_option("--upper-bound", o.upper_bound, "Surprise upper bound");
  coverage_cmd->add_option("--buckets", o.buckets, "Surprise buckets");
  coverage_cmd->callback([&] { action = [&] { return run_coverage(o, out); }; });

  auto* faults_cmd = app.add_subcommand("faults", "Fault estimation by clustering mispredictions");
  faults_cmd->require_subcommand(1);
  auto* cluster_cmd = faults_cmd->add_subcommand("cluster", "Cluster mispredicted inputs");
  cluster_cmd->add_option("--features", o.features, "Feature matrix of the inputs");
  cluster_cmd->add_option("--outcomes", o.outcomes, "Outcomes CSV");
  cluster_cmd->add_option("--embedding", o.embedding, "Precomputed embedding CSV");
  cluster_cmd->add_option("--reduce", o.reduce, "In-core reduction (pca)");
  cluster_cmd->add_option("--dims", o.dims, "PCA dimensions");
  cluster_cmd->add_option("--min-cluster-size", o.min_cluster_size, "HDBSCAN min_cluster_size")->required();
  cluster_cmd->add_option("--min-samples", o.min_samples, "HDBSCAN min_samples (default: min cluster size)");
  cluster_cmd->add_option("--out", o.out, "Write id,cluster CSV here");
  cluster_cmd->add_option("--embedding-out", o.embedding_out, "Write the PCA embedding here");
  cluster_cmd->callback([&] { action = [&] { return run_faults_cluster(o, out); }; });
  auto* sweep_cmd = faults_cmd->add_subcommand("sweep", "Cluster over a hyperparameter grid");
  sweep_cmd->add_option("--grid", o.grid, "Grid JSON")->required();
  sweep_cmd->add_option("--threads", o.threads, "Worker threads");
  sweep_cmd->callback([&] { action = [&] { return run_faults_sweep(o, out); }; });
  auto* count_cmd = faults_cmd->add_subcommand("count", "Count faults hit by a sample");
  count_cmd->add_option("--clusters", o.clusters, "id,cluster CSV")->required();
  count_cmd->add_option("--sample", o.sample, "One id per line")->required();
  count_cmd->callback([&] { action = [&] { return run_faults_count(o, out); }; });

  auto* correlate_cmd = app.add_subcommand("correlate", "Spearman correlation of two value columns");
  correlate_cmd->add_option("--x", o.x, "Values")->required();
  correlate_cmd->add_option("--y", o.y, "Values")->required();
  correlate_cmd->add_option("--p-method", o.p_method, "automatic|t|exact");
  correlate_cmd->callback([&] { action = [&] { return run_correlate(o, out); }; });

  auto* exp_cmd = app.add_subcommand("exp", "Run an experiment");
  exp_cmd->require_subcommand(1);
  for (const char* which : {"rq1", "rq2", "rq3", "rq4", "rq5"}) {
    auto* cmd = exp_cmd->add_subcommand(which, std::string("Experiment ") + which);
    cmd->add_option("--config", o.config, "Experiment JSON")->required();
    cmd->add_option("--seed", o.seed, "Seed (overrides the config)");
    cmd->add_option("--out", o.out, "Report path");
    cmd->callback([&, which] { action = [&, which] { return run_experiment(which, o, out); }; });
  }

  auto* bench_cmd = app.add_subcommand("bench", "Time diversity metrics on repeated samples");
  bench_cmd->add_option("--features", o.features, "Feature matrix")->required();
  bench_cmd->add_option("--metrics", o.metrics, "Metric names")->delimiter(',')->required();
  bench_cmd->add_option("--sizes", o.sizes, "Sample sizes")->delimiter(',')->required();
  bench_cmd->add_option("--repetitions", o.repetitions, "Samples per size");
  bench_cmd->add_option("--seed", o.seed, "Seed");
  bench_cmd->callback([&] { action = [&] { return run_bench(o, out); }; });

  auto* formats_cmd = app.add_subcommand("formats", "Inspect and convert files");
  formats_cmd->require_subcommand(1);
  auto* convert_cmd = formats_cmd->add_subcommand("convert", "Convert a feature matrix between FMAT1 and CSV");
  convert_cmd->add_option("--in", o.input, "Input file")->required();
  convert_cmd->add_option("--out", o.out, "Output file (.csv for CSV, FMAT1 otherwise)")->required();
  convert_cmd->callback([&] { action = [&] { return run_formats_convert(o, out); }; });
  auto* validate_cmd = formats_cmd->add_subcommand("validate", "Check that a file parses");
  validate_cmd->add_option("--in", o.input, "File to check")->required();
  validate_cmd->callback([&] { action = [&] { return run_formats_validate(o, out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    error_line(err, "InvalidArgument", e.what());
    return 1;
  }
  if (version) {
    out << DTEST_VERSION << '\n';
    return 0;
  }
  if (!action) {
    error_line(err, "InvalidArgument", "no subcommand given; see --help");
    return 1;
  }

  const auto logger = make_logger(err, o.log_level);
  try {
    logger->debug("running {}", app.get_subcommands().front()->get_name());
    return action();
  } catch (const Error& e) {
    logger->debug("failed: {}", e.what());
    error_line(err, to_string(e.code()), e.what());
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    error_line(err, "InternalError", e.what());
    return 2;
  }
}

}  // namespace dtest::cli
