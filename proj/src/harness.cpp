#include "dtest/harness.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <numeric>
#include <set>
#include <unordered_map>

#include "dtest/error.hpp"
#include "dtest/parallel.hpp"
#include "dtest/sampling.hpp"

namespace dtest {

void SampleSpec::validate(std::size_t population) const {
  if (sizes.empty()) throw Error(ErrorCode::SpecInvalid, "sample spec lists no sizes");
  if (repetitions < 2) throw Error(ErrorCode::SpecInvalid, "sample spec needs at least 2 repetitions");
  for (auto s : sizes) {
    if (s == 0 || s > population) {
      throw Error(ErrorCode::SpecInvalid, "sample size " + std::to_string(s) + " outside [1, " +
                                              std::to_string(population) + "]");
    }
  }
}

std::vector<std::size_t> draw_sample(std::size_t population, const SampleSpec& spec, std::size_t size_index,
                                     std::size_t repetition) {
  CounterRng rng(spec.seed, sample_stream(size_index, repetition));
  return sample_indices(population, spec.sizes.at(size_index), spec.with_replacement, rng);
}

namespace {

std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

std::vector<std::size_t> unique_sorted(std::span<const std::size_t> sample) {
  std::vector<std::size_t> out(sample.begin(), sample.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

bool is_diversity_metric(const std::string& name) {
  const auto n = upper(name);
  return n == "GD" || n == "STD" || n == "NCD";
}

bool is_coverage_metric(const std::string& name) { return parse_criterion(name).has_value(); }

bool is_reference_cluster_metric(const std::string& name) { return upper(name) == "CLUSTERS"; }

std::vector<std::string> sorted_population(const ExperimentData& data) {
  std::vector<std::string> ids;
  if (data.features != nullptr) {
    ids = data.features->ids();
  } else if (data.trace != nullptr) {
    ids = data.trace->ids();
  } else {
    throw Error(ErrorCode::InvalidArgument, "experiment needs a feature matrix or an activation trace");
  }
  std::sort(ids.begin(), ids.end());
  if (data.features != nullptr && data.trace != nullptr) {
    std::vector<std::string> other = data.trace->ids();
    std::sort(other.begin(), other.end());
    if (other != ids) throw Error(ErrorCode::InvalidArgument, "feature matrix and trace cover different ids");
  }
  return ids;
}

MetricEvaluator::MetricEvaluator(MetricConfig config, const ExperimentData& data,
                                 const std::vector<std::string>& population)
    : config_(std::move(config)), data_(&data) {
  config_.name = upper(config_.name);
  if (is_diversity_metric(config_.name)) {
    if (data.features == nullptr) {
      throw Error(ErrorCode::InvalidArgument, config_.name + " needs a feature matrix");
    }
    const auto& fm = *data.features;
    features_.resize(static_cast<Eigen::Index>(population.size()), fm.values().cols());
    for (std::size_t p = 0; p < population.size(); ++p) {
      const auto row = fm.find(population[p]);
      if (row < 0) throw Error(ErrorCode::InvalidArgument, "feature matrix lacks id '" + population[p] + "'");
      features_.row(static_cast<Eigen::Index>(p)) = fm.values().row(row);
    }
    if (!fm.normalized()) min_max_normalize_in_place(features_);
    return;
  }

  if (is_reference_cluster_metric(config_.name)) {
    if (data.reference_clusters == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "CLUSTERS needs a reference clustering");
    }
    for (const auto& id : population) {
      const auto label = data.reference_clusters->label_of(id);
      if (!label) throw Error(ErrorCode::InvalidArgument, "reference clustering lacks id '" + id + "'");
      reference_labels_.push_back(*label);
    }
    return;
  }

  criterion_ = parse_criterion(config_.name);
  if (!criterion_) throw Error(ErrorCode::SpecInvalid, "unknown metric '" + config_.name + "'");
  if (data.trace == nullptr) throw Error(ErrorCode::InvalidArgument, config_.name + " needs an activation trace");
  const auto& trace = *data.trace;
  std::unordered_map<std::string_view, std::size_t> row_of;
  for (std::size_t i = 0; i < trace.inputs(); ++i) row_of.emplace(trace.ids()[i], i);
  for (const auto& id : population) {
    auto it = row_of.find(id);
    if (it == row_of.end()) throw Error(ErrorCode::InvalidArgument, "trace lacks id '" + id + "'");
    trace_rows_.push_back(it->second);
  }
  const bool needs_profile = *criterion_ != CoverageCriterion::NC && *criterion_ != CoverageCriterion::TKNC;
  if (needs_profile && data.profile == nullptr) {
    throw Error(ErrorCode::InvalidArgument, config_.name + " needs an activation profile");
  }
  if (*criterion_ == CoverageCriterion::LSC || *criterion_ == CoverageCriterion::DSC) {
    if (data.outcomes == nullptr) {
      throw Error(ErrorCode::InvalidArgument, config_.name + " needs the predicted class of every input");
    }
    std::vector<int> predicted;
    for (const auto& id : trace.ids()) {
      const Outcome* o = data.outcomes->find(id);
      if (o == nullptr) throw Error(ErrorCode::InvalidArgument, "no outcome for id '" + id + "'");
      predicted.push_back(o->predicted_class);
    }
    const auto& layer = config_.surprise.layer;
    std::vector<double> by_row;
    if (*criterion_ == CoverageCriterion::LSC) {
      by_row = lsc_surprises(LscModel(*data.profile, layer), trace, layer, predicted);
    } else {
      by_row = dsc_surprises(DscModel(*data.profile, layer), trace, layer, predicted);
    }
    for (auto row : trace_rows_) surprises_.push_back(by_row[row]);
    // Validates upper bound and bucket count before any sample is scored.
    surprise_coverage({}, config_.surprise.upper_bound, config_.surprise.n_buckets);
  }
}

double MetricEvaluator::score(std::span<const std::size_t> sample) const {
  if (!reference_labels_.empty()) {
    std::set<int> touched;
    for (auto p : sample) {
      if (reference_labels_[p] >= 0) touched.insert(reference_labels_[p]);
    }
    return static_cast<double>(touched.size());
  }
  return criterion_ ? coverage(sample) : diversity(sample);
}

double MetricEvaluator::diversity(std::span<const std::size_t> sample) const {
  RowMatrix rows(static_cast<Eigen::Index>(sample.size()), features_.cols());
  for (std::size_t i = 0; i < sample.size(); ++i) {
    rows.row(static_cast<Eigen::Index>(i)) = features_.row(static_cast<Eigen::Index>(sample[i]));
  }
  if (config_.name == "GD") return geometric_diversity(rows, config_.auto_dedup).value;
  if (config_.name == "STD") return std_norm(rows).value;
  return ncd_multiset(rows, config_.ncd).value;
}

double MetricEvaluator::coverage(std::span<const std::size_t> sample) const {
  // Coverage only asks whether an input reached a state, so repeats add nothing.
  const auto positions = unique_sorted(sample);
  if (*criterion_ == CoverageCriterion::LSC || *criterion_ == CoverageCriterion::DSC) {
    std::vector<double> values;
    values.reserve(positions.size());
    for (auto p : positions) values.push_back(surprises_[p]);
    return surprise_coverage(values, config_.surprise.upper_bound, config_.surprise.n_buckets);
  }
  std::vector<std::size_t> rows;
  rows.reserve(positions.size());
  for (auto p : positions) rows.push_back(trace_rows_[p]);
  const ActivationTrace sub = data_->trace->select(rows);
  switch (*criterion_) {
    case CoverageCriterion::NC: return nc(sub, config_.nc_threshold, config_.nc_scale_per_layer).value;
    case CoverageCriterion::KMNC: return kmnc(sub, *data_->profile, config_.kmnc_k).value;
    case CoverageCriterion::NBC: return nbc(sub, *data_->profile).value;
    case CoverageCriterion::SNAC: return snac(sub, *data_->profile).value;
    case CoverageCriterion::TKNC: return tknc(sub, config_.tknc_k).value;
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "unsupported coverage criterion");
}

namespace {

void correlate_into(SizeReport& report, std::span<const double> x, std::span<const double> y) {
  try {
    report.correlation = spearman(x, y);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ZeroVariance) throw;
    report.correlation_error = std::string(to_string(e.code()));
  }
}

std::vector<double> to_double(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

// Fault label per population position; -1 for noise and for inputs the
// clustering does not contain (correctly predicted ones).
std::vector<int> fault_labels(const FaultClustering& clustering, const std::vector<std::string>& population) {
  std::unordered_map<std::string_view, std::size_t> position;
  for (std::size_t p = 0; p < population.size(); ++p) position.emplace(population[p], p);
  std::vector<int> labels(population.size(), -1);
  for (std::size_t i = 0; i < clustering.ids.size(); ++i) {
    auto it = position.find(clustering.ids[i]);
    if (it == position.end()) {
      throw Error(ErrorCode::InvalidArgument,
                  "clustered id '" + clustering.ids[i] + "' is not part of the sampled population");
    }
    labels[it->second] = clustering.labels[i];
  }
  return labels;
}

std::size_t distinct_faults(std::span<const std::size_t> sample, const std::vector<int>& labels) {
  std::set<int> hit;
  for (auto p : sample) {
    if (labels[p] >= 0) hit.insert(labels[p]);
  }
  return hit.size();
}

ExperimentReport run_sampling(const ExperimentData& data, std::string experiment, const MetricConfig& metric,
                              const MetricConfig* metric_b, const SampleSpec& spec, bool record_samples) {
  const auto population = sorted_population(data);
  spec.validate(population.size());
  std::vector<int> labels;
  if (metric_b == nullptr) {
    if (data.clustering == nullptr) throw Error(ErrorCode::InvalidArgument, "fault clustering required");
    labels = fault_labels(*data.clustering, population);
  }
  const MetricEvaluator eval_a(metric, data, population);
  std::optional<MetricEvaluator> eval_b;
  if (metric_b != nullptr) eval_b.emplace(*metric_b, data, population);

  ExperimentReport report;
  report.experiment = std::move(experiment);
  report.metric = eval_a.config().name;
  if (eval_b) report.metric_b = eval_b->config().name;
  report.spec = spec;
  report.population = population.size();

  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    SizeReport size;
    size.size = spec.sizes[si];
    size.scores.resize(spec.repetitions);
    if (eval_b) size.scores_b.resize(spec.repetitions);
    else size.faults.resize(spec.repetitions);
    if (record_samples) size.samples.resize(spec.repetitions);
    parallel_for(spec.repetitions, data.threads, [&](std::size_t rep) {
      const auto sample = draw_sample(population.size(), spec, si, rep);
      size.scores[rep] = eval_a.score(sample);
      if (eval_b) size.scores_b[rep] = eval_b->score(sample);
      else size.faults[rep] = distinct_faults(sample, labels);
      if (record_samples) {
        for (auto p : sample) size.samples[rep].push_back(population[p]);
      }
    });
    if (eval_b) correlate_into(size, size.scores, size.scores_b);
    else correlate_into(size, size.scores, to_double(size.faults));
    report.sizes.push_back(std::move(size));
  }
  return report;
}

}  // namespace

ExperimentReport sample_and_correlate(const ExperimentData& data, const MetricConfig& metric, const SampleSpec& spec,
                                      bool record_samples) {
  return run_sampling(data, "sample", metric, nullptr, spec, record_samples);
}

ExperimentReport rq2_sample_and_correlate(const ExperimentData& data, const MetricConfig& metric,
                                          const SampleSpec& spec, bool record_samples) {
  if (!is_diversity_metric(metric.name) && !is_reference_cluster_metric(metric.name)) {
    throw Error(ErrorCode::SpecInvalid, "rq2 expects a diversity metric or CLUSTERS, got '" + metric.name + "'");
  }
  return run_sampling(data, "rq2", metric, nullptr, spec, record_samples);
}

ExperimentReport rq3_coverage_correlate(const ExperimentData& data, const MetricConfig& metric,
                                        const SampleSpec& spec, bool record_samples) {
  if (!is_coverage_metric(metric.name)) {
    throw Error(ErrorCode::SpecInvalid, "rq3 expects a coverage criterion, got '" + metric.name + "'");
  }
  return run_sampling(data, "rq3", metric, nullptr, spec, record_samples);
}

ExperimentReport rq5_metric_vs_metric(const ExperimentData& data, const MetricConfig& metric_a,
                                      const MetricConfig& metric_b, const SampleSpec& spec) {
  return run_sampling(data, "rq5", metric_a, &metric_b, spec, false);
}

Rq1Report rq1_class_diversity(const FeatureMatrix& features, const std::map<std::string, int>& class_of,
                              const Rq1Config& config) {
  if (config.set_size < 1) throw Error(ErrorCode::SpecInvalid, "rq1 set size must be positive");
  if (config.repetitions < 1) throw Error(ErrorCode::SpecInvalid, "rq1 needs at least one repetition");

  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    auto it = class_of.find(features.ids()[i]);
    if (it == class_of.end()) {
      throw Error(ErrorCode::InvalidArgument, "no class label for id '" + features.ids()[i] + "'");
    }
    members[it->second].push_back(i);
  }
  for (const auto& [cls, rows] : members) {
    if (rows.size() < config.set_size) {
      throw Error(ErrorCode::ClassTooSmall, "class " + std::to_string(cls) + " has " + std::to_string(rows.size()) +
                                                " inputs, fewer than the set size " +
                                                std::to_string(config.set_size));
    }
  }
  const RowMatrix values = features.normalized() ? features.values() : min_max_normalize(features).values();

  std::vector<int> classes;
  for (const auto& [cls, rows] : members) classes.push_back(cls);
  const std::size_t num_classes = classes.size();

  Rq1Report report;
  report.config = config;
  CounterRng class_rng(config.seed, 0);
  report.first_class = classes[static_cast<std::size_t>(class_rng.uniform(num_classes))];

  report.stages.resize(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    auto& stage = report.stages[k];
    stage.k = k + 1;
    stage.gd.resize(config.repetitions);
    stage.std_norm.resize(config.repetitions);
    if (config.include_ncd) stage.ncd.resize(config.repetitions);
    stage.class_counts.resize(config.repetitions);
  }

  parallel_for(config.repetitions, config.threads, [&](std::size_t rep) {
    CounterRng rng(config.seed, rep + 1);
    std::vector<int> order;
    for (int c : classes) {
      if (c != report.first_class) order.push_back(c);
    }
    shuffle(order, rng);
    order.insert(order.begin(), report.first_class);

    // Class -> rows of that class currently in the set.
    std::map<int, std::vector<std::size_t>> set;
    auto draw_new = [&](int cls, std::size_t count) {
      const auto& pool = members.at(cls);
      std::set<std::size_t> taken(set[cls].begin(), set[cls].end());
      std::vector<std::size_t> fresh;
      for (auto r : pool) {
        if (!taken.count(r)) fresh.push_back(r);
      }
      const std::size_t need = count - set[cls].size();
      auto picks = sample_indices(fresh.size(), std::min(need, fresh.size()), false, rng);
      for (auto p : picks) set[cls].push_back(fresh[p]);
      // A class with too few unused members is topped up with repeats.
      while (set[cls].size() < count) set[cls].push_back(pool[rng.uniform(pool.size())]);
    };

    for (std::size_t k = 1; k <= num_classes; ++k) {
      // Share set_size across the k classes as evenly as possible; the
      // classes receiving the remainder are chosen at random.
      std::vector<std::size_t> target(k, config.set_size / k);
      std::vector<std::size_t> slots(k);
      std::iota(slots.begin(), slots.end(), std::size_t{0});
      shuffle(slots, rng);
      for (std::size_t r = 0; r < config.set_size % k; ++r) ++target[slots[r]];

      for (std::size_t c = 0; c + 1 < k; ++c) {
        auto& rows = set[order[c]];
        if (rows.size() >= target[c]) {
          auto keep = sample_indices(rows.size(), target[c], false, rng);
          std::vector<std::size_t> kept;
          for (auto p : keep) kept.push_back(rows[p]);
          rows = std::move(kept);
        } else {
          draw_new(order[c], target[c]);
        }
      }
      draw_new(order[k - 1], target[k - 1]);

      RowMatrix sample(static_cast<Eigen::Index>(config.set_size), values.cols());
      Eigen::Index r = 0;
      auto& stage = report.stages[k - 1];
      for (std::size_t c = 0; c < k; ++c) {
        const auto& rows = set[order[c]];
        stage.class_counts[rep][order[c]] = rows.size();
        for (auto row : rows) sample.row(r++) = values.row(static_cast<Eigen::Index>(row));
      }
      stage.gd[rep] = geometric_diversity(sample, config.auto_dedup).value;
      stage.std_norm[rep] = std_norm(sample).value;
      if (config.include_ncd) stage.ncd[rep] = ncd_multiset(sample, config.ncd).value;
    }
  });
  return report;
}

BenchReport rq4_bench(const ExperimentData& data, std::span<const MetricConfig> metrics, const SampleSpec& spec,
                      std::optional<double> preprocessing_seconds) {
  using Clock = std::chrono::steady_clock;
  const auto population = sorted_population(data);
  spec.validate(population.size());
  if (metrics.empty()) throw Error(ErrorCode::SpecInvalid, "bench needs at least one metric");

  BenchReport report;
  report.spec = spec;
  report.preprocessing_seconds = preprocessing_seconds;
  std::vector<MetricEvaluator> evaluators;
  for (const auto& m : metrics) evaluators.emplace_back(m, data, population);

  // times[m] = every sample's time for metric m, in (size, repetition) order.
  std::vector<std::vector<double>> times(evaluators.size());
  for (std::size_t si = 0; si < spec.sizes.size(); ++si) {
    std::vector<std::vector<std::size_t>> samples;
    for (std::size_t rep = 0; rep < spec.repetitions; ++rep) samples.push_back(draw_sample(population.size(), spec, si, rep));
    for (std::size_t m = 0; m < evaluators.size(); ++m) {
      TimingRow row;
      row.metric = evaluators[m].config().name;
      row.size = spec.sizes[si];
      (void)evaluators[m].score(samples.front());  // warm-up, not recorded
      for (const auto& sample : samples) {
        const auto start = Clock::now();
        row.scores.push_back(evaluators[m].score(sample));
        const std::chrono::duration<double> elapsed = Clock::now() - start;
        row.seconds.push_back(elapsed.count());
        times[m].push_back(elapsed.count());
      }
      report.rows.push_back(std::move(row));
    }
  }
  for (std::size_t a = 0; a < evaluators.size(); ++a) {
    for (std::size_t b = a + 1; b < evaluators.size(); ++b) {
      PairwiseTiming cmp{evaluators[a].config().name, evaluators[b].config().name, std::nullopt, {}};
      try {
        cmp.test = wilcoxon_signed_rank(times[a], times[b]);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::TooFewPairs) throw;
        cmp.error = std::string(to_string(e.code()));
      }
      report.comparisons.push_back(std::move(cmp));
    }
  }
  return report;
}

}  // namespace dtest
