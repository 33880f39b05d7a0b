#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "dtest/coverage.hpp"
#include "dtest/error.hpp"

namespace dtest {

namespace {

const RowMatrix& training_for(const ActivationProfile& profile, const std::string& layer) {
  auto it = profile.layer_training.find(layer);
  if (it == profile.layer_training.end()) {
    throw Error(ErrorCode::InvalidArgument,
                "profile carries no training activations for layer '" + layer + "'");
  }
  if (static_cast<std::size_t>(it->second.rows()) != profile.class_labels.size()) {
    throw Error(ErrorCode::InvalidArgument, "training activations and class labels disagree in length");
  }
  return it->second;
}

void check_params(const SurpriseParams& params) {
  if (!(params.upper_bound > 0.0) || !std::isfinite(params.upper_bound)) {
    throw Error(ErrorCode::InvalidArgument, "surprise upper bound must be > 0");
  }
  if (params.n_buckets == 0) {
    throw Error(ErrorCode::InvalidArgument, "surprise coverage needs at least one bucket");
  }
}

Eigen::VectorXd layer_row(const ActivationTrace& trace, std::size_t layer, Eigen::Index row) {
  const auto offset = static_cast<Eigen::Index>(trace.layer_offset(layer));
  const auto width = static_cast<Eigen::Index>(trace.layers()[layer].width);
  return trace.activations().row(row).segment(offset, width).transpose().cast<double>();
}

template <typename Model>
std::vector<double> surprises_of(const Model& model, const ActivationTrace& trace,
                                 const std::string& layer, std::span<const int> predicted) {
  if (predicted.size() != trace.inputs()) {
    throw Error(ErrorCode::LengthMismatch, "one predicted class per trace input required");
  }
  const auto l = trace.layer_index(layer);
  std::vector<double> out;
  out.reserve(trace.inputs());
  for (std::size_t i = 0; i < trace.inputs(); ++i) {
    const Eigen::VectorXd x = layer_row(trace, l, static_cast<Eigen::Index>(i));
    out.push_back(model.surprise({x.data(), static_cast<std::size_t>(x.size())}, predicted[i]));
  }
  return out;
}

}  // namespace

LscModel::LscModel(const ActivationProfile& profile, const std::string& layer) {
  const RowMatrix& training = training_for(profile, layer);
  width_ = static_cast<std::size_t>(training.cols());
  if (training.rows() == 0) {
    throw Error(ErrorCode::EmptyClassTrainingSet, "no training activations for layer '" + layer + "'");
  }
  const Eigen::RowVectorXd mean = training.colwise().mean();
  const Eigen::RowVectorXd variance =
      (training.rowwise() - mean).array().square().colwise().sum() /
      static_cast<double>(training.rows());
  for (Eigen::Index j = 0; j < training.cols(); ++j) {
    if (variance(j) >= kMinVariance) kept_.push_back(j);
  }
  if (kept_.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "every feature of layer '" + layer + "' has training variance below 1e-5");
  }
  const auto d = static_cast<double>(kept_.size());

  std::map<int, std::vector<Eigen::Index>> members;
  for (std::size_t i = 0; i < profile.class_labels.size(); ++i) {
    members[profile.class_labels[i]].push_back(static_cast<Eigen::Index>(i));
  }
  for (const auto& [label, rows] : members) {
    ClassDensity density;
    density.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kept_.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      for (std::size_t c = 0; c < kept_.size(); ++c) {
        density.points(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            training(rows[r], kept_[c]);
      }
    }
    // Scott's factor n^(-1/(d+4)) applied to the layer-wide standard
    // deviation of each kept feature (diagonal bandwidth).
    const double factor = std::pow(static_cast<double>(rows.size()), -1.0 / (d + 4.0));
    density.inv_bandwidth.resize(static_cast<Eigen::Index>(kept_.size()));
    double log_h = 0.0;
    for (std::size_t c = 0; c < kept_.size(); ++c) {
      const double h = std::sqrt(variance(kept_[c])) * factor;
      density.inv_bandwidth(static_cast<Eigen::Index>(c)) = 1.0 / h;
      log_h += std::log(h);
    }
    density.log_normalizer = std::log(static_cast<double>(rows.size())) + log_h +
                             0.5 * d * std::log(2.0 * std::numbers::pi);
    classes_.emplace(label, std::move(density));
  }
}

const LscModel::ClassDensity& LscModel::density_for(int predicted_class) const {
  auto it = classes_.find(predicted_class);
  if (it == classes_.end()) {
    throw Error(ErrorCode::EmptyClassTrainingSet,
                "no training activations for class " + std::to_string(predicted_class));
  }
  return it->second;
}

std::vector<double> LscModel::bandwidth(int predicted_class) const {
  const auto& density = density_for(predicted_class);
  std::vector<double> h;
  for (Eigen::Index j = 0; j < density.inv_bandwidth.size(); ++j) h.push_back(1.0 / density.inv_bandwidth(j));
  return h;
}

double LscModel::surprise(std::span<const double> activation, int predicted_class) const {
  if (activation.size() != width_) {
    throw Error(ErrorCode::LengthMismatch, "activation width does not match the layer");
  }
  const auto& density = density_for(predicted_class);
  Eigen::VectorXd x(static_cast<Eigen::Index>(kept_.size()));
  for (std::size_t c = 0; c < kept_.size(); ++c) {
    x(static_cast<Eigen::Index>(c)) = activation[static_cast<std::size_t>(kept_[c])];
  }
  // log-sum-exp over kernels keeps far-away points from underflowing to 0.
  std::vector<double> exponents(static_cast<std::size_t>(density.points.rows()));
  double peak = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < density.points.rows(); ++i) {
    const double q = ((density.points.row(i).transpose() - x).array() * density.inv_bandwidth.array())
                         .square()
                         .sum();
    exponents[static_cast<std::size_t>(i)] = -0.5 * q;
    peak = std::max(peak, -0.5 * q);
  }
  double sum = 0.0;
  for (double e : exponents) sum += std::exp(e - peak);
  const double log_density = peak + std::log(sum) - density.log_normalizer;
  return -log_density;
}

DscModel::DscModel(const ActivationProfile& profile, const std::string& layer)
    : training_(training_for(profile, layer)), labels_(profile.class_labels) {
  std::vector<int> distinct = labels_;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 2) {
    throw Error(ErrorCode::InvalidArgument, "DSC needs training activations of at least two classes");
  }
}

double DscModel::surprise(std::span<const double> activation, int predicted_class) const {
  if (activation.size() != static_cast<std::size_t>(training_.cols())) {
    throw Error(ErrorCode::LengthMismatch, "activation width does not match the layer");
  }
  const Eigen::Map<const Eigen::RowVectorXd> x(activation.data(), training_.cols());
  Eigen::Index nearest = -1;
  double dist_a = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < training_.rows(); ++i) {
    if (labels_[static_cast<std::size_t>(i)] != predicted_class) continue;
    const double d = (training_.row(i) - x).norm();
    if (d < dist_a) {
      dist_a = d;
      nearest = i;
    }
  }
  if (nearest < 0) {
    throw Error(ErrorCode::EmptyClassTrainingSet,
                "no training activations for class " + std::to_string(predicted_class));
  }
  double dist_b = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < training_.rows(); ++i) {
    if (labels_[static_cast<std::size_t>(i)] == predicted_class) continue;
    dist_b = std::min(dist_b, (training_.row(i) - training_.row(nearest)).norm());
  }
  if (dist_a == 0.0) return 0.0;
  return dist_a / dist_b;  // +inf when a coincides with another class's point
}

double surprise_coverage(std::span<const double> surprises, double upper_bound,
                         std::size_t n_buckets) {
  check_params({"", upper_bound, n_buckets});
  std::vector<bool> hit(n_buckets, false);
  for (double s : surprises) {
    if (std::isnan(s)) throw Error(ErrorCode::NonFiniteInput, "surprise value is NaN");
    std::size_t bucket = 0;
    if (s >= upper_bound) {
      bucket = n_buckets - 1;
    } else if (s > 0.0) {
      bucket = std::min(static_cast<std::size_t>(std::floor(s / upper_bound * static_cast<double>(n_buckets))),
                        n_buckets - 1);
    }
    hit[bucket] = true;
  }
  return static_cast<double>(std::count(hit.begin(), hit.end(), true)) /
         static_cast<double>(n_buckets);
}

std::vector<double> lsc_surprises(const LscModel& model, const ActivationTrace& trace,
                                  const std::string& layer, std::span<const int> predicted) {
  return surprises_of(model, trace, layer, predicted);
}

std::vector<double> dsc_surprises(const DscModel& model, const ActivationTrace& trace,
                                  const std::string& layer, std::span<const int> predicted) {
  return surprises_of(model, trace, layer, predicted);
}

CoverageScore lsc(const ActivationTrace& trace, const ActivationProfile& profile,
                  std::span<const int> predicted, const SurpriseParams& params) {
  check_params(params);
  CoverageScore score{CoverageCriterion::LSC, 0.0,
                      {{"upper_bound", params.upper_bound},
                       {"n_buckets", static_cast<double>(params.n_buckets)}},
                      params.layer};
  if (trace.inputs() == 0) return score;
  const LscModel model(profile, params.layer);
  score.params["dropped_features"] = static_cast<double>(model.dropped_features());
  score.value = surprise_coverage(lsc_surprises(model, trace, params.layer, predicted),
                                  params.upper_bound, params.n_buckets);
  return score;
}

CoverageScore dsc(const ActivationTrace& trace, const ActivationProfile& profile,
                  std::span<const int> predicted, const SurpriseParams& params) {
  check_params(params);
  CoverageScore score{CoverageCriterion::DSC, 0.0,
                      {{"upper_bound", params.upper_bound},
                       {"n_buckets", static_cast<double>(params.n_buckets)}},
                      params.layer};
  if (trace.inputs() == 0) return score;
  const DscModel model(profile, params.layer);
  score.value = surprise_coverage(dsc_surprises(model, trace, params.layer, predicted),
                                  params.upper_bound, params.n_buckets);
  return score;
}

}  // namespace dtest
