#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtest/activation.hpp"

namespace dtest {

enum class CoverageCriterion { NC, KMNC, NBC, SNAC, TKNC, LSC, DSC };

std::string_view to_string(CoverageCriterion criterion) noexcept;
std::optional<CoverageCriterion> parse_criterion(std::string_view name) noexcept;

struct CoverageScore {
  CoverageCriterion criterion = CoverageCriterion::NC;
  double value = 0.0;  // in [0, 1]
  /// Hyperparameters actually used, by name.
  std::map<std::string, double> params;
  /// Layer the surprise criteria were computed on (empty otherwise).
  std::string layer;
};

/// Neuron coverage: fraction of neurons whose activation exceeds `threshold`
/// for at least one input. With `scale_per_layer`, activations are min-max
/// scaled within each layer of each input first (constant layers scale to 0).
CoverageScore nc(const ActivationTrace& trace, double threshold = 0.1, bool scale_per_layer = true);

/// k-multisection coverage: every neuron's training range [low, high] is cut
/// into k equal buckets; out-of-range activations cover nothing. A neuron
/// with low == high has one coverable bucket, hit by activations equal to low.
CoverageScore kmnc(const ActivationTrace& trace, const ActivationProfile& profile,
                   std::size_t k = 1000);

/// Neuron boundary coverage: (#neurons with some activation < low +
/// #neurons with some activation > high) / (2 * #neurons).
CoverageScore nbc(const ActivationTrace& trace, const ActivationProfile& profile);

/// Strong neuron activation coverage: #neurons with some activation > high,
/// over #neurons.
CoverageScore snac(const ActivationTrace& trace, const ActivationProfile& profile);

/// Top-k neuron coverage: fraction of neurons ranked among the k largest of
/// their layer for at least one input. Ties go to the lower neuron index.
CoverageScore tknc(const ActivationTrace& trace, std::size_t k = 3);

struct SurpriseParams {
  std::string layer;
  double upper_bound = 0.0;
  std::size_t n_buckets = 1000;
};

/// Likelihood-based surprise. The model is built once per (profile, layer)
/// and is immutable afterwards.
class LscModel {
 public:
  /// Features whose training variance (over the whole layer) is below this
  /// are dropped before density estimation.
  static constexpr double kMinVariance = 1e-5;

  LscModel(const ActivationProfile& profile, const std::string& layer);

  /// -log of the Gaussian kernel density of `activation` (full layer width)
  /// among training inputs of class `predicted_class`.
  double surprise(std::span<const double> activation, int predicted_class) const;

  std::size_t kept_features() const noexcept { return kept_.size(); }
  std::size_t dropped_features() const noexcept { return width_ - kept_.size(); }
  /// Per-feature kernel bandwidth for a class (aligned with the kept features).
  std::vector<double> bandwidth(int predicted_class) const;

 private:
  struct ClassDensity {
    RowMatrix points;               // class training rows, kept features only
    Eigen::VectorXd inv_bandwidth;  // 1 / h_j
    double log_normalizer = 0.0;    // log n_c + sum_j log h_j + d/2 log(2 pi)
  };
  const ClassDensity& density_for(int predicted_class) const;

  std::size_t width_ = 0;
  std::vector<Eigen::Index> kept_;
  std::map<int, ClassDensity> classes_;
};

/// Distance-based surprise: ||x - a|| / ||a - b|| with a the nearest training
/// activation of the predicted class and b the training activation of any
/// other class nearest to a.
class DscModel {
 public:
  DscModel(const ActivationProfile& profile, const std::string& layer);

  double surprise(std::span<const double> activation, int predicted_class) const;

 private:
  RowMatrix training_;
  std::vector<int> labels_;
};

/// Fraction of the n_buckets equal-width buckets of [0, upper_bound] hit by
/// at least one surprise value. Values beyond either end are clamped into
/// the first or last bucket.
double surprise_coverage(std::span<const double> surprises, double upper_bound,
                         std::size_t n_buckets);

/// `predicted` holds the predicted class of every trace input.
CoverageScore lsc(const ActivationTrace& trace, const ActivationProfile& profile,
                  std::span<const int> predicted, const SurpriseParams& params);
CoverageScore dsc(const ActivationTrace& trace, const ActivationProfile& profile,
                  std::span<const int> predicted, const SurpriseParams& params);

/// Surprise of every input of `trace` on `layer`, in input order.
std::vector<double> lsc_surprises(const LscModel& model, const ActivationTrace& trace,
                                  const std::string& layer, std::span<const int> predicted);
std::vector<double> dsc_surprises(const DscModel& model, const ActivationTrace& trace,
                                  const std::string& layer, std::span<const int> predicted);

}  // namespace dtest
