#pragma once

#include <Eigen/Dense>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dtest/feature_matrix.hpp"

namespace dtest {

using ActivationMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LayerInfo {
  std::string name;
  std::size_t width = 0;

  bool operator==(const LayerInfo&) const = default;
};

/// Neuron activations of a set of inputs. Row i holds input i; the columns
/// are the neurons of every layer, concatenated in layer order.
class ActivationTrace {
 public:
  ActivationTrace(std::vector<std::string> ids, std::vector<LayerInfo> layers,
                  ActivationMatrix activations);

  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<LayerInfo>& layers() const noexcept { return layers_; }
  const ActivationMatrix& activations() const noexcept { return activations_; }
  std::size_t inputs() const noexcept { return ids_.size(); }
  std::size_t neurons() const noexcept { return static_cast<std::size_t>(activations_.cols()); }

  /// Column offset of the first neuron of layer `layer`.
  std::size_t layer_offset(std::size_t layer) const { return offsets_.at(layer); }
  /// Index of the layer called `name`; throws InvalidArgument.
  std::size_t layer_index(const std::string& name) const;

  ActivationTrace select(std::span<const std::size_t> rows) const;

 private:
  std::vector<std::string> ids_;
  std::vector<LayerInfo> layers_;
  std::vector<std::size_t> offsets_;
  ActivationMatrix activations_;
};

struct NeuronRange {
  std::string layer;
  std::size_t index = 0;
  double low = 0.0;
  double high = 0.0;
};

/// Training-time reference state for coverage criteria: per-neuron
/// activation ranges plus, for the surprise criteria, the training
/// activations of selected layers and the class label of every training input.
struct ActivationProfile {
  std::vector<NeuronRange> neurons;
  /// Layer name -> training activations (rows aligned with class_labels).
  std::map<std::string, RowMatrix> layer_training;
  /// Layer name -> file the training activations were loaded from.
  std::map<std::string, std::string> layer_training_refs;
  std::vector<int> class_labels;

  /// Throws InvalidArgument when low > high for some neuron or when
  /// training matrices and labels disagree in length.
  void validate() const;

  /// [low, high] for every neuron of `trace`, in trace column order. Throws
  /// InvalidArgument if the profile does not cover a neuron.
  std::vector<std::pair<double, double>> ranges_for(const ActivationTrace& trace) const;
};

/// Profile from training activations: per-neuron min/max over all training
/// inputs, and the training activations of `surprise_layers` kept for LSC/DSC.
ActivationProfile build_profile(const ActivationTrace& training, std::span<const int> class_labels,
                                std::span<const std::string> surprise_layers = {});

}  // namespace dtest
