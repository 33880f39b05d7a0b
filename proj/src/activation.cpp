#include "dtest/activation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "dtest/error.hpp"

namespace dtest {

ActivationTrace::ActivationTrace(std::vector<std::string> ids, std::vector<LayerInfo> layers,
                                 ActivationMatrix activations)
    : ids_(std::move(ids)), layers_(std::move(layers)), activations_(std::move(activations)) {
  std::size_t total = 0;
  std::unordered_set<std::string> names;
  for (const auto& layer : layers_) {
    if (layer.width == 0) {
      throw Error(ErrorCode::InvalidArgument, "layer '" + layer.name + "' has no neurons");
    }
    if (!names.insert(layer.name).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate layer '" + layer.name + "'");
    }
    offsets_.push_back(total);
    total += layer.width;
  }
  if (static_cast<std::size_t>(activations_.cols()) != total ||
      static_cast<std::size_t>(activations_.rows()) != ids_.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "activation matrix is " + std::to_string(activations_.rows()) + "x" +
                    std::to_string(activations_.cols()) + ", expected " +
                    std::to_string(ids_.size()) + "x" + std::to_string(total));
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate id '" + id + "'");
    }
  }
  if (!activations_.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "activation trace has non-finite values");
  }
}

std::size_t ActivationTrace::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].name == name) return i;
  }
  throw Error(ErrorCode::InvalidArgument, "trace has no layer '" + name + "'");
}

ActivationTrace ActivationTrace::select(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids;
  ids.reserve(rows.size());
  ActivationMatrix values(static_cast<Eigen::Index>(rows.size()), activations_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ids.push_back(ids_.at(rows[r]));
    values.row(static_cast<Eigen::Index>(r)) = activations_.row(static_cast<Eigen::Index>(rows[r]));
  }
  return ActivationTrace(std::move(ids), layers_, std::move(values));
}

void ActivationProfile::validate() const {
  for (const auto& n : neurons) {
    if (!(n.low <= n.high)) {
      throw Error(ErrorCode::InvalidArgument, "neuron " + n.layer + "[" +
                                                  std::to_string(n.index) +
                                                  "] has low > high");
    }
  }
  for (const auto& [layer, matrix] : layer_training) {
    if (static_cast<std::size_t>(matrix.rows()) != class_labels.size()) {
      throw Error(ErrorCode::InvalidArgument,
                  "training activations of layer '" + layer + "' have " +
                      std::to_string(matrix.rows()) + " rows but there are " +
                      std::to_string(class_labels.size()) + " class labels");
    }
  }
}

std::vector<std::pair<double, double>> ActivationProfile::ranges_for(
    const ActivationTrace& trace) const {
  std::map<std::pair<std::string, std::size_t>, const NeuronRange*> lookup;
  for (const auto& n : neurons) lookup[{n.layer, n.index}] = &n;
  std::vector<std::pair<double, double>> ranges;
  ranges.reserve(trace.neurons());
  for (const auto& layer : trace.layers()) {
    for (std::size_t i = 0; i < layer.width; ++i) {
      auto it = lookup.find({layer.name, i});
      if (it == lookup.end()) {
        throw Error(ErrorCode::InvalidArgument, "profile does not cover neuron " + layer.name +
                                                    "[" + std::to_string(i) + "]");
      }
      ranges.emplace_back(it->second->low, it->second->high);
    }
  }
  return ranges;
}

ActivationProfile build_profile(const ActivationTrace& training, std::span<const int> class_labels,
                                std::span<const std::string> surprise_layers) {
  if (training.inputs() == 0) {
    throw Error(ErrorCode::EmptyTrace, "cannot build a profile from an empty training trace");
  }
  if (class_labels.size() != training.inputs()) {
    throw Error(ErrorCode::LengthMismatch, "one class label per training input required");
  }
  ActivationProfile profile;
  const auto& acts = training.activations();
  for (std::size_t l = 0; l < training.layers().size(); ++l) {
    const auto& layer = training.layers()[l];
    const auto offset = static_cast<Eigen::Index>(training.layer_offset(l));
    for (std::size_t i = 0; i < layer.width; ++i) {
      const auto column = acts.col(offset + static_cast<Eigen::Index>(i));
      profile.neurons.push_back(
          {layer.name, i, static_cast<double>(column.minCoeff()), static_cast<double>(column.maxCoeff())});
    }
  }
  for (const auto& name : surprise_layers) {
    const auto l = training.layer_index(name);
    const auto offset = static_cast<Eigen::Index>(training.layer_offset(l));
    const auto width = static_cast<Eigen::Index>(training.layers()[l].width);
    profile.layer_training[name] =
        acts.middleCols(offset, width).cast<double>();
  }
  profile.class_labels.assign(class_labels.begin(), class_labels.end());
  return profile;
}

}  // namespace dtest
