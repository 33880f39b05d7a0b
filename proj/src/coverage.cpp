#include "dtest/coverage.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "dtest/error.hpp"

namespace dtest {

std::string_view to_string(CoverageCriterion criterion) noexcept {
  switch (criterion) {
    case CoverageCriterion::NC: return "NC";
    case CoverageCriterion::KMNC: return "KMNC";
    case CoverageCriterion::NBC: return "NBC";
    case CoverageCriterion::SNAC: return "SNAC";
    case CoverageCriterion::TKNC: return "TKNC";
    case CoverageCriterion::LSC: return "LSC";
    case CoverageCriterion::DSC: return "DSC";
  }
  return "unknown";
}

std::optional<CoverageCriterion> parse_criterion(std::string_view name) noexcept {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "nc") return CoverageCriterion::NC;
  if (lower == "kmnc") return CoverageCriterion::KMNC;
  if (lower == "nbc") return CoverageCriterion::NBC;
  if (lower == "snac") return CoverageCriterion::SNAC;
  if (lower == "tknc") return CoverageCriterion::TKNC;
  if (lower == "lsc") return CoverageCriterion::LSC;
  if (lower == "dsc") return CoverageCriterion::DSC;
  return std::nullopt;
}

namespace {

void require_inputs(const ActivationTrace& trace, CoverageCriterion criterion) {
  if (trace.inputs() == 0 || trace.neurons() == 0) {
    throw Error(ErrorCode::EmptyTrace,
                std::string(to_string(criterion)) + " needs at least one input and one neuron");
  }
}

double fraction(std::size_t covered, std::size_t total) {
  return static_cast<double>(covered) / static_cast<double>(total);
}

struct CornerCounts {
  std::size_t lower = 0;
  std::size_t upper = 0;
};

CornerCounts corner_counts(const ActivationTrace& trace, const ActivationProfile& profile) {
  const auto ranges = profile.ranges_for(trace);
  const auto& acts = trace.activations();
  CornerCounts counts;
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    const auto column = acts.col(static_cast<Eigen::Index>(j)).cast<double>();
    counts.lower += column.minCoeff() < ranges[j].first ? 1 : 0;
    counts.upper += column.maxCoeff() > ranges[j].second ? 1 : 0;
  }
  return counts;
}

}  // namespace

CoverageScore nc(const ActivationTrace& trace, double threshold, bool scale_per_layer) {
  require_inputs(trace, CoverageCriterion::NC);
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "NC threshold must lie in [0, 1)");
  }
  const auto& acts = trace.activations();
  std::vector<bool> covered(trace.neurons(), false);
  for (Eigen::Index i = 0; i < acts.rows(); ++i) {
    for (std::size_t l = 0; l < trace.layers().size(); ++l) {
      const auto offset = static_cast<Eigen::Index>(trace.layer_offset(l));
      const auto width = static_cast<Eigen::Index>(trace.layers()[l].width);
      const auto layer = acts.row(i).segment(offset, width).cast<double>();
      const double lo = layer.minCoeff();
      const double hi = layer.maxCoeff();
      for (Eigen::Index j = 0; j < width; ++j) {
        double v = layer(j);
        if (scale_per_layer) v = hi > lo ? (v - lo) / (hi - lo) : 0.0;
        if (v > threshold) covered[static_cast<std::size_t>(offset + j)] = true;
      }
    }
  }
  const auto count = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), true));
  return {CoverageCriterion::NC,
          fraction(count, trace.neurons()),
          {{"threshold", threshold}, {"scale_per_layer", scale_per_layer ? 1.0 : 0.0}},
          {}};
}

CoverageScore kmnc(const ActivationTrace& trace, const ActivationProfile& profile, std::size_t k) {
  require_inputs(trace, CoverageCriterion::KMNC);
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "KMNC needs k >= 1");
  const auto ranges = profile.ranges_for(trace);
  const auto& acts = trace.activations();
  std::size_t covered = 0;
  std::vector<bool> hit(k);
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    const auto [low, high] = ranges[j];
    const auto column = acts.col(static_cast<Eigen::Index>(j));
    if (low == high) {
      for (Eigen::Index i = 0; i < column.size(); ++i) {
        if (static_cast<double>(column(i)) == low) {
          ++covered;
          break;
        }
      }
      continue;
    }
    std::fill(hit.begin(), hit.end(), false);
    const double span = high - low;
    for (Eigen::Index i = 0; i < column.size(); ++i) {
      const double v = column(i);
      if (v < low || v > high) continue;
      auto bucket = static_cast<std::size_t>(std::floor((v - low) * static_cast<double>(k) / span));
      bucket = std::min(bucket, k - 1);  // v == high closes the last bucket
      hit[bucket] = true;
    }
    covered += static_cast<std::size_t>(std::count(hit.begin(), hit.end(), true));
  }
  return {CoverageCriterion::KMNC,
          fraction(covered, k * trace.neurons()),
          {{"k", static_cast<double>(k)}},
          {}};
}

CoverageScore nbc(const ActivationTrace& trace, const ActivationProfile& profile) {
  require_inputs(trace, CoverageCriterion::NBC);
  const auto counts = corner_counts(trace, profile);
  return {CoverageCriterion::NBC, fraction(counts.lower + counts.upper, 2 * trace.neurons()), {}, {}};
}

CoverageScore snac(const ActivationTrace& trace, const ActivationProfile& profile) {
  require_inputs(trace, CoverageCriterion::SNAC);
  const auto counts = corner_counts(trace, profile);
  return {CoverageCriterion::SNAC, fraction(counts.upper, trace.neurons()), {}, {}};
}

CoverageScore tknc(const ActivationTrace& trace, std::size_t k) {
  require_inputs(trace, CoverageCriterion::TKNC);
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "TKNC needs k >= 1");
  for (const auto& layer : trace.layers()) {
    if (k > layer.width) {
      throw Error(ErrorCode::KTooLarge, "TKNC k=" + std::to_string(k) + " exceeds width " +
                                            std::to_string(layer.width) + " of layer '" +
                                            layer.name + "'");
    }
  }
  const auto& acts = trace.activations();
  std::vector<bool> covered(trace.neurons(), false);
  std::vector<std::size_t> order;
  for (Eigen::Index i = 0; i < acts.rows(); ++i) {
    for (std::size_t l = 0; l < trace.layers().size(); ++l) {
      const auto offset = trace.layer_offset(l);
      const auto width = trace.layers()[l].width;
      order.resize(width);
      std::iota(order.begin(), order.end(), std::size_t{0});
      auto value = [&](std::size_t j) { return acts(i, static_cast<Eigen::Index>(offset + j)); };
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          return value(a) > value(b) || (value(a) == value(b) && a < b);
                        });
      for (std::size_t r = 0; r < k; ++r) covered[offset + order[r]] = true;
    }
  }
  const auto count = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), true));
  return {CoverageCriterion::TKNC, fraction(count, trace.neurons()), {{"k", static_cast<double>(k)}}, {}};
}

}  // namespace dtest
