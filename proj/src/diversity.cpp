#include "dtest/diversity.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <unordered_map>

#include "dtest/error.hpp"

namespace dtest {

std::string_view to_string(DiversityMetric metric) noexcept {
  switch (metric) {
    case DiversityMetric::GD: return "GD";
    case DiversityMetric::NCD: return "NCD";
    case DiversityMetric::STD: return "STD";
  }
  return "unknown";
}

DiversityScore geometric_diversity(const MatrixRef& rows, bool auto_dedup,
                                   const GramOptions& options) {
  DiversityScore score{DiversityMetric::GD, 0.0, 0, false};
  GramLogDet gram;
  if (auto_dedup) {
    const auto kept = dedup_row_indices(rows);
    RowMatrix unique(static_cast<Eigen::Index>(kept.size()), rows.cols());
    for (std::size_t i = 0; i < kept.size(); ++i) {
      unique.row(static_cast<Eigen::Index>(i)) = rows.row(static_cast<Eigen::Index>(kept[i]));
    }
    score.set_size = kept.size();
    if (score.set_size == 0) throw Error(ErrorCode::EmptySet, "no rows to score");
    gram = gram_log_det(unique, options);
  } else {
    score.set_size = static_cast<std::size_t>(rows.rows());
    if (score.set_size == 0) throw Error(ErrorCode::EmptySet, "no rows to score");
    gram = gram_log_det(rows, options);
  }
  score.value = gram.log_det;
  score.degenerate = gram.rank_deficient;
  return score;
}

DiversityScore geometric_diversity(const FeatureMatrix& matrix, bool auto_dedup,
                                   const GramOptions& options) {
  return geometric_diversity(matrix.values(), auto_dedup, options);
}

DiversityScore std_norm(const MatrixRef& rows) {
  if (rows.rows() == 0) throw Error(ErrorCode::EmptySet, "no rows to score");
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  double sum_of_variances = 0.0;
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    sum_of_variances += (rows.col(j).array() - mean(j)).square().sum() /
                        static_cast<double>(rows.rows());
  }
  // ||(sigma_1, ..., sigma_m)||_2 = sqrt(sum_j sigma_j^2)
  return {DiversityMetric::STD, std::sqrt(sum_of_variances),
          static_cast<std::size_t>(rows.rows()), false};
}

DiversityScore std_norm(const FeatureMatrix& matrix) { return std_norm(matrix.values()); }

std::string serialize_row(const MatrixRef& rows, Eigen::Index row) {
  std::string bytes(static_cast<std::size_t>(rows.cols()) * 8, '\0');
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double v = rows(row, j);
    std::uint64_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    for (int b = 0; b < 8; ++b) {
      bytes[static_cast<std::size_t>(j) * 8 + static_cast<std::size_t>(b)] =
          static_cast<char>((bits >> (8 * b)) & 0xffU);
    }
  }
  return bytes;
}

namespace {

using Subset = std::vector<std::uint32_t>;  // ascending indices into the sorted items

/// Memoized C(Y): compressed length of the concatenation of a sub-multiset.
class CompressionTable {
 public:
  CompressionTable(std::vector<std::string> items, CompressorId compressor)
      : items_(std::move(items)), compressor_(compressor) {}

  std::size_t size() const { return items_.size(); }

  std::size_t compressed(const Subset& subset) {
    std::string key(reinterpret_cast<const char*>(subset.data()),
                    subset.size() * sizeof(std::uint32_t));
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    std::string joined;
    for (auto i : subset) joined += items_[i];
    const auto c = compressed_size(joined, compressor_);
    memo_.emplace(std::move(key), c);
    return c;
  }

  /// NCD_1(Y) = (C(Y) - min_y C({y})) / max_y C(Y \ {y}).
  double ncd1(const Subset& subset) {
    std::size_t min_single = SIZE_MAX;
    std::size_t max_without = 0;
    Subset without;
    for (std::size_t k = 0; k < subset.size(); ++k) {
      min_single = std::min(min_single, compressed({subset[k]}));
      without.assign(subset.begin(), subset.end());
      without.erase(without.begin() + static_cast<std::ptrdiff_t>(k));
      max_without = std::max(max_without, compressed(without));
    }
    const double whole = static_cast<double>(compressed(subset));
    return (whole - static_cast<double>(min_single)) / static_cast<double>(max_without);
  }

 private:
  std::vector<std::string> items_;
  CompressorId compressor_;
  std::unordered_map<std::string, std::size_t> memo_;
};

double ncd_exact(CompressionTable& table) {
  const auto n = static_cast<std::uint32_t>(table.size());
  double best = -std::numeric_limits<double>::infinity();
  Subset subset;
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    if (std::popcount(mask) < 2) continue;
    subset.clear();
    for (std::uint32_t i = 0; i < n; ++i) {
      if (mask & (std::uint64_t{1} << i)) subset.push_back(i);
    }
    best = std::max(best, table.ncd1(subset));
  }
  return best;
}

// Steepest-ascent removal path from the full multiset, plus every pair.
double ncd_greedy(CompressionTable& table) {
  const auto n = static_cast<std::uint32_t>(table.size());
  Subset current(n);
  for (std::uint32_t i = 0; i < n; ++i) current[i] = i;
  double best = table.ncd1(current);
  while (current.size() > 2) {
    double step_best = -std::numeric_limits<double>::infinity();
    Subset step_subset;
    Subset candidate;
    for (std::size_t k = 0; k < current.size(); ++k) {
      candidate.assign(current.begin(), current.end());
      candidate.erase(candidate.begin() + static_cast<std::ptrdiff_t>(k));
      const double value = table.ncd1(candidate);
      if (value > step_best) {
        step_best = value;
        step_subset = candidate;
      }
    }
    best = std::max(best, step_best);
    current = std::move(step_subset);
  }
  for (std::uint32_t a = 0; a < n; ++a) {
    for (std::uint32_t b = a + 1; b < n; ++b) best = std::max(best, table.ncd1({a, b}));
  }
  return best;
}

}  // namespace

DiversityScore ncd_multiset(std::span<const std::string> items, const NcdOptions& options) {
  if (items.size() < 2) {
    throw Error(ErrorCode::SetTooSmall, "NCD needs at least two elements");
  }
  const bool exact = items.size() <= options.exact_limit;
  if (options.mode == NcdMode::exact && !exact) {
    throw Error(ErrorCode::InvalidArgument,
                "exact NCD limited to " + std::to_string(options.exact_limit) +
                    " elements; use greedy mode or raise the limit");
  }
  if (exact && items.size() > 30) {
    throw Error(ErrorCode::InvalidArgument, "exact NCD limit must not exceed 30");
  }
  std::vector<std::string> sorted(items.begin(), items.end());
  std::sort(sorted.begin(), sorted.end());
  CompressionTable table(std::move(sorted), options.compressor);
  const double value = exact ? ncd_exact(table) : ncd_greedy(table);
  return {DiversityMetric::NCD, value, items.size(), false};
}

DiversityScore ncd_multiset(const MatrixRef& rows, const NcdOptions& options) {
  std::vector<std::string> items;
  items.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) items.push_back(serialize_row(rows, i));
  return ncd_multiset(items, options);
}

DiversityScore ncd_multiset(const FeatureMatrix& matrix, const NcdOptions& options) {
  return ncd_multiset(matrix.values(), options);
}

}  // namespace dtest
