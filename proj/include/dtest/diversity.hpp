#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dtest/compression.hpp"
#include "dtest/feature_matrix.hpp"
#include "dtest/gram.hpp"

namespace dtest {

enum class DiversityMetric { GD, NCD, STD };

std::string_view to_string(DiversityMetric metric) noexcept;

struct DiversityScore {
  DiversityMetric metric = DiversityMetric::GD;
  /// GD: log-determinant (may be -inf when degenerate). NCD: in [0, ~1.1].
  /// STD: >= 0.
  double value = 0.0;
  std::size_t set_size = 0;
  bool degenerate = false;
};

/// Log-volume of the parallelepiped spanned by the (normalized) feature rows.
/// With `auto_dedup`, exact duplicate rows are dropped first; `set_size` is
/// the number of rows actually scored. Finite only while rows < features.
DiversityScore geometric_diversity(const FeatureMatrix& matrix, bool auto_dedup = true,
                                   const GramOptions& options = {});
DiversityScore geometric_diversity(const MatrixRef& rows, bool auto_dedup = true,
                                   const GramOptions& options = {});

/// Population standard deviation of every column, combined by the L2 norm.
DiversityScore std_norm(const FeatureMatrix& matrix);
DiversityScore std_norm(const MatrixRef& rows);

enum class NcdMode { exact, greedy };

struct NcdOptions {
  CompressorId compressor = CompressorId::bzip2;
  NcdMode mode = NcdMode::greedy;
  /// Largest multiset scored by full subset enumeration. In greedy mode
  /// smaller sets are still scored exactly; exact mode refuses larger ones.
  std::size_t exact_limit = 12;
};

/// Multiset normalized compression distance of byte strings. The multiset is
/// put in canonical (lexicographic) order before any concatenation, so the
/// score does not depend on the order of `items`.
DiversityScore ncd_multiset(std::span<const std::string> items, const NcdOptions& options = {});

/// NCD over feature rows, each serialized as little-endian f64 values.
DiversityScore ncd_multiset(const FeatureMatrix& matrix, const NcdOptions& options = {});
DiversityScore ncd_multiset(const MatrixRef& rows, const NcdOptions& options = {});

/// Canonical byte encoding of one feature row (little-endian IEEE-754 f64).
std::string serialize_row(const MatrixRef& rows, Eigen::Index row);

}  // namespace dtest
