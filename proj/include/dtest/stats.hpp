#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace dtest {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

enum class PValueMethod {
  automatic,        // exact permutation for n <= 9, t-approximation above
  t_approximation,  // Student-t with n - 2 degrees of freedom
  exact,            // full permutation distribution (n <= 10)
};

std::string_view to_string(PValueMethod method) noexcept;

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  bool significant = false;  // p_value <= 0.05
  PValueMethod method = PValueMethod::t_approximation;
};

inline constexpr double kSignificanceLevel = 0.05;
inline constexpr std::size_t kExactSpearmanLimit = 9;

/// Spearman rank correlation with a two-sided p-value.
/// Throws LengthMismatch, InvalidArgument (n < 3) and ZeroVariance (one of
/// the inputs is constant).
CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           PValueMethod method = PValueMethod::automatic);

struct WilcoxonResult {
  double statistic = 0.0;  // min(W+, W-)
  double p_value = 1.0;
  std::size_t n_effective = 0;
  bool exact = false;
};

inline constexpr std::size_t kExactWilcoxonLimit = 20;
inline constexpr std::size_t kMinWilcoxonPairs = 5;

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped; fewer than 5 remaining pairs throw TooFewPairs.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b);

}  // namespace dtest
