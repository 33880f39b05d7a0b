#include "dtest/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "dtest/error.hpp"

namespace dtest {

std::string_view to_string(PValueMethod method) noexcept {
  switch (method) {
    case PValueMethod::automatic: return "automatic";
    case PValueMethod::t_approximation: return "t";
    case PValueMethod::exact: return "exact";
  }
  return "unknown";
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1..j
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

namespace {

std::vector<double> centered(std::vector<double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  for (double& x : v) x -= mean;
  return v;
}

double norm(const std::vector<double>& v) {
  return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

// Share of all n! pairings of the y-ranks with the x-ranks whose |rho| is at
// least the observed one.
double permutation_p_value(const std::vector<double>& rx, std::vector<double> ry, double scale, double rho) {
  const double threshold = std::abs(rho) - 1e-12;
  std::sort(ry.begin(), ry.end());
  std::size_t extreme = 0;
  std::size_t total = 0;
  do {
    const double r = std::inner_product(rx.begin(), rx.end(), ry.begin(), 0.0) / scale;
    if (std::abs(r) >= threshold) ++extreme;
    ++total;
  } while (std::next_permutation(ry.begin(), ry.end()));
  // next_permutation skips repeated arrangements of tied ranks; each distinct
  // arrangement stands for the same number of raw permutations, so the ratio
  // is unchanged.
  return static_cast<double>(extreme) / static_cast<double>(total);
}

double t_p_value(double rho, std::size_t n) {
  if (std::abs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = std::abs(rho) * std::sqrt(df / (1.0 - rho * rho));
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
}

}  // namespace

CorrelationResult spearman(std::span<const double> x, std::span<const double> y, PValueMethod method) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::LengthMismatch, "spearman needs equally long inputs (" + std::to_string(x.size()) +
                                               " vs " + std::to_string(y.size()) + ")");
  }
  const std::size_t n = x.size();
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "spearman needs at least 3 pairs");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::isnan(x[i]) || std::isnan(y[i])) throw Error(ErrorCode::NonFiniteInput, "spearman input is NaN");
  }
  const auto rx = centered(average_ranks(x));
  const auto ry = centered(average_ranks(y));
  const double nx = norm(rx);
  const double ny = norm(ry);
  if (nx == 0.0 || ny == 0.0) throw Error(ErrorCode::ZeroVariance, "spearman input is constant");
  const double scale = nx * ny;
  const double rho = std::clamp(std::inner_product(rx.begin(), rx.end(), ry.begin(), 0.0) / scale, -1.0, 1.0);

  if (method == PValueMethod::automatic) {
    method = n <= kExactSpearmanLimit ? PValueMethod::exact : PValueMethod::t_approximation;
  }
  if (method == PValueMethod::exact && n > kExactSpearmanLimit + 1) {
    throw Error(ErrorCode::InvalidArgument, "exact spearman p-value limited to n <= 10");
  }
  CorrelationResult result;
  result.rho = rho;
  result.n = n;
  result.method = method;
  result.p_value = method == PValueMethod::exact ? permutation_p_value(rx, ry, scale, rho) : t_p_value(rho, n);
  result.significant = result.p_value <= kSignificanceLevel;
  return result;
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::LengthMismatch, "wilcoxon needs paired samples");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (std::isnan(d)) throw Error(ErrorCode::NonFiniteInput, "wilcoxon input is NaN");
    if (d != 0.0) diffs.push_back(d);
  }
  const std::size_t n = diffs.size();
  if (n < kMinWilcoxonPairs) {
    throw Error(ErrorCode::TooFewPairs, std::to_string(n) + " non-zero differences, need " +
                                            std::to_string(kMinWilcoxonPairs));
  }
  std::vector<double> magnitudes(n);
  std::transform(diffs.begin(), diffs.end(), magnitudes.begin(), [](double d) { return std::abs(d); });
  const auto ranks = average_ranks(magnitudes);
  double w_plus = 0.0;
  double w_minus = 0.0;
  for (std::size_t i = 0; i < n; ++i) (diffs[i] > 0 ? w_plus : w_minus) += ranks[i];

  WilcoxonResult result;
  result.statistic = std::min(w_plus, w_minus);
  result.n_effective = n;

  if (n <= kExactWilcoxonLimit) {
    // Average ranks are multiples of 1/2, so doubled ranks are integers and
    // the null distribution of 2W+ is a subset-sum count.
    std::vector<std::size_t> doubled(n);
    std::size_t total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
      total += doubled[i];
    }
    std::vector<double> ways(total + 1, 0.0);
    ways[0] = 1.0;
    for (auto r : doubled) {
      for (std::size_t s = total; s >= r; --s) {
        ways[s] += ways[s - r];
        if (s == r) break;
      }
    }
    const auto w2 = static_cast<std::size_t>(std::llround(2.0 * result.statistic));
    double below = 0.0;
    for (std::size_t s = 0; s <= w2; ++s) below += ways[s];
    result.p_value = std::min(1.0, 2.0 * below / std::ldexp(1.0, static_cast<int>(n)));
    result.exact = true;
    return result;
  }

  // Normal approximation with tie and continuity corrections.
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double tie_term = 0.0;
  std::vector<double> sorted = magnitudes;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }
  const double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
  const double z = std::max(0.0, std::abs(result.statistic - mean) - 0.5) / std::sqrt(variance);
  const boost::math::normal standard;
  result.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(standard, z)));
  return result;
}

}  // namespace dtest
