#include "oracles.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>

namespace oracle {

double cofactor_det(const Matrix& a) {
  const auto n = a.rows();
  if (n == 0) return 1.0;
  if (n == 1) return a(0, 0);
  double det = 0.0;
  for (Eigen::Index col = 0; col < n; ++col) {
    Matrix minor(n - 1, n - 1);
    for (Eigen::Index r = 1; r < n; ++r) {
      Eigen::Index c2 = 0;
      for (Eigen::Index c = 0; c < n; ++c) {
        if (c == col) continue;
        minor(r - 1, c2++) = a(r, c);
      }
    }
    const double sign = col % 2 == 0 ? 1.0 : -1.0;
    det += sign * a(0, col) * cofactor_det(minor);
  }
  return det;
}

double distance_to_span(const Matrix& s, const Eigen::RowVectorXd& v) {
  using Vec = std::vector<long double>;
  const auto m = static_cast<std::size_t>(v.size());
  std::vector<Vec> basis;
  auto project_out = [&](Vec& w) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& q : basis) {
        long double dot = 0;
        for (std::size_t j = 0; j < m; ++j) dot += w[j] * q[j];
        for (std::size_t j = 0; j < m; ++j) w[j] -= dot * q[j];
      }
    }
  };
  auto norm = [&](const Vec& w) {
    long double acc = 0;
    for (auto x : w) acc += x * x;
    return std::sqrt(acc);
  };
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    Vec w(m);
    for (std::size_t j = 0; j < m; ++j) w[j] = s(r, static_cast<Eigen::Index>(j));
    const long double original = norm(w);
    project_out(w);
    const long double len = norm(w);
    if (len <= 1e-12L * std::max<long double>(original, 1.0L)) continue;
    for (auto& x : w) x /= len;
    basis.push_back(std::move(w));
  }
  Vec w(m);
  for (std::size_t j = 0; j < m; ++j) w[j] = v(static_cast<Eigen::Index>(j));
  project_out(w);
  return static_cast<double>(norm(w));
}

namespace {

struct OracleCluster {
  double birth = 0.0;
  std::vector<std::size_t> children;
  std::vector<std::pair<std::size_t, double>> fallen;  // point, lambda
  std::size_t size = 0;
  std::size_t parent = 0;
};

}  // namespace

std::vector<int> brute_force_hdbscan(const Matrix& points, std::size_t mcs, std::size_t ms) {
  const auto n = static_cast<std::size_t>(points.rows());
  auto d = [&](std::size_t i, std::size_t j) {
    return (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm();
  };
  std::vector<double> core(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> all;
    for (std::size_t j = 0; j < n; ++j) all.push_back(i == j ? 0.0 : d(i, j));
    std::sort(all.begin(), all.end());
    core[i] = all[ms - 1];
  }
  auto mrd = [&](std::size_t i, std::size_t j) { return std::max({core[i], core[j], d(i, j)}); };
  auto to_lambda = [](double w) { return w > 0.0 ? 1.0 / w : DBL_MAX; };

  // Components of `set` using only edges strictly lighter than `level`
  // (or of weight <= level when `inclusive`).
  auto components = [&](const std::vector<std::size_t>& set, double level, bool inclusive) {
    std::vector<std::vector<std::size_t>> comps;
    std::vector<bool> seen(set.size(), false);
    for (std::size_t s = 0; s < set.size(); ++s) {
      if (seen[s]) continue;
      std::vector<std::size_t> comp;
      std::vector<std::size_t> todo{s};
      seen[s] = true;
      while (!todo.empty()) {
        const auto a = todo.back();
        todo.pop_back();
        comp.push_back(set[a]);
        for (std::size_t b = 0; b < set.size(); ++b) {
          if (seen[b]) continue;
          const double w = mrd(set[a], set[b]);
          if (inclusive ? w <= level : w < level) {
            seen[b] = true;
            todo.push_back(b);
          }
        }
      }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
    return comps;
  };

  std::vector<OracleCluster> clusters(1);
  clusters[0].size = n;
  std::function<void(std::vector<std::size_t>, std::size_t)> grow = [&](std::vector<std::size_t> set,
                                                                       std::size_t id) {
    while (true) {
      // Lowest level at which the set is connected.
      std::set<double> weights;
      for (std::size_t a = 0; a < set.size(); ++a) {
        for (std::size_t b = a + 1; b < set.size(); ++b) weights.insert(mrd(set[a], set[b]));
      }
      double level = 0.0;
      for (double w : weights) {
        if (components(set, w, true).size() == 1) {
          level = w;
          break;
        }
      }
      const double lambda = to_lambda(level);
      const auto comps = components(set, level, false);
      std::vector<std::vector<std::size_t>> big;
      for (const auto& c : comps) {
        if (c.size() >= mcs) {
          big.push_back(c);
        } else {
          for (auto p : c) clusters[id].fallen.push_back({p, lambda});
        }
      }
      if (big.empty()) return;
      if (big.size() == 1) {
        set = big.front();
        continue;
      }
      for (auto& c : big) {
        const std::size_t child = clusters.size();
        clusters.push_back({lambda, {}, {}, c.size(), id});
        clusters[id].children.push_back(child);
        grow(c, child);
      }
      return;
    }
  };
  std::vector<std::size_t> everyone(n);
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});
  grow(everyone, 0);

  std::vector<double> stability(clusters.size(), 0.0);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& [p, l] : clusters[c].fallen) stability[c] += l - clusters[c].birth;
    for (auto ch : clusters[c].children) {
      stability[c] += (clusters[ch].birth - clusters[c].birth) * static_cast<double>(clusters[ch].size);
    }
  }

  // Every cut of the subtree under c: either {c} or one cut per child.
  using Cut = std::vector<std::size_t>;
  std::function<std::vector<Cut>(std::size_t)> cuts = [&](std::size_t c) {
    std::vector<Cut> below{{}};
    for (auto ch : clusters[c].children) {
      std::vector<Cut> next;
      for (const auto& prefix : below) {
        for (const auto& tail : cuts(ch)) {
          Cut joined = prefix;
          joined.insert(joined.end(), tail.begin(), tail.end());
          next.push_back(std::move(joined));
        }
      }
      below = std::move(next);
    }
    std::vector<Cut> out{{c}};
    if (!clusters[c].children.empty()) out.insert(out.end(), below.begin(), below.end());
    return out;
  };
  Cut best;
  double best_value = -1.0;
  if (!clusters[0].children.empty()) {
    auto all = cuts(0);
    all.erase(all.begin());  // the root alone is not a valid selection
    for (const auto& cut : all) {
      double value = 0.0;
      for (auto c : cut) value += stability[c];
      if (value > best_value || (value == best_value && cut.size() < best.size())) {
        best_value = value;
        best = cut;
      }
    }
  }

  std::vector<int> raw(n, -1);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (const auto& [p, l] : clusters[c].fallen) {
      std::size_t up = c;
      while (true) {
        if (std::find(best.begin(), best.end(), up) != best.end()) {
          raw[p] = static_cast<int>(up);
          break;
        }
        if (up == 0) break;
        up = clusters[up].parent;
      }
    }
  }
  std::map<int, int> relabel;
  std::vector<int> out(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (raw[i] < 0) continue;
    out[i] = relabel.try_emplace(raw[i], static_cast<int>(relabel.size())).first->second;
  }
  return out;
}

bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab;
  std::map<int, int> ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] < 0) != (b[i] < 0)) return false;
    if (a[i] < 0) continue;
    if (ab.try_emplace(a[i], b[i]).first->second != b[i]) return false;
    if (ba.try_emplace(b[i], a[i]).first->second != a[i]) return false;
  }
  return true;
}

namespace {

std::vector<double> ranks_of(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0;
    double equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      else if (w == v[i]) ++equal;
    }
    r[i] = less + (equal + 1.0) / 2.0;
  }
  return r;
}

void signed_ranks(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& ranks,
                  std::vector<bool>& positive) {
  std::vector<double> mags;
  positive.clear();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    if (diff == 0.0) continue;
    mags.push_back(std::fabs(diff));
    positive.push_back(diff > 0);
  }
  ranks = ranks_of(mags);
}

}  // namespace

double wilcoxon_statistic(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> ranks;
  std::vector<bool> positive;
  signed_ranks(a, b, ranks, positive);
  double plus = 0;
  double minus = 0;
  for (std::size_t i = 0; i < ranks.size(); ++i) (positive[i] ? plus : minus) += ranks[i];
  return std::min(plus, minus);
}

double wilcoxon_enumerated_p(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> ranks;
  std::vector<bool> positive;
  signed_ranks(a, b, ranks, positive);
  const double w = wilcoxon_statistic(a, b);
  const std::size_t n = ranks.size();
  std::uint64_t count = 0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double t = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) t += ranks[i];
    }
    if (t <= w + 1e-9) ++count;
  }
  return std::min(1.0, 2.0 * static_cast<double>(count) / std::ldexp(1.0, static_cast<int>(n)));
}

double spearman_formula(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks_of(x);
  const auto ry = ranks_of(y);
  const double n = static_cast<double>(x.size());
  double d2 = 0;
  for (std::size_t i = 0; i < x.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

double spearman_enumerated_p(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks_of(x);
  auto ry = ranks_of(y);
  const double n = static_cast<double>(x.size());
  const double observed = std::fabs(spearman_formula(x, y));
  std::uint64_t extreme = 0;
  std::uint64_t total = 0;
  auto visit = [&] {
    double d2 = 0;
    for (std::size_t i = 0; i < rx.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
    const double rho = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
    if (std::fabs(rho) >= observed - 1e-12) ++extreme;
    ++total;
  };
  // Heap's algorithm, iterative form.
  const std::size_t k = ry.size();
  std::vector<std::size_t> c(k, 0);
  visit();
  std::size_t i = 1;
  while (i < k) {
    if (c[i] < i) {
      std::swap(ry[i % 2 == 0 ? 0 : c[i]], ry[i]);
      visit();
      ++c[i];
      i = 1;
    } else {
      c[i] = 0;
      ++i;
    }
  }
  return static_cast<double>(extreme) / static_cast<double>(total);
}

std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a) {
  const auto n = a.rows();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::fabs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> eig;
  for (Eigen::Index i = 0; i < n; ++i) eig.push_back(a(i, i));
  std::sort(eig.rbegin(), eig.rend());
  return eig;
}

double nc(const Matrix& acts, const std::vector<std::size_t>& widths, double threshold, bool scale) {
  std::set<std::size_t> covered;
  for (Eigen::Index i = 0; i < acts.rows(); ++i) {
    std::size_t start = 0;
    for (auto w : widths) {
      double lo = acts(i, static_cast<Eigen::Index>(start));
      double hi = lo;
      for (std::size_t j = start; j < start + w; ++j) {
        lo = std::min(lo, acts(i, static_cast<Eigen::Index>(j)));
        hi = std::max(hi, acts(i, static_cast<Eigen::Index>(j)));
      }
      for (std::size_t j = start; j < start + w; ++j) {
        double v = acts(i, static_cast<Eigen::Index>(j));
        if (scale) v = hi == lo ? 0.0 : (v - lo) / (hi - lo);
        if (v > threshold) covered.insert(j);
      }
      start += w;
    }
  }
  return static_cast<double>(covered.size()) / static_cast<double>(acts.cols());
}

double kmnc(const Matrix& acts, const std::vector<std::pair<double, double>>& ranges, std::size_t k) {
  // Values live on a 1/64 grid, so scaled integers make bucket tests exact.
  auto grid = [](double v) { return std::llround(v * 64.0); };
  std::size_t covered = 0;
  const auto kk = static_cast<long long>(k);
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    const auto lo = grid(ranges[j].first);
    const auto hi = grid(ranges[j].second);
    for (long long b = 0; b < kk; ++b) {
      if (lo == hi && b > 0) break;
      bool hit = false;
      for (Eigen::Index i = 0; i < acts.rows(); ++i) {
        const auto v = grid(acts(i, static_cast<Eigen::Index>(j)));
        if (lo == hi) {
          hit = hit || v == lo;
          continue;
        }
        const auto scaled = (v - lo) * kk;  // bucket b holds b*(hi-lo) <= scaled < (b+1)*(hi-lo)
        const bool in = v >= lo && v <= hi &&
                        ((scaled >= b * (hi - lo) && scaled < (b + 1) * (hi - lo)) || (b == kk - 1 && v == hi));
        hit = hit || in;
      }
      if (hit) ++covered;
    }
  }
  return static_cast<double>(covered) / static_cast<double>(k * ranges.size());
}

double nbc(const Matrix& acts, const std::vector<std::pair<double, double>>& ranges) {
  std::size_t corners = 0;
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    bool below = false;
    bool above = false;
    for (Eigen::Index i = 0; i < acts.rows(); ++i) {
      below = below || acts(i, static_cast<Eigen::Index>(j)) < ranges[j].first;
      above = above || acts(i, static_cast<Eigen::Index>(j)) > ranges[j].second;
    }
    corners += static_cast<std::size_t>(below) + static_cast<std::size_t>(above);
  }
  return static_cast<double>(corners) / static_cast<double>(2 * ranges.size());
}

double snac(const Matrix& acts, const std::vector<std::pair<double, double>>& ranges) {
  std::size_t corners = 0;
  for (std::size_t j = 0; j < ranges.size(); ++j) {
    bool above = false;
    for (Eigen::Index i = 0; i < acts.rows(); ++i) above = above || acts(i, static_cast<Eigen::Index>(j)) > ranges[j].second;
    corners += static_cast<std::size_t>(above);
  }
  return static_cast<double>(corners) / static_cast<double>(ranges.size());
}

double tknc(const Matrix& acts, const std::vector<std::size_t>& widths, std::size_t k) {
  std::set<std::size_t> covered;
  for (Eigen::Index i = 0; i < acts.rows(); ++i) {
    std::size_t start = 0;
    for (auto w : widths) {
      for (std::size_t j = start; j < start + w; ++j) {
        std::size_t ahead = 0;
        for (std::size_t o = start; o < start + w; ++o) {
          const double vo = acts(i, static_cast<Eigen::Index>(o));
          const double vj = acts(i, static_cast<Eigen::Index>(j));
          if (vo > vj || (vo == vj && o < j)) ++ahead;
        }
        if (ahead < k) covered.insert(j);
      }
      start += w;
    }
  }
  return static_cast<double>(covered.size()) / static_cast<double>(acts.cols());
}

double surprise_coverage(const std::vector<double>& surprises, double upper, std::size_t buckets) {
  std::size_t covered = 0;
  for (std::size_t b = 0; b < buckets; ++b) {
    const double lo = upper * static_cast<double>(b) / static_cast<double>(buckets);
    const double hi = upper * static_cast<double>(b + 1) / static_cast<double>(buckets);
    bool hit = false;
    for (double s : surprises) {
      const double c = std::clamp(s, 0.0, upper);
      hit = hit || (c >= lo && c < hi) || (b + 1 == buckets && c >= hi);
    }
    if (hit) ++covered;
  }
  return static_cast<double>(covered) / static_cast<double>(buckets);
}

double lsc_surprise(const Matrix& class_points, const std::vector<double>& x, const std::vector<double>& h,
                    const std::vector<std::size_t>& keep) {
  const long double two_pi = 6.283185307179586476925286766559L;
  long double density = 0;
  for (Eigen::Index i = 0; i < class_points.rows(); ++i) {
    long double kernel = 1;
    for (std::size_t c = 0; c < keep.size(); ++c) {
      const long double z = (x[keep[c]] - class_points(i, static_cast<Eigen::Index>(keep[c]))) / h[c];
      kernel *= std::exp(-0.5L * z * z) / (h[c] * std::sqrt(two_pi));
    }
    density += kernel;
  }
  density /= static_cast<long double>(class_points.rows());
  return static_cast<double>(-std::log(density));
}

double dsc_surprise(const Matrix& training, const std::vector<int>& labels, const std::vector<double>& x,
                    int predicted) {
  auto dist_to = [&](Eigen::Index row, const std::vector<double>& p) {
    double acc = 0;
    for (std::size_t j = 0; j < p.size(); ++j) acc += (training(row, static_cast<Eigen::Index>(j)) - p[j]) * (training(row, static_cast<Eigen::Index>(j)) - p[j]);
    return std::sqrt(acc);
  };
  Eigen::Index a = -1;
  double da = 0;
  for (Eigen::Index i = 0; i < training.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)] != predicted) continue;
    const double di = dist_to(i, x);
    if (a < 0 || di < da) {
      a = i;
      da = di;
    }
  }
  std::vector<double> pa(training.row(a).data(), training.row(a).data() + training.cols());
  double db = INFINITY;
  for (Eigen::Index i = 0; i < training.rows(); ++i) {
    if (labels[static_cast<std::size_t>(i)] == predicted) continue;
    db = std::min(db, dist_to(i, pa));
  }
  return da == 0.0 ? 0.0 : da / db;
}

}  // namespace oracle
