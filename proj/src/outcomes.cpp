#include <algorithm>

#include "dtest/error.hpp"
#include "dtest/faults.hpp"

namespace dtest {

OutcomeTable::OutcomeTable(std::vector<std::pair<std::string, Outcome>> rows) : rows_(std::move(rows)) {
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    if (!index_.emplace(rows_[i].first, i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate outcome for id '" + rows_[i].first + "'");
    }
  }
}

const Outcome* OutcomeTable::find(const std::string& id) const {
  auto it = index_.find(id);
  return it == index_.end() ? nullptr : &rows_[it->second].second;
}

std::pair<int, int> OutcomeTable::class_range() const {
  if (rows_.empty()) throw Error(ErrorCode::EmptySet, "outcome table is empty");
  int lo = rows_.front().second.actual_class;
  int hi = lo;
  for (const auto& [id, o] : rows_) {
    lo = std::min({lo, o.actual_class, o.predicted_class});
    hi = std::max({hi, o.actual_class, o.predicted_class});
  }
  return {lo, hi};
}

namespace {

const Outcome& outcome_of(const OutcomeTable& outcomes, const std::string& id) {
  const Outcome* o = outcomes.find(id);
  if (o == nullptr) throw Error(ErrorCode::InvalidArgument, "no outcome for id '" + id + "'");
  return *o;
}

}  // namespace

FeatureMatrix mispredicted_subset(const FeatureMatrix& features, const OutcomeTable& outcomes) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < features.rows(); ++i) {
    if (outcome_of(outcomes, features.ids()[i]).mispredicted()) rows.push_back(i);
  }
  if (rows.empty()) throw Error(ErrorCode::EmptySet, "no mispredicted inputs");
  return features.select(rows);
}

FeatureMatrix augment_features(const FeatureMatrix& features, const OutcomeTable& outcomes) {
  const auto [lo, hi] = outcomes.class_range();
  const double span = hi > lo ? static_cast<double>(hi - lo) : 0.0;
  auto scale = [&](int c) { return span > 0.0 ? static_cast<double>(c - lo) / span : 0.0; };

  const auto m = features.values().cols();
  RowMatrix values(features.values().rows(), m + 2);
  values.leftCols(m) = features.values();
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const auto& id = features.ids()[i];
    const Outcome& o = outcome_of(outcomes, id);
    if (!o.mispredicted()) {
      throw Error(ErrorCode::NotMispredicted, "input '" + id + "' was predicted correctly");
    }
    const auto r = static_cast<Eigen::Index>(i);
    values(r, m) = scale(o.actual_class);
    values(r, m + 1) = scale(o.predicted_class);
  }
  return FeatureMatrix(features.ids(), std::move(values), features.normalized());
}

}  // namespace dtest
