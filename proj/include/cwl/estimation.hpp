#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cwl/committee.hpp"
#include "cwl/errors.hpp"

namespace cwl {

using Opinion = std::int8_t;
using OpinionColumn = std::span<const Opinion>;

/// N experts by T tasks of ±1 opinions, optionally with ground-truth labels.
/// Stored task-contiguous so one task's column is a single span.
class OpinionMatrix {
 public:
  explicit OpinionMatrix(int experts) : experts_(experts) {
    if (experts < 1) throw DomainError("opinion matrix needs at least one expert");
  }

  void append_column(OpinionColumn column, std::optional<Opinion> label = std::nullopt) {
    if (static_cast<int>(column.size()) != experts_) {
      throw ShapeError("opinion column length does not match expert count");
    }
    if (tasks_ > 0 && labels_.empty() != !label.has_value()) {
      throw ShapeError("labels must be present for all tasks or none");
    }
    for (Opinion v : column) {
      if (v != 1 && v != -1) throw DomainError("opinions must be +1 or -1");
    }
    if (label && *label != 1 && *label != -1) throw DomainError("labels must be +1 or -1");
    cells_.insert(cells_.end(), column.begin(), column.end());
    if (label) labels_.push_back(*label);
    ++tasks_;
  }

  int experts() const { return experts_; }
  long tasks() const { return tasks_; }
  bool has_labels() const { return !labels_.empty(); }

  OpinionColumn column(long t) const {
    return OpinionColumn(cells_.data() + static_cast<std::size_t>(t) * static_cast<std::size_t>(experts_),
                         static_cast<std::size_t>(experts_));
  }

  Opinion label(long t) const {
    if (labels_.empty()) throw MissingLabels("opinion matrix carries no labels");
    return labels_[static_cast<std::size_t>(t)];
  }

  std::span<const Opinion> labels() const { return labels_; }

 private:
  int experts_;
  long tasks_ = 0;
  std::vector<Opinion> cells_;
  std::vector<Opinion> labels_;
};

namespace detail {

/// Agreement credit of expert i with its peers' majority on one column.
/// A tied peer vote earns a deterministic 1/2 under FairCoin; the
/// deterministic modes resolve the tie to a sign first.
inline double agreement_credit(OpinionColumn column, int i, int column_sum, TieRule tie) {
  const int peer_sum = column_sum - column[static_cast<std::size_t>(i)];
  if (peer_sum > 0) return column[static_cast<std::size_t>(i)] > 0 ? 1.0 : 0.0;
  if (peer_sum < 0) return column[static_cast<std::size_t>(i)] < 0 ? 1.0 : 0.0;
  switch (tie) {
    case TieRule::FavorPositive: return column[static_cast<std::size_t>(i)] > 0 ? 1.0 : 0.0;
    case TieRule::FavorNegative: return column[static_cast<std::size_t>(i)] < 0 ? 1.0 : 0.0;
    case TieRule::FairCoin: break;
  }
  return 0.5;
}

inline int column_sum(OpinionColumn column) {
  int s = 0;
  for (Opinion v : column) s += v;
  return s;
}

}  // namespace detail

/// Supervised per-expert accuracy estimates: fraction of tasks on which the
/// expert matched the label.
inline std::vector<double> supervised_estimate(const OpinionMatrix& m) {
  if (!m.has_labels()) throw MissingLabels("supervised estimation requires labels");
  if (m.tasks() < 1) throw DomainError("supervised estimation requires at least one task");
  std::vector<double> hits(static_cast<std::size_t>(m.experts()), 0.0);
  for (long t = 0; t < m.tasks(); ++t) {
    const auto col = m.column(t);
    const Opinion y = m.label(t);
    for (int i = 0; i < m.experts(); ++i) {
      if (col[static_cast<std::size_t>(i)] == y) hits[static_cast<std::size_t>(i)] += 1.0;
    }
  }
  for (double& h : hits) h /= static_cast<double>(m.tasks());
  return hits;
}

/// Running peer-agreement counts for online pseudo-competence estimation.
/// Single writer; estimates are agree_count / tasks_seen.
class EstimatorState {
 public:
  EstimatorState(int experts, TieRule tie)
      : tie_(tie), agree_(static_cast<std::size_t>(experts), 0.0) {
    if (experts < 2) throw DomainError("pseudo-competence estimation needs at least two experts");
  }

  void update(OpinionColumn column) {
    if (column.size() != agree_.size()) throw ShapeError("column length does not match expert count");
    for (Opinion v : column) {
      if (v != 1 && v != -1) throw DomainError("opinions must be +1 or -1");
    }
    const int sum = detail::column_sum(column);
    for (std::size_t i = 0; i < agree_.size(); ++i) {
      agree_[i] += detail::agreement_credit(column, static_cast<int>(i), sum, tie_);
    }
    ++tasks_seen_;
  }

  long tasks_seen() const { return tasks_seen_; }
  TieRule tie() const { return tie_; }

  double estimate(int i) const {
    if (tasks_seen_ == 0) throw DomainError("estimates are undefined before the first update");
    return agree_[static_cast<std::size_t>(i)] / static_cast<double>(tasks_seen_);
  }

  std::vector<double> estimates() const {
    if (tasks_seen_ == 0) throw DomainError("estimates are undefined before the first update");
    std::vector<double> out(agree_.size());
    for (std::size_t i = 0; i < agree_.size(); ++i) {
      out[i] = agree_[i] / static_cast<double>(tasks_seen_);
    }
    return out;
  }

 private:
  TieRule tie_;
  std::vector<double> agree_;
  long tasks_seen_ = 0;
};

/// Block pseudo-competence estimates over a whole opinion matrix: per-expert
/// frequency of agreeing with the peers' majority vote. Equals folding
/// EstimatorState::update over the columns, exactly.
inline std::vector<double> pseudo_estimate(const OpinionMatrix& m, TieRule tie) {
  if (m.experts() < 2) throw DomainError("pseudo-competence estimation needs at least two experts");
  if (m.tasks() < 1) throw DomainError("pseudo-competence estimation requires at least one task");
  std::vector<double> acc(static_cast<std::size_t>(m.experts()), 0.0);
  for (long t = 0; t < m.tasks(); ++t) {
    const auto col = m.column(t);
    const int sum = detail::column_sum(col);
    for (int i = 0; i < m.experts(); ++i) {
      acc[static_cast<std::size_t>(i)] += detail::agreement_credit(col, i, sum, tie);
    }
  }
  for (double& a : acc) a /= static_cast<double>(m.tasks());
  return acc;
}

}  // namespace cwl
