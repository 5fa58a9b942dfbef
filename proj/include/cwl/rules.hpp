#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cwl/bounds.hpp"
#include "cwl/committee.hpp"
#include "cwl/errors.hpp"
#include "cwl/estimation.hpp"
#include "cwl/rng.hpp"

namespace cwl {

enum class WeightMode { Uniform, Log, Linear };

enum class WeightProvenance {
  Uniform,
  NBLog,
  Linear,
  PseudoLog,
  PseudoLinear,
  EmpiricalLog,
  EmpiricalLinear,
};

/// Per-expert vote weights. Entries are finite except for the ±inf sentinels
/// produced by log odds of a deterministic competence.
struct WeightVector {
  std::vector<double> w;
  WeightProvenance provenance = WeightProvenance::Uniform;
};

inline WeightVector make_weights(std::span<const double> p_like, WeightMode mode,
                                 std::optional<WeightProvenance> provenance = std::nullopt) {
  WeightVector out;
  out.w.reserve(p_like.size());
  for (double v : p_like) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("weight source out of [0,1]");
    switch (mode) {
      case WeightMode::Uniform: out.w.push_back(1.0); break;
      case WeightMode::Log: out.w.push_back(log_odds(v)); break;
      case WeightMode::Linear: out.w.push_back(v - 0.5); break;
    }
  }
  if (provenance) {
    out.provenance = *provenance;
  } else {
    switch (mode) {
      case WeightMode::Uniform: out.provenance = WeightProvenance::Uniform; break;
      case WeightMode::Log: out.provenance = WeightProvenance::NBLog; break;
      case WeightMode::Linear: out.provenance = WeightProvenance::Linear; break;
    }
  }
  return out;
}

namespace detail {

// Relative tolerance for declaring a weighted sum an exact tie. Cancellation
// noise of equal-magnitude weights sits many orders below this; genuine
// non-tie sums sit many orders above.
inline constexpr double kTieEpsilon = 1e-12;

struct VoteScore {
  double finite = 0.0;  // sum of finite w_i * x_i
  int infinite = 0;     // net pull of ±inf sentinel weights
  double scale = 0.0;   // sum of |finite w_i|
};

inline VoteScore weighted_score(OpinionColumn x, const WeightVector& w) {
  if (x.size() != w.w.size()) throw ShapeError("opinion and weight lengths differ");
  VoteScore s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double wi = w.w[i];
    if (std::isnan(wi)) throw DomainError("weight is NaN");
    if (std::isinf(wi)) {
      s.infinite += (wi > 0) == (x[i] > 0) ? 1 : -1;
    } else {
      s.finite += wi * x[i];
      s.scale += std::fabs(wi);
    }
  }
  return s;
}

// +1 / -1 / 0 for a tie. Infinite sentinels decide unless they cancel.
inline int score_sign(const VoteScore& s) {
  if (s.infinite != 0) return s.infinite > 0 ? 1 : -1;
  if (s.finite > kTieEpsilon * s.scale) return 1;
  if (s.finite < -kTieEpsilon * s.scale) return -1;
  return 0;
}

inline Opinion resolve_tie(TieRule tie, RngStream* rng) {
  switch (tie) {
    case TieRule::FavorPositive: return 1;
    case TieRule::FavorNegative: return -1;
    case TieRule::FairCoin: break;
  }
  if (rng == nullptr) throw MissingRng("fair-coin tie requires a random stream");
  return rng->next_sign();
}

/// Clamp an empirical estimate away from {0,1} before taking log odds; the
/// margin 1/(tasks+2) shrinks as evidence accumulates.
inline double laplace_clamp(double estimate, long tasks) {
  const double lo = 1.0 / static_cast<double>(tasks + 2);
  return std::clamp(estimate, lo, 1.0 - lo);
}

inline WeightVector weights_from_estimates(std::span<const double> estimates, long tasks,
                                           WeightMode mode) {
  WeightVector out;
  out.w.reserve(estimates.size());
  if (mode == WeightMode::Log) {
    for (double v : estimates) out.w.push_back(log_odds(laplace_clamp(v, tasks)));
    out.provenance = WeightProvenance::EmpiricalLog;
  } else if (mode == WeightMode::Linear) {
    for (double v : estimates) out.w.push_back(v - 0.5);
    out.provenance = WeightProvenance::EmpiricalLinear;
  } else {
    throw DomainError("empirical weights must be Log or Linear");
  }
  return out;
}

inline bool all_zero(const std::vector<double>& w) {
  for (double v : w) {
    if (v != 0.0) return false;
  }
  return true;
}

}  // namespace detail

/// sign(sum w_i x_i); an exact zero falls to the tie rule. FairCoin ties
/// consume one draw from the supplied stream.
inline Opinion weighted_vote(OpinionColumn x, const WeightVector& w, TieRule tie,
                             RngStream* rng = nullptr) {
  const int sgn = detail::score_sign(detail::weighted_score(x, w));
  if (sgn != 0) return static_cast<Opinion>(sgn);
  return detail::resolve_tie(tie, rng);
}

/// Estimate pseudo competences over the whole block once, then decide every
/// task with the same frozen weights. Log weights are clamped away from the
/// endpoints by the Laplace margin 1/(T+2).
inline std::vector<Opinion> block_aggregate(const OpinionMatrix& m, WeightMode mode, TieRule tie,
                                            std::uint64_t seed) {
  const auto estimates = pseudo_estimate(m, tie);
  const WeightVector w = detail::weights_from_estimates(estimates, m.tasks(), mode);
  RngStream rng(seed, 0);
  std::vector<Opinion> decisions;
  decisions.reserve(static_cast<std::size_t>(m.tasks()));
  for (long t = 0; t < m.tasks(); ++t) {
    decisions.push_back(weighted_vote(m.column(t), w, tie, &rng));
  }
  return decisions;
}

/// The idealized pseudo-weighted vote: log-odds weights built from the
/// closed-form pseudo competences of a known committee.
inline WeightVector pseudo_log_weights(const Committee& c, TieRule tie) {
  const auto pseudo = pseudo_competences(c, tie);
  return make_weights(pseudo, WeightMode::Log, WeightProvenance::PseudoLog);
}

inline Opinion pnb_decide(const Committee& c, OpinionColumn x, TieRule tie,
                          RngStream* rng = nullptr) {
  if (c.size() < 2) throw DomainError("pseudo competences need at least two experts");
  return weighted_vote(x, pseudo_log_weights(c, tie), tie, rng);
}

struct AdaptiveConfig {
  double delta = 0.1;                      // target confidence
  WeightMode weight_mode = WeightMode::Log;
  TieRule tie = TieRule::FairCoin;
};

struct AdaptiveOutcome {
  std::vector<Opinion> decisions;
  std::optional<long> freeze_time;   // first tau where the confidence event held
  WeightVector weights;              // frozen weights, or the final ones if never frozen
  std::vector<double> phi_trace;     // empirical pseudo potential after each update
  bool frozen_at(long t) const { return freeze_time.has_value() && t > *freeze_time; }
};

/// Sequential rule: decide task t with weights built from tasks 1..t-1, then
/// update the estimates. Majority vote stands in before the first update and
/// whenever every weight is zero. Once the confidence event
/// exp(-phi(tau)/2) <= delta/2 holds, the weights freeze and updating stops.
inline AdaptiveOutcome adaptive_aggregate(const OpinionMatrix& m, const AdaptiveConfig& cfg,
                                          std::uint64_t seed) {
  if (m.experts() < 2) throw DomainError("adaptive aggregation needs at least two experts");
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) throw DomainError("delta must lie in (0,1)");
  if (cfg.weight_mode == WeightMode::Uniform) {
    throw DomainError("adaptive weights must be Log or Linear");
  }
  const std::vector<double> ones(static_cast<std::size_t>(m.experts()), 1.0);
  const WeightVector majority = make_weights(ones, WeightMode::Uniform);
  EstimatorState state(m.experts(), cfg.tie);
  RngStream rng(seed, 0);
  AdaptiveOutcome out;
  out.decisions.reserve(static_cast<std::size_t>(m.tasks()));
  WeightVector current = majority;
  bool have_estimates = false;
  bool frozen = false;
  for (long t = 0; t < m.tasks(); ++t) {
    const auto col = m.column(t);
    const WeightVector& use =
        (have_estimates && !detail::all_zero(current.w)) ? current : majority;
    out.decisions.push_back(weighted_vote(col, use, cfg.tie, &rng));
    if (frozen) continue;
    state.update(col);
    const long tau = state.tasks_seen();
    const auto estimates = state.estimates();
    std::vector<double> clamped(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) {
      clamped[i] = detail::laplace_clamp(estimates[i], tau);
    }
    out.phi_trace.push_back(empirical_pseudo_potential(clamped));
    current = detail::weights_from_estimates(estimates, tau, cfg.weight_mode);
    have_estimates = true;
    if (confidence_event(clamped, cfg.delta)) {
      frozen = true;
      out.freeze_time = tau;
    }
  }
  out.weights = current;
  return out;
}

}  // namespace cwl
