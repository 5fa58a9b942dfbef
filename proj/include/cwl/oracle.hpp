#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "cwl/committee.hpp"
#include "cwl/errors.hpp"
#include "cwl/rng.hpp"
#include "cwl/rules.hpp"

namespace cwl {

enum class EstimateMethod { Exact, MonteCarlo };

struct ErrorEstimate {
  double value = 0.0;
  double std_error = 0.0;  // 0 for exact; sqrt(v(1-v)/trials) for Monte Carlo
  EstimateMethod method = EstimateMethod::Exact;
  long trials = 0;
  std::uint64_t seed = 0;
};

inline constexpr int kExactEnumerationBudget = 24;

/// Exact error probability of the weighted vote sign(sum w_i x_i) under the
/// generative model, by summing the probability of every correctness pattern.
/// The uniform prior and the sign-symmetric rule let the sum condition on the
/// positive state only. Infinite sentinel weights dominate the sign unless
/// they cancel; a zero score resolves by the tie rule's correct-side mass.
inline ErrorEstimate exact_error(const Committee& c, const WeightVector& w, TieRule tie) {
  const int n = c.size();
  if (static_cast<std::size_t>(n) != w.w.size()) {
    throw ShapeError("weight vector length does not match committee size");
  }
  if (n > kExactEnumerationBudget) {
    throw BudgetError("exact enumeration supports at most 24 experts");
  }
  double scale = 0.0;
  for (int i = 0; i < n; ++i) {
    const double wi = w.w[i];
    if (std::isnan(wi)) throw DomainError("weight is NaN");
    if (std::isinf(wi)) {
      const double p = c.competence(i);
      if (p != 0.0 && p != 1.0) {
        throw DomainError("infinite weights are reserved for deterministic experts");
      }
    } else {
      scale += std::fabs(wi);
    }
  }
  const double tol = detail::kTieEpsilon * scale;
  const double tie_error_mass = 1.0 - tie_mass_correct(tie);
  long double error = 0.0L;
  const auto recurse = [&](const auto& self, int idx, long double prob, double finite,
                           int infinite) -> void {
    if (prob == 0.0L) return;
    if (idx == n) {
      int sgn;
      if (infinite != 0) {
        sgn = infinite > 0 ? 1 : -1;
      } else if (finite > tol) {
        sgn = 1;
      } else if (finite < -tol) {
        sgn = -1;
      } else {
        sgn = 0;
      }
      if (sgn < 0) {
        error += prob;
      } else if (sgn == 0) {
        error += static_cast<long double>(tie_error_mass) * prob;
      }
      return;
    }
    const double p = c.competence(idx);
    const double wi = w.w[idx];
    if (std::isinf(wi)) {
      const int pull = wi > 0 ? 1 : -1;
      self(self, idx + 1, prob * p, finite, infinite + pull);
      self(self, idx + 1, prob * (1.0L - static_cast<long double>(p)), finite, infinite - pull);
    } else {
      self(self, idx + 1, prob * p, finite + wi, infinite);
      self(self, idx + 1, prob * (1.0L - static_cast<long double>(p)), finite - wi, infinite);
    }
  };
  recurse(recurse, 0, 1.0L, 0.0, 0);
  ErrorEstimate out;
  out.value = static_cast<double>(error);
  out.method = EstimateMethod::Exact;
  return out;
}

/// Empirical error frequency of an arbitrary decision rule over seeded draws
/// from the generative model. Trial k consumes substream (seed, k) in the
/// order: state sign, then one uniform per expert, then whatever the rule
/// draws. Partitioned runs therefore reproduce serial ones bit for bit.
template <typename Rule>
ErrorEstimate mc_error(const Committee& c, Rule&& rule, long trials, std::uint64_t seed) {
  if (trials < 1) throw DomainError("trials must be at least 1");
  const int n = c.size();
  std::vector<Opinion> x(static_cast<std::size_t>(n));
  long errors = 0;
  for (long k = 0; k < trials; ++k) {
    RngStream rng(seed, static_cast<std::uint64_t>(k));
    const Opinion y = rng.next_sign();
    for (int i = 0; i < n; ++i) {
      x[static_cast<std::size_t>(i)] =
          rng.next_bernoulli(c.competence(i)) ? y : static_cast<Opinion>(-y);
    }
    if (rule(OpinionColumn(x), rng) != y) ++errors;
  }
  ErrorEstimate out;
  out.value = static_cast<double>(errors) / static_cast<double>(trials);
  out.std_error = std::sqrt(out.value * (1.0 - out.value) / static_cast<double>(trials));
  out.method = EstimateMethod::MonteCarlo;
  out.trials = trials;
  out.seed = seed;
  return out;
}

/// mc_error specialization for a fixed weight vector.
inline ErrorEstimate mc_weighted_error(const Committee& c, const WeightVector& w, TieRule tie,
                                       long trials, std::uint64_t seed) {
  return mc_error(
      c, [&](OpinionColumn col, RngStream& rng) { return weighted_vote(col, w, tie, &rng); },
      trials, seed);
}

}  // namespace cwl
