#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cwl/committee.hpp"
#include "cwl/errors.hpp"

namespace cwl {

/// Committee potential: sum of (p_i - 1/2) * ln(p_i / (1-p_i)). Natural log.
/// Any endpoint competence makes the potential infinite (returned as +inf).
inline double committee_potential(std::span<const double> p) {
  double phi = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("competence out of [0,1]");
    if (v == 0.0 || v == 1.0) return std::numeric_limits<double>::infinity();
    phi += (v - 0.5) * log_odds(v);
  }
  return phi;
}

/// Pseudo committee potential: the true advantage (p_i - 1/2) weighted by the
/// log odds of the closed-form pseudo competence.
inline double pseudo_potential(const Committee& c, TieRule tie) {
  double phi = 0.0;
  for (int i = 0; i < c.size(); ++i) {
    const double eps = c.advantage(i);
    if (eps == 0.0) continue;  // avoid 0 * inf at degenerate pseudo competences
    phi += eps * log_odds(pseudo_competence(c, i, tie));
  }
  return phi;
}

/// Product of sqrt(4 p q): the sharpest Chernoff-technique upper bound on the
/// log-odds-weighted vote's error probability. Collapses to 0 when any
/// expert is deterministic.
inline double improved_upper(std::span<const double> p) {
  double bound = 1.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("competence out of [0,1]");
    bound *= std::sqrt(4.0 * v * (1.0 - v));
  }
  return bound;
}

/// exp(-potential / 2): the classical sub-Gaussian bound, for either the true
/// or the pseudo potential.
inline double potential_upper(double potential) { return std::exp(-0.5 * potential); }

/// Lower bound on the pseudo-weighted vote's error in terms of the pseudo
/// potential: (3/4) / (1 + exp(2*phi + 4*sqrt(phi))). NaN for negative phi.
inline double pnb_lower(double phi_tilde) {
  return 0.75 / (1.0 + std::exp(2.0 * phi_tilde + 4.0 * std::sqrt(phi_tilde)));
}

/// C(x) = 4x / ((1 - 4x^2) * ln((1+2x)/(1-2x))) on |x| < 1/2, continuously
/// extended by C(0) = 1. Evaluated by series below |x| < 1e-4 where the
/// direct quotient loses precision.
inline double balance_coefficient(double x) {
  const double a = std::fabs(x);
  if (!(a < 0.5)) throw DomainError("balance coefficient argument must satisfy |x| < 1/2");
  const double x2 = 4.0 * a * a;
  if (a < 1e-4) {
    // ln((1+2x)/(1-2x)) = 4x * (1 + (2x)^2/3 + (2x)^4/5 + ...)
    const double series = 1.0 + x2 / 3.0 + x2 * x2 / 5.0 + x2 * x2 * x2 / 7.0;
    return 1.0 / ((1.0 - x2) * series);
  }
  return 4.0 * a / ((1.0 - x2) * std::log((1.0 + 2.0 * a) / (1.0 - 2.0 * a)));
}

/// Lower bound on the ratio of pseudo to true potential for a balanced,
/// consistent committee: 1 - C(1/2 - gamma) * (1 - a_n) / (a_n - 1/2).
inline double ratio_lower_bound(double gamma, double a_n) {
  if (!(gamma > 0.0 && gamma < 0.5)) throw DomainError("balancing parameter must lie in (0, 1/2)");
  if (!(a_n > 0.5 && a_n <= 1.0)) throw DomainError("consistency rate must lie in (1/2, 1]");
  const double rho = (1.0 - a_n) / (a_n - 0.5);
  return 1.0 - balance_coefficient(0.5 - gamma) * rho;
}

/// Sufficient per-expert condition for the potential ratio to stay above
/// 1 - delta: (1 - p_peer) / (p_peer - 1/2) <= delta / C(1/2 - gamma).
inline bool corollary_condition(const Committee& c, double delta, double gamma, TieRule tie) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
  if (!c.absolutely_balanced(gamma)) {
    throw DomainError("committee is not absolutely balanced at the given gamma");
  }
  const double budget = delta / balance_coefficient(0.5 - gamma);
  for (int i = 0; i < c.size(); ++i) {
    const PeerProfile peer = peer_accuracy(c, i, tie);
    if (!(peer.p_peer > 0.5)) throw DomainError("condition undefined: a peer accuracy is at or below 1/2");
    if ((1.0 - peer.p_peer) / (peer.p_peer - 0.5) > budget) return false;
  }
  return true;
}

/// R(gamma) = 2 gamma (1-gamma) / (1 - 2 gamma).
inline double deviation_radius(double gamma) {
  if (!(gamma > 0.0 && gamma < 0.5)) throw DomainError("balancing parameter must lie in (0, 1/2)");
  return 2.0 * gamma * (1.0 - gamma) / (1.0 - 2.0 * gamma);
}

/// Peer-strength condition under which the L1 gap between true-log and
/// pseudo-log weights is at most epsilon * N / 2:
/// min_i p_peer >= 1/2 + 1/(2 + epsilon * R(gamma)).
inline bool deviation_condition(const Committee& c, double gamma, double epsilon, TieRule tie) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  const double threshold = 0.5 + 1.0 / (2.0 + epsilon * deviation_radius(gamma));
  for (int i = 0; i < c.size(); ++i) {
    if (peer_accuracy(c, i, tie).p_peer < threshold) return false;
  }
  return true;
}

/// Error bound for the block rule that estimates pseudo competences over T
/// tasks before deciding. Applicable only inside an epsilon window; the
/// boundary 2*phi == epsilon*N yields the vacuous value delta + 1, flagged.
struct BlockErrorBound {
  bool applicable = false;
  double value = 0.0;
  bool vacuous = false;
  double sampling_term = 0.0;  // C(delta; N, T) = (12/T) ln(8N/delta)
  std::string violated;        // first violated condition when inapplicable
};

inline BlockErrorBound block_error_bound(double phi, int experts, long tasks, double delta,
                                         double epsilon,
                                         std::optional<double> rho_n = std::nullopt,
                                         std::optional<double> gamma = std::nullopt) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
  if (experts < 1 || tasks < 1) throw DomainError("experts and tasks must be positive");
  BlockErrorBound out;
  out.sampling_term = (12.0 / static_cast<double>(tasks)) * std::log(8.0 * experts / delta);
  const double upper = std::min(5.0, 2.0 * phi / experts);
  if (rho_n) {
    const double lower = std::cbrt(*rho_n * out.sampling_term);
    if (!(epsilon > lower)) {
      out.violated = "epsilon below (rho_N * C)^(1/3)";
      return out;
    }
  }
  if (!(epsilon <= upper)) {
    out.violated = "epsilon above min(5, 2*phi/N)";
    return out;
  }
  if (gamma) {
    const double factor = 2.0 / (std::sqrt(4.0 * epsilon + 1.0) - 1.0);
    if (!(*gamma > out.sampling_term * factor * factor)) {
      out.violated = "gamma at or below C * (2/(sqrt(4*eps+1)-1))^2";
      return out;
    }
  }
  if (std::isinf(phi)) {
    out.value = delta;  // the exponent diverges for degenerate committees
  } else {
    const double excess = 2.0 * phi - epsilon * experts;
    out.value = delta + std::exp(-excess * excess / (8.0 * phi));
  }
  out.applicable = true;
  out.vacuous = out.value >= 1.0;
  return out;
}

/// Finite-N statistics behind the two consistency conditions of the
/// linearized block rule. The first condition is a divergence requirement and
/// is only trend-reported; the second is checkable at each N.
struct ConsistencyConditions {
  double nb_sum = 0.0;        // (1/sqrt(N)) * sum (p_i - 1/2)^2
  double mv_sum = 0.0;        // (1/sqrt(N)) * sum (p_i - 1/2)
  double mv_threshold = 0.0;  // sqrt(ln(2)/8)
  bool both_hold_at_n = false;
};

inline ConsistencyConditions consistency_conditions(std::span<const double> p) {
  ConsistencyConditions out;
  out.mv_threshold = std::sqrt(std::log(2.0) / 8.0);
  if (p.empty()) return out;
  double sq = 0.0;
  double lin = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("competence out of [0,1]");
    const double eps = v - 0.5;
    sq += eps * eps;
    lin += eps;
  }
  const double root = std::sqrt(static_cast<double>(p.size()));
  out.nb_sum = sq / root;
  out.mv_sum = lin / root;
  out.both_hold_at_n = out.mv_sum >= out.mv_threshold;
  return out;
}

/// Pseudo potential evaluated on empirical estimates: both the advantage and
/// the log odds use the estimates. Callers clamp the estimates first.
inline double empirical_pseudo_potential(std::span<const double> estimates) {
  double phi = 0.0;
  for (double v : estimates) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("estimate out of [0,1]");
    const double eps = v - 0.5;
    if (eps == 0.0) continue;
    phi += eps * log_odds(v);
  }
  return phi;
}

/// The stopping event of the adaptive rule: exp(-phi(tau)/2) <= delta/2.
inline bool confidence_event(std::span<const double> estimates, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0,1)");
  return potential_upper(empirical_pseudo_potential(estimates)) <= 0.5 * delta;
}

/// Every closed-form potential and bound for one committee, with vacuous
/// bounds (value >= 1) flagged by name.
struct BoundReport {
  std::vector<double> p;
  std::vector<double> eps;
  std::vector<double> peer_acc;
  std::vector<double> pseudo;
  TieRule tie = TieRule::FairCoin;
  double phi = 0.0;
  double phi_tilde = 0.0;
  double improved_upper = 0.0;
  double ks_upper = 0.0;
  double pnb_upper = 0.0;
  double pnb_lower = 0.0;
  std::optional<double> gamma;
  std::optional<double> rate;  // a_N supplied by the caller
  std::optional<double> ratio_lower;
  std::vector<std::string> vacuous;
};

inline BoundReport bound_report(const Committee& c, TieRule tie,
                                std::optional<double> gamma = std::nullopt,
                                std::optional<double> rate = std::nullopt) {
  BoundReport r;
  r.p.assign(c.competences().begin(), c.competences().end());
  r.eps.assign(c.advantages().begin(), c.advantages().end());
  r.tie = tie;
  for (int i = 0; i < c.size(); ++i) {
    const PeerProfile peer = peer_accuracy(c, i, tie);
    r.peer_acc.push_back(peer.p_peer);
    r.pseudo.push_back(c.competence(i) * peer.p_peer + (1.0 - c.competence(i)) * peer.q_peer);
  }
  r.phi = committee_potential(c.competences());
  r.phi_tilde = pseudo_potential(c, tie);
  r.improved_upper = improved_upper(c.competences());
  r.ks_upper = potential_upper(r.phi);
  r.pnb_upper = potential_upper(r.phi_tilde);
  r.pnb_lower = pnb_lower(r.phi_tilde);
  r.gamma = gamma;
  r.rate = rate;
  if (gamma && rate && *rate > 0.5) r.ratio_lower = ratio_lower_bound(*gamma, *rate);
  const auto flag = [&r](const char* name, double v) {
    if (v >= 1.0) r.vacuous.emplace_back(name);
  };
  flag("improved_upper", r.improved_upper);
  flag("ks_upper", r.ks_upper);
  flag("pnb_upper", r.pnb_upper);
  return r;
}

}  // namespace cwl
