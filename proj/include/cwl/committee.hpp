#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cwl/errors.hpp"

namespace cwl {

/// How a tied vote is resolved. FairCoin assigns probability mass 1/2 to each
/// side in exact computations and a deterministic 1/2 credit in empirical
/// agreement counts; the deterministic modes resolve to a fixed sign.
enum class TieRule { FairCoin, FavorPositive, FavorNegative };

/// Probability mass a tied vote contributes to the *correct* side. All exact
/// computations condition on the positive state, so FavorPositive counts a
/// tie as correct and FavorNegative as an error.
inline double tie_mass_correct(TieRule tie) {
  switch (tie) {
    case TieRule::FavorPositive: return 1.0;
    case TieRule::FavorNegative: return 0.0;
    case TieRule::FairCoin: break;
  }
  return 0.5;
}

/// ln(p / (1-p)), with ±inf at the endpoints.
inline double log_odds(double p) {
  if (p <= 0.0) return -std::numeric_limits<double>::infinity();
  if (p >= 1.0) return std::numeric_limits<double>::infinity();
  return std::log(p / (1.0 - p));
}

/// A committee of experts with fixed per-expert accuracies. Construction
/// validates the accuracy vector; everything else about a committee is
/// derived from it.
class Committee {
 public:
  explicit Committee(std::vector<double> competences) : p_(std::move(competences)) {
    if (p_.empty()) throw DomainError("committee must contain at least one expert");
    eps_.reserve(p_.size());
    for (std::size_t i = 0; i < p_.size(); ++i) {
      if (!(p_[i] >= 0.0 && p_[i] <= 1.0)) {
        throw DomainError("competence out of [0,1] at expert " + std::to_string(i + 1));
      }
      eps_.push_back(p_[i] - 0.5);
    }
  }

  int size() const { return static_cast<int>(p_.size()); }
  std::span<const double> competences() const { return p_; }
  std::span<const double> advantages() const { return eps_; }
  double competence(int i) const { return p_[static_cast<std::size_t>(i)]; }
  double advantage(int i) const { return eps_[static_cast<std::size_t>(i)]; }

  /// Every expert strictly better than a coin flip.
  bool good() const {
    for (double v : p_) {
      if (!(v > 0.5)) return false;
    }
    return true;
  }

  /// All competences strictly inside (gamma, 1-gamma).
  bool absolutely_balanced(double gamma) const {
    if (!(gamma > 0.0 && gamma < 0.5)) {
      throw DomainError("balancing parameter must lie in (0, 1/2)");
    }
    for (double v : p_) {
      if (!(v > gamma && v < 1.0 - gamma)) return false;
    }
    return true;
  }

  /// Largest margin gamma* such that the committee is balanced for every
  /// gamma < gamma*. Can reach 1/2 (all-coin committees).
  double balance_margin() const {
    double m = 0.5;
    for (double v : p_) m = std::min(m, std::min(v, 1.0 - v));
    return m;
  }

 private:
  std::vector<double> p_;
  std::vector<double> eps_;
};

/// Peer-set summary for one expert: the accuracy of the majority vote over
/// everybody else.
struct PeerProfile {
  int index = 0;
  double p_peer = 0.0;
  double eps_peer = 0.0;
  double q_peer = 0.0;
};

/// Exact distribution of the number of successes among independent Bernoulli
/// trials with the given probabilities. Iterative O(N^2) convolution with
/// extended-precision accumulation; entry k is P(sum == k).
inline std::vector<double> poisson_binomial_pmf(std::span<const double> probs) {
  for (double v : probs) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("probability out of [0,1]");
  }
  std::vector<long double> acc(probs.size() + 1, 0.0L);
  acc[0] = 1.0L;
  std::size_t filled = 0;
  for (double pd : probs) {
    const long double p = pd;
    acc[filled + 1] = acc[filled] * p;
    for (std::size_t k = filled; k > 0; --k) {
      acc[k] = acc[k] * (1.0L - p) + acc[k - 1] * p;
    }
    acc[0] *= 1.0L - p;
    ++filled;
  }
  return std::vector<double>(acc.begin(), acc.end());
}

/// P(majority vote is correct) for independent experts with the given
/// accuracies. A tie (even vote counts only) contributes tie_mass_correct.
inline double majority_accuracy(std::span<const double> probs, TieRule tie) {
  const auto pmf = poisson_binomial_pmf(probs);
  const int n = static_cast<int>(probs.size());
  long double acc = 0.0L;
  for (int k = n / 2 + 1; k <= n; ++k) acc += pmf[static_cast<std::size_t>(k)];
  if (n % 2 == 0) acc += static_cast<long double>(tie_mass_correct(tie)) * pmf[static_cast<std::size_t>(n / 2)];
  return static_cast<double>(acc);
}

inline double majority_accuracy(const Committee& c, TieRule tie) {
  return majority_accuracy(c.competences(), tie);
}

/// Accuracy of the majority vote of everyone except expert i.
inline PeerProfile peer_accuracy(const Committee& c, int i, TieRule tie) {
  const int n = c.size();
  if (n < 2) throw DomainError("peer accuracy needs at least two experts");
  if (i < 0 || i >= n) throw DomainError("expert index out of range");
  std::vector<double> peers;
  peers.reserve(static_cast<std::size_t>(n - 1));
  for (int k = 0; k < n; ++k) {
    if (k != i) peers.push_back(c.competence(k));
  }
  PeerProfile out;
  out.index = i;
  out.p_peer = majority_accuracy(peers, tie);
  out.eps_peer = out.p_peer - 0.5;
  out.q_peer = 1.0 - out.p_peer;
  return out;
}

/// Probability that expert i agrees with the majority vote of its peers:
/// p_i * p_peer + (1-p_i) * (1-p_peer).
inline double pseudo_competence(const Committee& c, int i, TieRule tie) {
  const PeerProfile peer = peer_accuracy(c, i, tie);
  const double p = c.competence(i);
  return p * peer.p_peer + (1.0 - p) * peer.q_peer;
}

inline std::vector<double> pseudo_competences(const Committee& c, TieRule tie) {
  std::vector<double> out(static_cast<std::size_t>(c.size()));
  for (int i = 0; i < c.size(); ++i) out[static_cast<std::size_t>(i)] = pseudo_competence(c, i, tie);
  return out;
}

/// Finite-horizon surrogate for the consistency rate of a committee sequence:
/// the minimum majority accuracy over sizes [from_size, horizon].
struct ConsistencyRate {
  double value = 0.0;
  int at_size = 0;    // size attaining the minimum
  int from_size = 0;
  int horizon = 0;
};

template <typename Generator>
ConsistencyRate consistency_rate(Generator&& generate, int size, int horizon, TieRule tie) {
  if (size < 1) throw DomainError("committee size must be positive");
  if (horizon < size) throw DomainError("horizon must be at least the committee size");
  ConsistencyRate out;
  out.value = std::numeric_limits<double>::infinity();
  out.from_size = size;
  out.horizon = horizon;
  for (int n = size; n <= horizon; ++n) {
    Committee c(generate(n));
    if (c.size() != n) throw ShapeError("sequence generator returned the wrong committee size");
    const double a = majority_accuracy(c, tie);
    if (a < out.value) {
      out.value = a;
      out.at_size = n;
    }
  }
  return out;
}

/// The ordering bracket shared by every expert pair: the amount by which the
/// pseudo-competence difference shrinks the true-competence difference,
/// (pseudo_i - pseudo_j) = bracket * (p_i - p_j). Computed exactly from the
/// success distribution of the N-2 shared peers.
inline double ordering_margin(const Committee& c, int i, int j, TieRule tie) {
  const int n = c.size();
  if (n < 3) throw DomainError("ordering margin needs at least three experts");
  if (i < 0 || j < 0 || i >= n || j >= n || i == j) {
    throw DomainError("expert indices must be distinct and in range");
  }
  std::vector<double> shared;
  shared.reserve(static_cast<std::size_t>(n - 2));
  for (int k = 0; k < n; ++k) {
    if (k != i && k != j) shared.push_back(c.competence(k));
  }
  const auto pmf = poisson_binomial_pmf(shared);
  const int voters = n - 1;  // peer set of j: expert i plus the shared peers
  const double tm = tie_mass_correct(tie);
  // P(peer vote of j correct | expert i wrong): correct count is k.
  long double agree_when_wrong = 0.0L;
  // P(peer vote of j wrong | expert i correct): correct count is k+1.
  long double disagree_when_right = 0.0L;
  for (int k = 0; k < static_cast<int>(pmf.size()); ++k) {
    const long double mass = pmf[static_cast<std::size_t>(k)];
    if (2 * k > voters) {
      agree_when_wrong += mass;
    } else if (2 * k == voters) {
      agree_when_wrong += tm * mass;
    }
    const int correct = k + 1;
    if (2 * correct < voters) {
      disagree_when_right += mass;
    } else if (2 * correct == voters) {
      disagree_when_right += (1.0L - tm) * mass;
    }
  }
  return static_cast<double>(agree_when_wrong - disagree_when_right);
}

}  // namespace cwl
