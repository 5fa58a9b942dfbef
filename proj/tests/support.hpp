#pragma once

// Shared helpers for the test suites: brute-force oracles independent of the
// library's computation paths, and seeded random committee generators.

#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

#include "cwl/committee.hpp"
#include "cwl/rng.hpp"

namespace testsupport {

inline std::vector<double> random_committee(cwl::RngStream& rng, int n, double lo, double hi) {
  std::vector<double> p(static_cast<std::size_t>(n));
  for (auto& v : p) v = lo + (hi - lo) * rng.next_unit();
  return p;
}

/// 2^N enumeration of the success-count distribution.
inline std::vector<double> enum_pmf(const std::vector<double>& p) {
  const int n = static_cast<int>(p.size());
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1, 0.0);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double prob = 1.0;
    for (int i = 0; i < n; ++i) {
      prob *= (mask >> i) & 1u ? p[static_cast<std::size_t>(i)] : 1.0 - p[static_cast<std::size_t>(i)];
    }
    pmf[static_cast<std::size_t>(std::popcount(mask))] += prob;
  }
  return pmf;
}

/// 2^N enumeration of the majority-vote accuracy.
inline double enum_majority(const std::vector<double>& p, cwl::TieRule tie) {
  const auto pmf = enum_pmf(p);
  const int n = static_cast<int>(p.size());
  double acc = 0.0;
  for (int k = 0; k <= n; ++k) {
    if (2 * k > n) {
      acc += pmf[static_cast<std::size_t>(k)];
    } else if (2 * k == n) {
      acc += cwl::tie_mass_correct(tie) * pmf[static_cast<std::size_t>(k)];
    }
  }
  return acc;
}

inline const cwl::TieRule kAllTies[3] = {cwl::TieRule::FairCoin, cwl::TieRule::FavorPositive,
                                         cwl::TieRule::FavorNegative};

}  // namespace testsupport
