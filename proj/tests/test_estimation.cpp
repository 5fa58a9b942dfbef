#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cwl/estimation.hpp"
#include "cwl/sim.hpp"
#include "support.hpp"

using namespace cwl;
using doctest::Approx;

namespace {

OpinionMatrix from_columns(const std::vector<std::vector<Opinion>>& cols,
                           const std::vector<Opinion>& labels = {}) {
  OpinionMatrix m(static_cast<int>(cols.front().size()));
  for (std::size_t t = 0; t < cols.size(); ++t) {
    if (labels.empty()) {
      m.append_column(cols[t]);
    } else {
      m.append_column(cols[t], labels[t]);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("opinion matrix validation") {
  OpinionMatrix m(3);
  m.append_column(std::vector<Opinion>{1, -1, 1});
  CHECK(m.experts() == 3);
  CHECK(m.tasks() == 1);
  CHECK_FALSE(m.has_labels());
  CHECK_THROWS_AS(m.append_column(std::vector<Opinion>{1, -1}), ShapeError);
  CHECK_THROWS_AS(m.append_column(std::vector<Opinion>{1, -1, 2}), DomainError);
  CHECK_THROWS_AS(m.append_column(std::vector<Opinion>{1, -1, 1}, Opinion{1}), ShapeError);
  CHECK_THROWS_AS(m.label(0), MissingLabels);
}

TEST_CASE("supervised estimates") {
  const auto m = from_columns({{1, 1}, {-1, 1}, {1, -1}}, {1, 1, 1});
  const auto est = supervised_estimate(m);
  CHECK(est[0] == Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(est[1] == Approx(2.0 / 3.0).epsilon(1e-15));

  // an expert equal to the label scores one
  const auto m2 = from_columns({{1, -1}, {-1, -1}}, {1, -1});
  CHECK(supervised_estimate(m2)[0] == 1.0);

  // 2 x 4 hand count
  const auto m3 = from_columns({{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}, {1, -1, 1, -1});
  const auto est3 = supervised_estimate(m3);
  CHECK(est3[0] == Approx(0.5).epsilon(1e-15));
  CHECK(est3[1] == Approx(1.0).epsilon(1e-15));

  const auto unlabeled = from_columns({{1, 1}});
  CHECK_THROWS_AS(supervised_estimate(unlabeled), MissingLabels);
}

TEST_CASE("pseudo estimates over a block") {
  SUBCASE("hand enumeration with a tied peer vote") {
    const auto m = from_columns({{1, 1, -1}, {-1, -1, -1}});
    const auto est = pseudo_estimate(m, TieRule::FairCoin);
    CHECK(est[0] == Approx(0.75).epsilon(1e-15));  // (1/2 + 1) / 2
  }
  SUBCASE("unanimity means full agreement for odd committees") {
    const auto m = from_columns({{1, 1, 1}, {-1, -1, -1}, {1, 1, 1}});
    for (double v : pseudo_estimate(m, TieRule::FairCoin)) CHECK(v == 1.0);
  }
  SUBCASE("deterministic tie modes credit the favored side") {
    const auto m = from_columns({{1, 1, -1}});
    CHECK(pseudo_estimate(m, TieRule::FavorPositive)[0] == 1.0);
    CHECK(pseudo_estimate(m, TieRule::FavorNegative)[0] == 0.0);
  }
  CHECK_THROWS_AS(pseudo_estimate(from_columns({{1}}), TieRule::FairCoin), DomainError);
}

TEST_CASE("estimator state updates") {
  EstimatorState state(5, TieRule::FairCoin);
  CHECK_THROWS_AS(state.estimates(), DomainError);
  state.update(std::vector<Opinion>{1, 1, 1, 1, 1});
  CHECK(state.tasks_seen() == 1);
  for (int i = 0; i < 5; ++i) CHECK(state.estimate(i) == 1.0);
  CHECK_THROWS_AS(state.update(std::vector<Opinion>{1, 1}), ShapeError);

  SUBCASE("single column estimates live on the half grid") {
    EstimatorState s2(4, TieRule::FairCoin);
    s2.update(std::vector<Opinion>{1, -1, 1, -1});
    for (int i = 0; i < 4; ++i) {
      const double v = s2.estimate(i);
      CHECK((v == 0.0 || v == 0.5 || v == 1.0));
    }
  }
}

TEST_CASE("batch equals incremental exactly") {
  RngStream rng(611, 0);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 2 + static_cast<int>(rng.next_unit() * 7);
    const long tasks = 1 + static_cast<long>(rng.next_unit() * 30);
    const TieRule tie = testsupport::kAllTies[static_cast<int>(rng.next_unit() * 3)];
    OpinionMatrix m(n);
    std::vector<Opinion> col(static_cast<std::size_t>(n));
    for (long t = 0; t < tasks; ++t) {
      for (auto& v : col) v = rng.next_sign();
      m.append_column(col);
    }
    const auto batch = pseudo_estimate(m, tie);
    EstimatorState state(n, tie);
    for (long t = 0; t < tasks; ++t) state.update(m.column(t));
    const auto inc = state.estimates();
    for (int i = 0; i < n; ++i) {
      CHECK(batch[static_cast<std::size_t>(i)] == inc[static_cast<std::size_t>(i)]);
    }
  }
}

TEST_CASE("task order does not matter") {
  RngStream rng(612, 0);
  const int n = 5;
  OpinionMatrix m(n);
  std::vector<Opinion> col(n);
  for (long t = 0; t < 40; ++t) {
    for (auto& v : col) v = rng.next_sign();
    m.append_column(col);
  }
  std::vector<long> order(40);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t k = order.size(); k > 1; --k) {
    std::swap(order[k - 1], order[static_cast<std::size_t>(rng.next_unit() * k)]);
  }
  OpinionMatrix shuffled(n);
  for (long t : order) shuffled.append_column(m.column(t));
  const auto a = pseudo_estimate(m, TieRule::FairCoin);
  const auto b = pseudo_estimate(shuffled, TieRule::FairCoin);
  for (int i = 0; i < n; ++i) {
    CHECK(a[static_cast<std::size_t>(i)] == Approx(b[static_cast<std::size_t>(i)]).epsilon(1e-14));
  }
}

TEST_CASE("estimates converge to the closed-form pseudo competences") {
  const Committee c(std::vector<double>{0.55, 0.65, 0.7, 0.8, 0.85});
  const auto pseudo = pseudo_competences(c, TieRule::FairCoin);
  const long tasks = 100000;
  const auto est = streamed_pseudo_estimates(c, tasks, TieRule::FairCoin, 4242);
  for (int i = 0; i < c.size(); ++i) {
    const double tol =
        4.0 * std::sqrt(pseudo[static_cast<std::size_t>(i)] *
                        (1.0 - pseudo[static_cast<std::size_t>(i)]) / static_cast<double>(tasks));
    CHECK(std::fabs(est[static_cast<std::size_t>(i)] - pseudo[static_cast<std::size_t>(i)]) <= tol);
  }
}

TEST_CASE("estimator is unbiased at the fixed point") {
  const Committee c(std::vector<double>{0.6, 0.7, 0.8});
  const auto pseudo = pseudo_competences(c, TieRule::FairCoin);
  const int reps = 200;
  const long tasks = 10000;
  std::vector<std::vector<double>> samples(3);
  for (int r = 0; r < reps; ++r) {
    const auto est = streamed_pseudo_estimates(c, tasks, TieRule::FairCoin, derive_seed(9000, r));
    for (int i = 0; i < 3; ++i) samples[static_cast<std::size_t>(i)].push_back(est[static_cast<std::size_t>(i)]);
  }
  for (int i = 0; i < 3; ++i) {
    double mean = 0.0;
    for (double v : samples[static_cast<std::size_t>(i)]) mean += v;
    mean /= reps;
    double ss = 0.0;
    for (double v : samples[static_cast<std::size_t>(i)]) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (reps * (reps - 1.0)));
    CHECK(std::fabs(mean - pseudo[static_cast<std::size_t>(i)]) <= 4.0 * se);
  }
}
