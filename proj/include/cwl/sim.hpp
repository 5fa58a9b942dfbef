#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "cwl/bounds.hpp"
#include "cwl/committee.hpp"
#include "cwl/csv.hpp"
#include "cwl/errors.hpp"
#include "cwl/estimation.hpp"
#include "cwl/oracle.hpp"
#include "cwl/rng.hpp"
#include "cwl/rules.hpp"
#include "cwl/version.hpp"

namespace cwl {

/// Competences spaced evenly across [lo, hi]: p_i = lo + (i-1)(hi-lo)/(n-1).
inline std::vector<double> equally_spaced(int n, double lo, double hi) {
  if (n < 2) throw DomainError("equally spaced committees need at least two experts");
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    p[static_cast<std::size_t>(i)] = lo + (hi - lo) * static_cast<double>(i) / (n - 1);
  }
  return p;
}

/// Draw a labeled opinion matrix from the generative model: uniform ±1 state,
/// each opinion independently correct with its expert's competence. Task t
/// consumes substream (seed, t), state sign first and then one uniform per
/// expert, so generation is deterministic and order-free.
inline OpinionMatrix generate(const Committee& c, long tasks, std::uint64_t seed) {
  if (tasks < 1) throw DomainError("task count must be at least 1");
  OpinionMatrix m(c.size());
  std::vector<Opinion> column(static_cast<std::size_t>(c.size()));
  for (long t = 0; t < tasks; ++t) {
    RngStream rng(seed, static_cast<std::uint64_t>(t));
    const Opinion y = rng.next_sign();
    for (int i = 0; i < c.size(); ++i) {
      column[static_cast<std::size_t>(i)] =
          rng.next_bernoulli(c.competence(i)) ? y : static_cast<Opinion>(-y);
    }
    m.append_column(column, y);
  }
  return m;
}

/// Pseudo-competence estimates over model draws without materializing the
/// matrix. Identical draw layout to generate(), so the results agree exactly.
inline std::vector<double> streamed_pseudo_estimates(const Committee& c, long tasks, TieRule tie,
                                                     std::uint64_t seed) {
  EstimatorState state(c.size(), tie);
  std::vector<Opinion> column(static_cast<std::size_t>(c.size()));
  for (long t = 0; t < tasks; ++t) {
    RngStream rng(seed, static_cast<std::uint64_t>(t));
    const Opinion y = rng.next_sign();
    for (int i = 0; i < c.size(); ++i) {
      column[static_cast<std::size_t>(i)] =
          rng.next_bernoulli(c.competence(i)) ? y : static_cast<Opinion>(-y);
    }
    state.update(column);
  }
  return state.estimates();
}

/// Error rates of several fixed weight vectors on common model draws. Trial k
/// uses substream (seed, k); rules are evaluated in order and may consume tie
/// draws from the same stream.
inline std::vector<double> joint_weighted_errors(const Committee& c,
                                                 std::span<const WeightVector> rules, TieRule tie,
                                                 long trials, std::uint64_t seed) {
  if (trials < 1) throw DomainError("trials must be at least 1");
  std::vector<long> errors(rules.size(), 0);
  std::vector<Opinion> x(static_cast<std::size_t>(c.size()));
  for (long k = 0; k < trials; ++k) {
    RngStream rng(seed, static_cast<std::uint64_t>(k));
    const Opinion y = rng.next_sign();
    for (int i = 0; i < c.size(); ++i) {
      x[static_cast<std::size_t>(i)] =
          rng.next_bernoulli(c.competence(i)) ? y : static_cast<Opinion>(-y);
    }
    for (std::size_t r = 0; r < rules.size(); ++r) {
      if (weighted_vote(x, rules[r], tie, &rng) != y) ++errors[r];
    }
  }
  std::vector<double> out(rules.size());
  for (std::size_t r = 0; r < rules.size(); ++r) {
    out[r] = static_cast<double>(errors[r]) / static_cast<double>(trials);
  }
  return out;
}

/// Worker cap: CWL_THREADS when set to a positive integer, otherwise the
/// hardware concurrency.
inline unsigned thread_cap() {
  if (const char* env = std::getenv("CWL_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

namespace detail {

/// Runs fn(0..count-1) across workers; each index is an independent work
/// unit, results are merged by index so the outcome is order-free.
template <typename Fn>
void parallel_for_index(std::size_t count, Fn&& fn) {
  const unsigned workers = std::min<std::size_t>(thread_cap(), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        fn(i);
      }
    });
  }
  for (auto& th : pool) th.join();
}

struct MeanStderr {
  double mean = 0.0;
  double std_error = 0.0;
};

inline MeanStderr mean_stderr(std::span<const double> values) {
  MeanStderr out;
  if (values.empty()) return out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() < 2) return out;
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std_error = std::sqrt(ss / (static_cast<double>(values.size()) *
                                  static_cast<double>(values.size() - 1)));
  return out;
}

/// Repetition spread when there are several repetitions; the binomial
/// standard error of the single run otherwise.
inline MeanStderr mc_stats(std::span<const double> values, long trials) {
  MeanStderr out = mean_stderr(values);
  if (values.size() == 1) {
    out.std_error = std::sqrt(out.mean * (1.0 - out.mean) / static_cast<double>(trials));
  }
  return out;
}

}  // namespace detail

struct ExperimentConfig {
  std::string experiment;
  long estimation_tasks = 100000;  // tasks per pseudo-competence estimation pass
  long mc_trials = 100000;         // decision trials per repetition
  int repetitions = 20;            // independent seeds per Monte Carlo point
  std::uint64_t seed = 0;
  TieRule tie = TieRule::FairCoin;
  std::vector<int> sizes;          // committee sizes; empty picks the experiment default
  int exact_budget = 15;           // exact enumeration at or below this size
};

/// Long-format results: one row per (point, metric), byte-reproducible from
/// (config, seed). Columns:
/// experiment,panel,n,gamma,expert,metric,method,trials,value,std_error
struct ResultTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_csv() const {
    std::ostringstream out;
    for (const auto& [k, v] : metadata) out << "# " << k << "=" << v << "\n";
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << "\n";
    }
    return out.str();
  }
};

namespace detail {

using Row = std::vector<std::string>;

inline Row result_row(const std::string& experiment, const std::string& panel, int n,
                      const std::string& gamma, int expert, const std::string& metric,
                      const std::string& method, long trials, double value, double std_error) {
  Row row(10);
  row[0] = experiment;
  row[1] = panel;
  row[2] = std::to_string(n);
  row[3] = gamma;
  row[4] = expert > 0 ? std::to_string(expert) : std::string{};
  row[5] = metric;
  row[6] = method;
  row[7] = trials > 0 ? std::to_string(trials) : std::string{};
  row[8] = format_real(value);
  row[9] = format_real(std_error);
  return row;
}

inline std::uint64_t point_seed(std::uint64_t seed, std::size_t point, int rep, int phase) {
  return derive_seed(seed, (static_cast<std::uint64_t>(point) << 32) |
                               (static_cast<std::uint64_t>(rep) << 2) |
                               static_cast<std::uint64_t>(phase));
}

}  // namespace detail

inline ResultTable run_experiment(const ExperimentConfig& cfg) {
  const std::string& id = cfg.experiment;
  if (id != "pseudo_vs_true" && id != "bound_comparison" && id != "pnb_vs_nb" &&
      id != "balancing_sweep") {
    throw ConfigError("unknown experiment id '" + id + "'");
  }
  if (cfg.estimation_tasks < 1 || cfg.mc_trials < 1 || cfg.repetitions < 1) {
    throw ConfigError("estimation tasks, trials, and repetitions must be positive");
  }
  std::vector<int> sizes = cfg.sizes;
  if (sizes.empty()) {
    if (id == "pseudo_vs_true") {
      sizes = {10};
    } else if (id == "bound_comparison") {
      for (int n = 10; n <= 50; ++n) sizes.push_back(n);
    } else if (id == "pnb_vs_nb") {
      sizes = {10, 25, 50, 75};
    } else {
      for (int n = 2; n <= 15; ++n) sizes.push_back(n);
      sizes.push_back(25);
      sizes.push_back(50);
    }
  }
  for (int n : sizes) {
    if (n < 2) throw ConfigError("committee sizes must be at least 2");
  }

  ResultTable table;
  table.header = {"experiment", "panel",  "n",      "gamma", "expert",
                  "metric",     "method", "trials", "value", "std_error"};
  table.metadata = {
      {"code_version", kVersion},
      {"experiment", id},
      {"seed", std::to_string(cfg.seed)},
      {"tie", cfg.tie == TieRule::FairCoin ? "fair"
              : cfg.tie == TieRule::FavorPositive ? "pos" : "neg"},
      {"estimation_tasks", std::to_string(cfg.estimation_tasks)},
      {"mc_trials", std::to_string(cfg.mc_trials)},
      {"repetitions", std::to_string(cfg.repetitions)},
      {"exact_budget", std::to_string(cfg.exact_budget)},
  };
  {
    std::string joined;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      joined += (i ? "," : "") + std::to_string(sizes[i]);
    }
    table.metadata.emplace_back("sizes", joined);
  }

  struct Panel {
    std::string name;
    double lo, hi;
  };

  if (id == "pseudo_vs_true") {
    const std::vector<Panel> panels = {{"good", 0.5, 0.9}, {"mixed", 0.3, 0.9}};
    struct Point {
      Panel panel;
      int n;
    };
    std::vector<Point> points;
    for (const auto& panel : panels) {
      for (int n : sizes) points.push_back({panel, n});
    }
    std::vector<std::vector<detail::Row>> groups(points.size());
    detail::parallel_for_index(points.size(), [&](std::size_t pi) {
      const auto& pt = points[pi];
      const Committee c(equally_spaced(pt.n, pt.panel.lo, pt.panel.hi));
      const auto pseudo = pseudo_competences(c, cfg.tie);
      // per-expert empirical estimates, one independent stream per repetition
      std::vector<std::vector<double>> reps(static_cast<std::size_t>(cfg.repetitions));
      for (int r = 0; r < cfg.repetitions; ++r) {
        reps[static_cast<std::size_t>(r)] = streamed_pseudo_estimates(
            c, cfg.estimation_tasks, cfg.tie, detail::point_seed(cfg.seed, pi, r, 0));
      }
      auto& rows = groups[pi];
      for (int i = 0; i < c.size(); ++i) {
        const PeerProfile peer = peer_accuracy(c, i, cfg.tie);
        rows.push_back(detail::result_row(id, pt.panel.name, pt.n, "", i + 1, "p", "exact", 0,
                                          c.competence(i), 0.0));
        rows.push_back(detail::result_row(id, pt.panel.name, pt.n, "", i + 1, "peer_acc", "exact",
                                          0, peer.p_peer, 0.0));
        rows.push_back(detail::result_row(id, pt.panel.name, pt.n, "", i + 1, "pseudo", "exact", 0,
                                          pseudo[static_cast<std::size_t>(i)], 0.0));
        std::vector<double> vals(static_cast<std::size_t>(cfg.repetitions));
        for (int r = 0; r < cfg.repetitions; ++r) {
          vals[static_cast<std::size_t>(r)] = reps[static_cast<std::size_t>(r)][static_cast<std::size_t>(i)];
        }
        const auto ms = detail::mc_stats(vals, cfg.estimation_tasks);
        rows.push_back(detail::result_row(id, pt.panel.name, pt.n, "", i + 1, "pseudo_emp", "mc",
                                          cfg.estimation_tasks, ms.mean, ms.std_error));
      }
    });
    for (auto& g : groups) {
      for (auto& row : g) table.rows.push_back(std::move(row));
    }
    return table;
  }

  if (id == "bound_comparison") {
    for (int n : sizes) {
      const auto p = equally_spaced(n, 0.3, 0.9);
      const double phi = committee_potential(p);
      table.rows.push_back(
          detail::result_row(id, "", n, "", 0, "improved_upper", "exact", 0, improved_upper(p), 0.0));
      table.rows.push_back(
          detail::result_row(id, "", n, "", 0, "ks_upper", "exact", 0, potential_upper(phi), 0.0));
    }
    return table;
  }

  if (id == "pnb_vs_nb") {
    const std::vector<Panel> panels = {{"good", 0.5, 0.9}, {"mixed", 0.15, 0.9}};
    struct Point {
      Panel panel;
      int n;
    };
    std::vector<Point> points;
    for (const auto& panel : panels) {
      for (int n : sizes) points.push_back({panel, n});
    }
    std::vector<std::vector<detail::Row>> groups(points.size());
    detail::parallel_for_index(points.size(), [&](std::size_t pi) {
      const auto& pt = points[pi];
      const Committee c(equally_spaced(pt.n, pt.panel.lo, pt.panel.hi));
      const WeightVector nb = make_weights(c.competences(), WeightMode::Log);
      const WeightVector pnb_closed = pseudo_log_weights(c, cfg.tie);
      std::vector<double> err_nb(static_cast<std::size_t>(cfg.repetitions));
      std::vector<double> err_pnb(static_cast<std::size_t>(cfg.repetitions));
      std::vector<double> err_pnb_closed(static_cast<std::size_t>(cfg.repetitions));
      for (int r = 0; r < cfg.repetitions; ++r) {
        const auto estimates = streamed_pseudo_estimates(c, cfg.estimation_tasks, cfg.tie,
                                                         detail::point_seed(cfg.seed, pi, r, 0));
        const WeightVector pnb_emp =
            detail::weights_from_estimates(estimates, cfg.estimation_tasks, WeightMode::Log);
        const WeightVector rules[3] = {nb, pnb_emp, pnb_closed};
        const auto errs = joint_weighted_errors(c, rules, cfg.tie, cfg.mc_trials,
                                                detail::point_seed(cfg.seed, pi, r, 1));
        err_nb[static_cast<std::size_t>(r)] = errs[0];
        err_pnb[static_cast<std::size_t>(r)] = errs[1];
        err_pnb_closed[static_cast<std::size_t>(r)] = errs[2];
      }
      auto& rows = groups[pi];
      rows.push_back(detail::result_row(id, pt.panel.name, pt.n, "", 0, "err_mv", "exact", 0,
                                        1.0 - majority_accuracy(c, cfg.tie), 0.0));
      const auto nb_ms = detail::mc_stats(err_nb, cfg.mc_trials);
      const auto pnb_ms = detail::mc_stats(err_pnb, cfg.mc_trials);
      const auto closed_ms = detail::mc_stats(err_pnb_closed, cfg.mc_trials);
      rows.push_back(detail::result_row(id, pt.panel.name, pt.n, "", 0, "err_nb", "mc",
                                        cfg.mc_trials, nb_ms.mean, nb_ms.std_error));
      rows.push_back(detail::result_row(id, pt.panel.name, pt.n, "", 0, "err_pnb", "mc",
                                        cfg.mc_trials, pnb_ms.mean, pnb_ms.std_error));
      rows.push_back(detail::result_row(id, pt.panel.name, pt.n, "", 0, "err_pnb_closed", "mc",
                                        cfg.mc_trials, closed_ms.mean, closed_ms.std_error));
    });
    for (auto& g : groups) {
      for (auto& row : g) table.rows.push_back(std::move(row));
    }
    return table;
  }

  // balancing_sweep
  const std::vector<std::pair<std::string, double>> gammas = {
      {"1e-1", 1e-1}, {"1e-2", 1e-2}, {"1e-3", 1e-3}, {"1e-4", 1e-4}, {"1e-5", 1e-5}};
  struct Point {
    std::string label;
    double gamma;
    int n;
  };
  std::vector<Point> points;
  for (const auto& [label, gamma] : gammas) {
    for (int n : sizes) points.push_back({label, gamma, n});
  }
  std::vector<std::vector<detail::Row>> groups(points.size());
  detail::parallel_for_index(points.size(), [&](std::size_t pi) {
    const auto& pt = points[pi];
    const Committee c(equally_spaced(pt.n, 0.5, 1.0 - pt.gamma));
    const auto pseudo = pseudo_competences(c, cfg.tie);
    const WeightVector rules[4] = {
        make_weights(c.competences(), WeightMode::Log),
        make_weights(c.competences(), WeightMode::Linear),
        make_weights(pseudo, WeightMode::Log, WeightProvenance::PseudoLog),
        make_weights(pseudo, WeightMode::Linear, WeightProvenance::PseudoLinear),
    };
    const char* metrics[4] = {"err_nb", "err_lnb", "err_pnb", "err_lpnb"};
    auto& rows = groups[pi];
    if (pt.n <= cfg.exact_budget) {
      for (int r = 0; r < 4; ++r) {
        const auto est = exact_error(c, rules[r], cfg.tie);
        rows.push_back(detail::result_row(id, "", pt.n, pt.label, 0, metrics[r], "exact", 0,
                                          est.value, 0.0));
      }
    } else {
      std::vector<std::vector<double>> errs(4, std::vector<double>(static_cast<std::size_t>(cfg.repetitions)));
      for (int r = 0; r < cfg.repetitions; ++r) {
        const auto e = joint_weighted_errors(c, rules, cfg.tie, cfg.mc_trials,
                                             detail::point_seed(cfg.seed, pi, r, 1));
        for (int k = 0; k < 4; ++k) errs[static_cast<std::size_t>(k)][static_cast<std::size_t>(r)] = e[static_cast<std::size_t>(k)];
      }
      for (int k = 0; k < 4; ++k) {
        const auto ms = detail::mc_stats(errs[static_cast<std::size_t>(k)], cfg.mc_trials);
        rows.push_back(detail::result_row(id, "", pt.n, pt.label, 0, metrics[k], "mc",
                                          cfg.mc_trials, ms.mean, ms.std_error));
      }
    }
  });
  for (auto& g : groups) {
    for (auto& row : g) table.rows.push_back(std::move(row));
  }
  return table;
}

/// One two-column (x, value) series per plotted curve, grouped by
/// (panel, gamma, metric); x is the expert index for per-expert tables and
/// the committee size otherwise.
struct PlotCurve {
  std::string stem;
  std::vector<std::pair<std::string, std::string>> points;
};

inline std::vector<PlotCurve> plot_curves(const ResultTable& table) {
  std::vector<PlotCurve> curves;
  for (const auto& row : table.rows) {
    const std::string& experiment = row[0];
    const std::string& panel = row[1];
    const std::string& gamma = row[3];
    const std::string& expert = row[4];
    const std::string& metric = row[5];
    std::string stem = experiment;
    if (!panel.empty()) stem += "_" + panel;
    if (!gamma.empty()) stem += "_g" + gamma;
    stem += "_" + metric;
    const std::string& x = expert.empty() ? row[2] : expert;
    PlotCurve* curve = nullptr;
    for (auto& c : curves) {
      if (c.stem == stem) {
        curve = &c;
        break;
      }
    }
    if (curve == nullptr) {
      curves.push_back({stem, {}});
      curve = &curves.back();
    }
    curve->points.emplace_back(x, row[8]);
  }
  return curves;
}

}  // namespace cwl
