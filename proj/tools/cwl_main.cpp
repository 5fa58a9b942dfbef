// Command-line surface for the cwl library: aggregate opinion files, analyze
// committees, and reproduce the simulation experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cwl/cwl.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

cwl::TieRule parse_tie(const std::string& s) {
  if (s == "fair") return cwl::TieRule::FairCoin;
  if (s == "pos") return cwl::TieRule::FavorPositive;
  if (s == "neg") return cwl::TieRule::FavorNegative;
  throw cwl::ConfigError("unknown tie rule '" + s + "' (expected fair, pos, or neg)");
}

const char* tie_name(cwl::TieRule tie) {
  switch (tie) {
    case cwl::TieRule::FavorPositive: return "pos";
    case cwl::TieRule::FavorNegative: return "neg";
    case cwl::TieRule::FairCoin: break;
  }
  return "fair";
}

std::vector<double> parse_real_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw cwl::ConfigError("could not parse real value '" + item + "'");
    }
  }
  return out;
}

std::vector<double> load_committee_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cwl::ConfigError("cannot open committee file '" + path + "'");
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    for (double v : parse_real_list(line)) out.push_back(v);
  }
  if (out.empty()) throw cwl::ConfigError("committee file '" + path + "' holds no values");
  return out;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw cwl::ConfigError("cannot open output file '" + path + "'");
  return out;
}

// ---------------------------------------------------------------------------
// aggregate

struct AggregateOptions {
  std::string input;
  std::string mode = "mv";
  std::string out = "decisions.csv";
  std::string weights = "log";
  std::uint64_t seed = 0;
  double delta = 0.1;
  cwl::TieRule tie = cwl::TieRule::FairCoin;
};

void write_config_lines(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& kv) {
  os << "# cwl_version=" << cwl::kVersion << "\n";
  for (const auto& [k, v] : kv) os << "# " << k << "=" << v << "\n";
}

int run_aggregate(const AggregateOptions& opt) {
  std::ifstream in(opt.input);
  if (!in) throw cwl::ConfigError("cannot open input file '" + opt.input + "'");
  const cwl::OpinionMatrix m = cwl::read_opinions_csv(in, opt.input);

  std::vector<std::pair<std::string, std::string>> config = {
      {"command", "aggregate"},
      {"input", opt.input},
      {"mode", opt.mode},
      {"tie", tie_name(opt.tie)},
      {"seed", std::to_string(opt.seed)},
  };

  if (opt.mode == "adaptive") {
    cwl::AdaptiveConfig cfg;
    cfg.delta = opt.delta;
    cfg.tie = opt.tie;
    if (opt.weights == "log") {
      cfg.weight_mode = cwl::WeightMode::Log;
    } else if (opt.weights == "linear") {
      cfg.weight_mode = cwl::WeightMode::Linear;
    } else {
      throw cwl::ConfigError("unknown weight mode '" + opt.weights + "'");
    }
    const auto outcome = cwl::adaptive_aggregate(m, cfg, opt.seed);
    config.emplace_back("weights", opt.weights);
    config.emplace_back("delta", cwl::format_real(opt.delta));
    config.emplace_back("freeze_tau",
                        outcome.freeze_time ? std::to_string(*outcome.freeze_time) : "none");
    auto out = open_output(opt.out);
    write_config_lines(out, config);
    out << "task,decision,frozen\n";
    for (long t = 0; t < m.tasks(); ++t) {
      out << (t + 1) << ',' << static_cast<int>(outcome.decisions[static_cast<std::size_t>(t)])
          << ',' << (outcome.frozen_at(t + 1) ? 1 : 0) << "\n";
    }
    // confidence trace alongside the decisions
    fs::path trace_path(opt.out);
    trace_path.replace_extension();
    trace_path += "_trace.csv";
    auto trace = open_output(trace_path.string());
    write_config_lines(trace, config);
    trace << "tau,phi_tilde\n";
    for (std::size_t k = 0; k < outcome.phi_trace.size(); ++k) {
      trace << (k + 1) << ',' << cwl::format_real(outcome.phi_trace[k]) << "\n";
    }
    std::cout << "wrote " << opt.out << " and " << trace_path.string() << "\n";
    return 0;
  }

  std::vector<cwl::Opinion> decisions;
  if (opt.mode == "mv") {
    const std::vector<double> ones(static_cast<std::size_t>(m.experts()), 1.0);
    const auto w = cwl::make_weights(ones, cwl::WeightMode::Uniform);
    cwl::RngStream rng(opt.seed, 0);
    for (long t = 0; t < m.tasks(); ++t) {
      decisions.push_back(cwl::weighted_vote(m.column(t), w, opt.tie, &rng));
    }
  } else if (opt.mode == "block-log") {
    decisions = cwl::block_aggregate(m, cwl::WeightMode::Log, opt.tie, opt.seed);
  } else if (opt.mode == "block-linear") {
    decisions = cwl::block_aggregate(m, cwl::WeightMode::Linear, opt.tie, opt.seed);
  } else {
    throw cwl::ConfigError("unknown mode '" + opt.mode +
                           "' (expected mv, block-log, block-linear, or adaptive)");
  }
  auto out = open_output(opt.out);
  write_config_lines(out, config);
  out << "task,decision\n";
  for (long t = 0; t < m.tasks(); ++t) {
    out << (t + 1) << ',' << static_cast<int>(decisions[static_cast<std::size_t>(t)]) << "\n";
  }
  std::cout << "wrote " << opt.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeOptions {
  std::string p_list;
  std::string p_file;
  std::string spaced;  // "lo,hi" recipe
  int n = 0;
  int horizon = 0;
  std::optional<double> gamma;
  std::optional<double> delta;
  long trials = 100000;  // block-bound sample count
  cwl::TieRule tie = cwl::TieRule::FairCoin;
  std::string out = "analysis.csv";
  std::string format = "csv";
};

struct ReportRow {
  std::string metric;
  std::string expert;  // 1-based index or empty
  double value = 0.0;
  std::string flag;
};

int run_analyze(const AnalyzeOptions& opt) {
  std::vector<double> p;
  bool from_recipe = false;
  double lo = 0.0, hi = 0.0;
  if (!opt.p_list.empty()) {
    p = parse_real_list(opt.p_list);
  } else if (!opt.p_file.empty()) {
    p = load_committee_file(opt.p_file);
  } else if (!opt.spaced.empty()) {
    const auto ends = parse_real_list(opt.spaced);
    if (ends.size() != 2) throw cwl::ConfigError("--spaced expects 'lo,hi'");
    if (opt.n < 2) throw cwl::ConfigError("--spaced requires --n of at least 2");
    lo = ends[0];
    hi = ends[1];
    p = cwl::equally_spaced(opt.n, lo, hi);
    from_recipe = true;
  } else {
    throw cwl::ConfigError("no committee given: use --p, --p-file, or --spaced with --n");
  }
  const cwl::Committee c(p);
  const int n = c.size();
  const auto report = cwl::bound_report(c, opt.tie);

  std::vector<ReportRow> rows;
  const auto add = [&rows](const std::string& metric, double value, const std::string& flag = "") {
    rows.push_back({metric, "", value, flag});
  };
  for (int i = 0; i < n; ++i) {
    const std::string idx = std::to_string(i + 1);
    rows.push_back({"p", idx, report.p[static_cast<std::size_t>(i)], ""});
    rows.push_back({"eps", idx, report.eps[static_cast<std::size_t>(i)], ""});
    rows.push_back({"peer_acc", idx, report.peer_acc[static_cast<std::size_t>(i)], ""});
    rows.push_back({"pseudo", idx, report.pseudo[static_cast<std::size_t>(i)], ""});
  }
  add("good", c.good() ? 1.0 : 0.0);
  add("balance_margin", c.balance_margin());
  if (opt.gamma) add("balanced_at_gamma", c.absolutely_balanced(*opt.gamma) ? 1.0 : 0.0);
  add("phi", report.phi);
  add("phi_tilde", report.phi_tilde);
  if (report.phi > 0.0 && std::isfinite(report.phi)) {
    add("potential_ratio", report.phi_tilde / report.phi);
  }
  const auto vacuous_flag = [&report](const char* name) {
    for (const auto& v : report.vacuous) {
      if (v == name) return std::string("vacuous");
    }
    return std::string();
  };
  add("improved_upper", report.improved_upper, vacuous_flag("improved_upper"));
  add("ks_upper", report.ks_upper, vacuous_flag("ks_upper"));
  add("pnb_upper", report.pnb_upper, vacuous_flag("pnb_upper"));
  add("pnb_lower", report.pnb_lower);

  // unsupervised-vs-true gap diagnostics (analysis mode has the true p)
  double bias_l1 = 0.0, delta_proxy = 0.0, min_peer = 1.0;
  for (int i = 0; i < n; ++i) {
    bias_l1 += std::fabs(report.p[static_cast<std::size_t>(i)] - report.pseudo[static_cast<std::size_t>(i)]);
    delta_proxy += 1.0 - report.peer_acc[static_cast<std::size_t>(i)];
    min_peer = std::min(min_peer, report.peer_acc[static_cast<std::size_t>(i)]);
  }
  add("pseudo_bias_l1", bias_l1);
  add("delta_proxy", delta_proxy);
  add("min_peer_acc", min_peer);

  // consistency rate: the family rate over [n, horizon] for recipe input,
  // the committee's own majority accuracy otherwise
  double rate = cwl::majority_accuracy(c, opt.tie);
  if (from_recipe && opt.horizon > n) {
    const auto cr = cwl::consistency_rate(
        [lo, hi](int m) { return cwl::equally_spaced(m, lo, hi); }, n, opt.horizon, opt.tie);
    rate = cr.value;
    add("rate_horizon", static_cast<double>(cr.horizon));
  }
  add("rate", rate);
  if (rate > 0.5) {
    add("rho", (1.0 - rate) / (rate - 0.5));
    if (opt.gamma) add("ratio_lower_bound", cwl::ratio_lower_bound(*opt.gamma, rate));
  }

  if (opt.gamma && opt.delta && c.absolutely_balanced(*opt.gamma) && min_peer > 0.5) {
    add("corollary_condition",
        cwl::corollary_condition(c, *opt.delta, *opt.gamma, opt.tie) ? 1.0 : 0.0);
  }
  if (opt.gamma && min_peer > 0.5) {
    // smallest epsilon accepted by the weight-deviation lemma, with the
    // exact L1 weight gap next to the implied bound
    const double radius = cwl::deviation_radius(*opt.gamma);
    const double eps_star = (1.0 / (min_peer - 0.5) - 2.0) / radius;
    if (eps_star > 0.0) {
      add("deviation_epsilon_star", eps_star);
      add("deviation_bound_l1", eps_star * n / 2.0);
    }
    const auto w_true = cwl::make_weights(c.competences(), cwl::WeightMode::Log);
    const auto w_pseudo = cwl::pseudo_log_weights(c, opt.tie);
    double gap = 0.0;
    for (int i = 0; i < n; ++i) {
      gap += std::fabs(w_true.w[static_cast<std::size_t>(i)] - w_pseudo.w[static_cast<std::size_t>(i)]);
    }
    add("weight_gap_l1", gap);
  }
  if (opt.delta) {
    const double sampling = (12.0 / static_cast<double>(opt.trials)) * std::log(8.0 * n / *opt.delta);
    add("block_sampling_term", sampling);
    const double eps_hi = std::min(5.0, 2.0 * report.phi / n);
    if (rate > 0.5 && std::isfinite(report.phi)) {
      const double rho = (1.0 - rate) / (rate - 0.5);
      const double eps_lo = std::cbrt(rho * sampling);
      add("block_eps_window_lo", eps_lo);
      add("block_eps_window_hi", eps_hi);
      if (eps_lo < eps_hi) {
        const double eps_mid = 0.5 * (eps_lo + eps_hi);
        const auto bb = cwl::block_error_bound(report.phi, n, opt.trials, *opt.delta, eps_mid,
                                               rho, opt.gamma);
        add("block_error_bound", bb.applicable ? bb.value : std::numeric_limits<double>::quiet_NaN(),
            bb.applicable ? (bb.vacuous ? "vacuous" : "") : "inapplicable: " + bb.violated);
      }
    }
    add("confidence_event", cwl::confidence_event(report.pseudo, *opt.delta) ? 1.0 : 0.0);
  }
  const auto cc = cwl::consistency_conditions(c.competences());
  add("nb_sum", cc.nb_sum);
  add("mv_sum", cc.mv_sum);
  add("mv_threshold", cc.mv_threshold);
  add("mv_condition", cc.both_hold_at_n ? 1.0 : 0.0);

  add("err_mv", 1.0 - cwl::majority_accuracy(c, opt.tie));
  if (n <= 15) {
    const auto pseudo = cwl::pseudo_competences(c, opt.tie);
    add("err_nb", cwl::exact_error(c, cwl::make_weights(c.competences(), cwl::WeightMode::Log), opt.tie).value);
    add("err_lnb", cwl::exact_error(c, cwl::make_weights(c.competences(), cwl::WeightMode::Linear), opt.tie).value);
    add("err_pnb", cwl::exact_error(c, cwl::make_weights(pseudo, cwl::WeightMode::Log, cwl::WeightProvenance::PseudoLog), opt.tie).value);
    add("err_lpnb", cwl::exact_error(c, cwl::make_weights(pseudo, cwl::WeightMode::Linear, cwl::WeightProvenance::PseudoLinear), opt.tie).value);
  }

  std::vector<std::pair<std::string, std::string>> config = {
      {"command", "analyze"},
      {"n", std::to_string(n)},
      {"tie", tie_name(opt.tie)},
      {"trials", std::to_string(opt.trials)},
  };
  if (opt.gamma) config.emplace_back("gamma", cwl::format_real(*opt.gamma));
  if (opt.delta) config.emplace_back("delta", cwl::format_real(*opt.delta));
  if (from_recipe) {
    config.emplace_back("spaced", cwl::format_real(lo) + "," + cwl::format_real(hi));
    if (opt.horizon > 0) config.emplace_back("horizon", std::to_string(opt.horizon));
  }

  if (opt.format == "json") {
    json j;
    j["cwl_version"] = cwl::kVersion;
    for (const auto& [k, v] : config) j["config"][k] = v;
    for (const auto& row : rows) {
      json entry;
      entry["value"] = row.value;
      if (!row.expert.empty()) entry["expert"] = std::stoi(row.expert);
      if (!row.flag.empty()) entry["flag"] = row.flag;
      j["metrics"][row.metric].push_back(entry);
    }
    auto out = open_output(opt.out);
    out << j.dump(2) << "\n";
  } else if (opt.format == "csv") {
    auto out = open_output(opt.out);
    write_config_lines(out, config);
    out << "metric,expert,value,flag\n";
    for (const auto& row : rows) {
      out << row.metric << ',' << row.expert << ',' << cwl::format_real(row.value) << ','
          << row.flag << "\n";
    }
  } else {
    throw cwl::ConfigError("unknown format '" + opt.format + "' (expected csv or json)");
  }
  std::cout << "wrote " << opt.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// reproduce

struct ReproduceOptions {
  std::string experiment;
  std::string out_dir = "results";
  std::uint64_t seed = 0;
  long trials = 100000;
  long tasks = 100000;
  int reps = 20;
  int exact_budget = 15;
  std::string sizes;
  cwl::TieRule tie = cwl::TieRule::FairCoin;
};

std::vector<int> parse_size_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_real_list(text)) out.push_back(static_cast<int>(v));
  return out;
}

// pivot the long table into one wide per-panel file: x column plus one value
// (and stderr, for Monte Carlo metrics) column per curve
void write_panel_files(const cwl::ResultTable& table, const fs::path& dir,
                       const std::string& id) {
  struct Panel {
    std::string key;  // panel + gamma
    std::vector<std::string> xs;
    std::vector<std::string> metrics;
    std::vector<bool> has_stderr;
    // values[m][x]
    std::vector<std::vector<std::string>> values;
    std::vector<std::vector<std::string>> errors;
  };
  std::vector<Panel> panels;
  const bool per_expert = id == "pseudo_vs_true";
  for (const auto& row : table.rows) {
    std::string key = row[1];
    if (!row[3].empty()) key += (key.empty() ? "g" : "_g") + row[3];
    Panel* panel = nullptr;
    for (auto& pl : panels) {
      if (pl.key == key) {
        panel = &pl;
        break;
      }
    }
    if (panel == nullptr) {
      panels.push_back({key, {}, {}, {}, {}, {}});
      panel = &panels.back();
    }
    const std::string& x = per_expert ? row[4] : row[2];
    std::size_t xi = 0;
    for (; xi < panel->xs.size(); ++xi) {
      if (panel->xs[xi] == x) break;
    }
    if (xi == panel->xs.size()) {
      panel->xs.push_back(x);
      for (auto& col : panel->values) col.emplace_back();
      for (auto& col : panel->errors) col.emplace_back();
    }
    const std::string& metric = row[5];
    std::size_t mi = 0;
    for (; mi < panel->metrics.size(); ++mi) {
      if (panel->metrics[mi] == metric) break;
    }
    if (mi == panel->metrics.size()) {
      panel->metrics.push_back(metric);
      panel->has_stderr.push_back(row[6] == "mc");
      panel->values.emplace_back(panel->xs.size());
      panel->errors.emplace_back(panel->xs.size());
    }
    panel->values[mi][xi] = row[8];
    panel->errors[mi][xi] = row[9];
  }
  for (const auto& panel : panels) {
    fs::path path = dir / (panel.key.empty() ? id + ".csv" : id + "_" + panel.key + ".csv");
    auto out = open_output(path.string());
    for (const auto& [k, v] : table.metadata) out << "# " << k << "=" << v << "\n";
    out << (per_expert ? "expert" : "n");
    for (std::size_t m = 0; m < panel.metrics.size(); ++m) {
      out << ',' << panel.metrics[m];
      if (panel.has_stderr[m]) out << ',' << panel.metrics[m] << "_stderr";
    }
    out << "\n";
    for (std::size_t xi = 0; xi < panel.xs.size(); ++xi) {
      out << panel.xs[xi];
      for (std::size_t m = 0; m < panel.metrics.size(); ++m) {
        out << ',' << panel.values[m][xi];
        if (panel.has_stderr[m]) out << ',' << panel.errors[m][xi];
      }
      out << "\n";
    }
  }
}

int run_reproduce(const ReproduceOptions& opt) {
  cwl::ExperimentConfig cfg;
  cfg.experiment = opt.experiment;
  cfg.seed = opt.seed;
  cfg.mc_trials = opt.trials;
  cfg.estimation_tasks = opt.tasks;
  cfg.repetitions = opt.reps;
  cfg.exact_budget = opt.exact_budget;
  cfg.tie = opt.tie;
  if (!opt.sizes.empty()) cfg.sizes = parse_size_list(opt.sizes);
  const cwl::ResultTable table = cwl::run_experiment(cfg);

  const fs::path dir(opt.out_dir);
  fs::create_directories(dir);
  {
    auto out = open_output((dir / (opt.experiment + "_table.csv")).string());
    out << table.to_csv();
  }
  write_panel_files(table, dir, opt.experiment);
  for (const auto& curve : cwl::plot_curves(table)) {
    auto out = open_output((dir / (curve.stem + ".dat")).string());
    for (const auto& [x, y] : curve.points) out << x << ' ' << y << "\n";
  }
  std::cout << "wrote " << opt.out_dir << "/" << opt.experiment << "_table.csv and panel/plot files\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cwl: unsupervised opinion aggregation via peer-agreement competences"};
  app.require_subcommand(1);

  std::string tie_text = "fair";

  AggregateOptions agg;
  auto* cmd_agg = app.add_subcommand("aggregate", "aggregate an opinion CSV into decisions");
  cmd_agg->add_option("input", agg.input, "opinion CSV file")->required();
  cmd_agg->add_option("--mode", agg.mode, "mv | block-log | block-linear | adaptive");
  cmd_agg->add_option("--out", agg.out, "decisions output path");
  cmd_agg->add_option("--seed", agg.seed, "random seed");
  cmd_agg->add_option("--delta", agg.delta, "adaptive confidence target");
  cmd_agg->add_option("--weights", agg.weights, "adaptive weight mode: log | linear");
  cmd_agg->add_option("--tie", tie_text, "tie rule: fair | pos | neg");

  AnalyzeOptions ana;
  auto* cmd_ana = app.add_subcommand("analyze", "exact analytics and bounds for a committee");
  cmd_ana->add_option("--p", ana.p_list, "comma-separated competences");
  cmd_ana->add_option("--p-file", ana.p_file, "file of competences (one or more per line)");
  cmd_ana->add_option("--spaced", ana.spaced, "equally spaced recipe 'lo,hi'");
  cmd_ana->add_option("--n", ana.n, "committee size for --spaced");
  cmd_ana->add_option("--horizon", ana.horizon, "rate horizon for --spaced recipes");
  cmd_ana->add_option("--gamma", ana.gamma, "balancing parameter");
  cmd_ana->add_option("--delta", ana.delta, "confidence target");
  cmd_ana->add_option("--trials", ana.trials, "sample count for the block bound");
  cmd_ana->add_option("--out", ana.out, "report output path");
  cmd_ana->add_option("--format", ana.format, "csv | json");
  cmd_ana->add_option("--tie", tie_text, "tie rule: fair | pos | neg");

  ReproduceOptions rep;
  auto* cmd_rep = app.add_subcommand("reproduce", "run a simulation experiment");
  cmd_rep->add_option("experiment", rep.experiment,
                      "pseudo_vs_true | bound_comparison | pnb_vs_nb | balancing_sweep")
      ->required();
  cmd_rep->add_option("--out", rep.out_dir, "output directory");
  cmd_rep->add_option("--seed", rep.seed, "random seed");
  cmd_rep->add_option("--trials", rep.trials, "Monte Carlo decision trials per repetition");
  cmd_rep->add_option("--tasks", rep.tasks, "pseudo-competence estimation tasks");
  cmd_rep->add_option("--reps", rep.reps, "repetitions per Monte Carlo point");
  cmd_rep->add_option("--sizes", rep.sizes, "comma-separated committee sizes");
  cmd_rep->add_option("--exact-budget", rep.exact_budget, "largest size evaluated exactly");
  cmd_rep->add_option("--tie", tie_text, "tie rule: fair | pos | neg");

  try {
    app.parse(argc, argv);
    const cwl::TieRule tie = parse_tie(tie_text);
    if (app.got_subcommand(cmd_agg)) {
      agg.tie = tie;
      return run_aggregate(agg);
    }
    if (app.got_subcommand(cmd_ana)) {
      ana.tie = tie;
      return run_analyze(ana);
    }
    rep.tie = tie;
    return run_reproduce(rep);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const cwl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
