#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>

#include "fluidq/sim.hpp"
#include "fluidq/spec_io.hpp"
#include "fluidq/table.hpp"
#include "fluidq/version.hpp"

namespace fluidq::cli {

namespace {

namespace fs = std::filesystem;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kNotRecurrent = 2;

std::vector<double> parse_grid(const std::string& text) {
  double a = 0.0, b = 0.0;
  int n = 0;
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  in >> a >> c1 >> b >> c2 >> n;
  if (!in || c1 != ':' || c2 != ':' || n < 1 || b < a)
    throw SpecParseError("grid: expected a:b:n with b >= a and n >= 1");
  std::vector<double> grid(n);
  for (int i = 0; i < n; ++i)
    grid[i] = (n == 1) ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
  return grid;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  if (out.empty()) throw SpecParseError("values: expected a comma-separated list");
  return out;
}

std::vector<std::string> provenance(const SolverOptions& opts) {
  std::ostringstream tol;
  tol << "tolerances: generator=" << opts.generator_tol
      << " nare_step=" << opts.nare_step_tol << " nare_residual=" << opts.nare_residual_tol
      << " sylvester_rel=" << opts.sylvester_rel_tol;
  return {std::string("fluidq ") + kVersion, tol.str()};
}

void write_drifts(const ColoredSolution& sol, const std::vector<std::string>& footer,
                  const std::string& path) {
  ResultTable t;
  t.columns = {"color", "drift_up", "drift_down", "negative_drift"};
  for (int c = 1; c <= sol.C; ++c)
    t.add_row({static_cast<long long>(c), sol.drifts[c].first, sol.drifts[c].second,
               static_cast<long long>(sol.drifts[c].first < sol.drifts[c].second ? 1 : 0)});
  t.footers = footer;
  t.write_csv(path);
}

struct SolveArgs {
  std::string spec_path;
  std::string out_dir = ".";
  std::string grid = "0:10:21";
  double tol = -1.0;
};

SolverOptions make_options(double tol) {
  SolverOptions opts;
  if (tol > 0.0) opts.generator_tol = tol;
  return opts;
}

int cmd_solve(const SolveArgs& args) {
  const ModelSpec spec = load_model_spec(args.spec_path);
  const SolverOptions opts = make_options(args.tol);
  const std::vector<double> grid = parse_grid(args.grid);
  const auto footer = provenance(opts);
  fs::create_directories(args.out_dir);
  auto path = [&](const char* name) { return (fs::path(args.out_dir) / name).string(); };

  if (spec.kind == "classic") {
    ClassicSolution sol;
    try {
      sol = solve_classic(*spec.classic, opts);
    } catch (const Unstable& e) {
      std::cerr << e.what() << "\n";
      return kNotRecurrent;
    }
    ResultTable cdf;
    cdf.columns = {"x", "cdf"};
    for (double x : grid) cdf.add_row({x, classic_level_cdf(sol, x, opts)});
    cdf.footers = footer;
    cdf.write_csv(path("cdf.csv"));
    return kOk;
  }

  if (spec.kind == "colored") {
    const ColoredSolution sol = solve_colored(*spec.colored, opts);
    write_drifts(sol, footer, path("drifts.csv"));
    if (!sol.recurrent) {
      std::cerr << "model is not positive recurrent; drift table written\n";
      return kNotRecurrent;
    }
    ResultTable cdf;
    cdf.columns = {"x", "cdf"};
    for (double x : grid) cdf.add_row({x, level_cdf(sol, x, opts)});
    cdf.footers = footer;
    cdf.write_csv(path("cdf.csv"));

    ResultTable gamma;
    gamma.columns = {"color", "probability"};
    const auto g = top_color_dist(sol, opts);
    for (size_t c = 0; c < g.size(); ++c)
      gamma.add_row({static_cast<long long>(c), g[c]});
    gamma.footers = footer;
    gamma.write_csv(path("gamma.csv"));
    return kOk;
  }

  // Jump-based kinds.
  const JumpModel jm = spec_jump_model(spec);
  const JumpSolution js = solve_jumps(jm, opts);
  write_drifts(js.colored, footer, path("drifts.csv"));
  if (!js.recurrent()) {
    std::cerr << "model is not positive recurrent; drift table written\n";
    return kNotRecurrent;
  }

  ResultTable cdf;
  cdf.columns = {"x", "cdf"};
  for (double x : grid) cdf.add_row({x, jump_level_cdf(js, x, opts)});
  cdf.footers = footer;
  cdf.write_csv(path("cdf.csv"));

  ResultTable gamma;
  gamma.columns = {"color", "probability"};
  const auto g = jump_top_color_dist(js, opts);
  for (size_t c = 0; c < g.size(); ++c) gamma.add_row({static_cast<long long>(c), g[c]});
  gamma.footers = footer;
  gamma.write_csv(path("gamma.csv"));

  const Mat marginal = joint_marginal(js, opts);
  ResultTable marg;
  marg.columns = {"color", "state", "probability"};
  for (Eigen::Index c = 0; c < marginal.rows(); ++c)
    for (Eigen::Index i = 0; i < marginal.cols(); ++i)
      marg.add_row({static_cast<long long>(c), static_cast<long long>(i), marginal(c, i)});
  marg.footers = footer;
  marg.write_csv(path("marginals.csv"));

  if (spec.kind == "lcfs") {
    const auto loss = lcfs_loss_probability(js, *spec.lcfs, opts);
    ResultTable t;
    t.columns = {"type", "threshold", "loss"};
    for (size_t l = 0; l < loss.size(); ++l)
      t.add_row({static_cast<long long>(l + 1), spec.lcfs->thresholds[l], loss[l]});
    t.footers = footer;
    t.write_csv(path("loss.csv"));
  }
  if (spec.kind == "cascade") {
    const auto q = cascade_queue_length_dist(js, *spec.cascade, opts);
    ResultTable t;
    t.columns = {"jobs", "probability"};
    for (size_t n = 0; n < q.size(); ++n) t.add_row({static_cast<long long>(n), q[n]});
    t.footers = footer;
    t.write_csv(path("queue_length.csv"));
  }
  return kOk;
}

struct SweepArgs {
  std::string spec_path;
  std::string out_dir = ".";
  std::string param;
  std::string values;
  bool qbd_baseline = false;
  bool timing = false;
  double tol = -1.0;
};

ModelSpec apply_param(const ModelSpec& spec, const std::string& param, double value) {
  ModelSpec out = spec;
  if (param == "N1" || param == "N2") {
    if (!out.lcfs) throw SpecParseError("sweep: threshold parameters apply to lcfs specs");
    const size_t idx = (param == "N1") ? 0 : 1;
    if (out.lcfs->thresholds.size() <= idx)
      throw SpecParseError("sweep: the spec has no type for " + param);
    out.lcfs->thresholds[idx] = value;
    return out;
  }
  if (param == "C") {
    if (!out.cascade) throw SpecParseError("sweep: parameter C applies to cascade specs");
    out.cascade->levels = static_cast<int>(value);
    return out;
  }
  if (param == "rho") {
    if (out.lcfs) {
      const double current = mmap_load(out.lcfs->arrivals, out.lcfs->services);
      out.lcfs->arrivals = scale_arrivals(out.lcfs->arrivals, value / current);
      return out;
    }
    if (out.cascade) {
      const double current = cascade_load(*out.cascade);
      out.cascade->arrivals = scale_arrivals(out.cascade->arrivals, value / current);
      return out;
    }
    throw SpecParseError("sweep: rho applies to lcfs or cascade specs");
  }
  throw SpecParseError("sweep: unknown parameter " + param);
}

int cmd_sweep(const SweepArgs& args) {
  const ModelSpec spec = load_model_spec(args.spec_path);
  const SolverOptions opts = make_options(args.tol);
  const std::vector<double> values = parse_values(args.values);
  fs::create_directories(args.out_dir);

  const bool is_lcfs = spec.kind == "lcfs";
  const bool is_cascade = spec.kind == "cascade";
  if (!is_lcfs && !is_cascade)
    throw SpecParseError("sweep: only lcfs and cascade specs can be swept");
  (void)apply_param(spec, args.param, values.front());  // applicability check
  const int type_count = is_lcfs ? spec.lcfs->arrivals.type_count() : 0;

  ResultTable t;
  t.columns = {"param", "value", "status"};
  for (int l = 1; l <= type_count; ++l) t.columns.push_back("loss_" + std::to_string(l));
  t.columns.push_back("p_empty");
  t.columns.push_back("mean_top");
  if (args.qbd_baseline) t.columns.push_back("qbd_max_diff");
  if (args.timing) {
    t.columns.push_back("time_s");
    if (args.qbd_baseline) t.columns.push_back("qbd_time_s");
  }

  std::vector<std::vector<double>> loss_rows;
  for (double value : values) {
    std::vector<ResultTable::Cell> row{args.param, value, std::string("ok")};
    std::vector<double> losses(type_count, std::nan(""));
    double p_empty = std::nan(""), mean_top = std::nan(""), qbd_diff = std::nan("");
    double seconds = 0.0, qbd_seconds = 0.0;
    try {
      const ModelSpec point = apply_param(spec, args.param, value);
      const JumpModel jm = spec_jump_model(point);
      const auto start = std::chrono::steady_clock::now();
      const JumpSolution js = solve_jumps(jm, opts);
      if (!js.recurrent()) {
        row[2] = std::string("not_recurrent");
      } else {
        const auto gamma = jump_top_color_dist(js, opts);
        p_empty = gamma[0];
        mean_top = 0.0;
        for (size_t c = 0; c < gamma.size(); ++c) mean_top += static_cast<double>(c) * gamma[c];
        if (is_lcfs) losses = lcfs_loss_probability(js, *point.lcfs, opts);
      }
      seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      if (args.qbd_baseline && is_cascade && row[2] == ResultTable::Cell{std::string("ok")}) {
        const auto q_start = std::chrono::steady_clock::now();
        try {
          const auto qbd = solve_finite_qbd(*point.cascade, 8000, opts);
          const auto fluid = cascade_queue_length_dist(solve_jumps(jm, opts), *point.cascade, opts);
          qbd_diff = 0.0;
          for (size_t n = 0; n < qbd.size(); ++n)
            qbd_diff = std::max(qbd_diff, std::abs(qbd[n] - fluid[n]));
        } catch (const PhaseBlowup&) {
          row[2] = std::string("qbd_phase_blowup");
        }
        qbd_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - q_start).count();
      }
    } catch (const SolverError& e) {
      row[2] = std::string("error: ") + e.what();
    } catch (const SpecParseError& e) {
      row[2] = std::string("error: ") + e.what();
    }

    for (double l : losses) row.push_back(l);
    row.push_back(p_empty);
    row.push_back(mean_top);
    if (args.qbd_baseline) row.push_back(qbd_diff);
    if (args.timing) {
      row.push_back(seconds);
      if (args.qbd_baseline) row.push_back(qbd_seconds);
    }
    t.add_row(std::move(row));
    loss_rows.push_back(losses);
  }

  if (args.param == "N1") {
    // Loss should not increase with more room; warn if the output violates it.
    for (size_t i = 0; i + 1 < values.size(); ++i)
      for (size_t j = i + 1; j < values.size(); ++j) {
        if (values[i] >= values[j]) continue;
        for (int l = 0; l < type_count; ++l)
          if (loss_rows[j][l] > loss_rows[i][l] + 1e-12)
            std::cerr << "warning: loss_" << (l + 1) << " increased from N1=" << values[i]
                      << " to N1=" << values[j] << "\n";
      }
  }

  t.footers = provenance(opts);
  t.write_csv((fs::path(args.out_dir) / "sweep.csv").string());
  return kOk;
}

struct SimulateArgs {
  std::string spec_path;
  std::string out_dir = ".";
  std::string grid = "0:10:21";
  double horizon = 100000.0;
  double warmup = 0.0;
  int reps = 10;
  std::uint64_t seed = 1;
  bool compare = false;
  double tol = -1.0;
};

int cmd_simulate(const SimulateArgs& args) {
  const ModelSpec spec = load_model_spec(args.spec_path);
  const SolverOptions opts = make_options(args.tol);
  const JumpModel jm = spec_jump_model(spec);

  SimConfig cfg;
  cfg.horizon = args.horizon;
  cfg.warmup = args.warmup;
  cfg.replications = args.reps;
  cfg.seed = args.seed;
  cfg.sample_grid = parse_grid(args.grid);
  const SimResult res = simulate(jm, cfg);

  std::vector<double> gamma_ref, cdf_ref;
  double util_ref = 0.0;
  if (args.compare) {
    const JumpSolution js = solve_jumps(jm, opts);
    if (!js.recurrent()) {
      std::cerr << "cannot compare: model is not positive recurrent\n";
      return kNotRecurrent;
    }
    gamma_ref = jump_top_color_dist(js, opts);
    util_ref = 1.0 - js.p_minus.sum();
    for (double x : cfg.sample_grid) cdf_ref.push_back(jump_level_cdf(js, x, opts));
  }

  ResultTable t;
  t.columns = {"stat", "index", "mean", "se"};
  if (args.compare) {
    t.columns.push_back("analytic");
    t.columns.push_back("z");
  }
  auto add = [&](const std::string& stat, const std::string& index, const Estimate& e,
                 double ref) {
    std::vector<ResultTable::Cell> row{stat, index, e.mean, e.se};
    if (args.compare) {
      row.push_back(ref);
      row.push_back(e.se > 0.0 ? (e.mean - ref) / e.se : 0.0);
    }
    t.add_row(std::move(row));
  };

  add("utilization", "", res.utilization, util_ref);
  for (size_t c = 0; c < res.gamma.size(); ++c)
    add("gamma", std::to_string(c), res.gamma[c], args.compare ? gamma_ref[c] : 0.0);
  for (size_t g = 0; g < cfg.sample_grid.size(); ++g)
    add("level_cdf", format_full(cfg.sample_grid[g]), res.level_cdf[g],
        args.compare ? cdf_ref[g] : 0.0);

  t.footers = provenance(opts);
  t.footers.push_back("seed: " + std::to_string(args.seed));
  t.footers.push_back("horizon: " + format_full(args.horizon) +
                      " warmup: " + format_full(args.warmup) +
                      " replications: " + std::to_string(args.reps));
  fs::create_directories(args.out_dir);
  t.write_csv((fs::path(args.out_dir) / "sim.csv").string());
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"fluidq: stationary analysis of colored Markov-modulated fluid queues"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "solve a model spec and write result tables");
  solve->add_option("spec", solve_args.spec_path, "model spec JSON file")->required();
  solve->add_option("--out", solve_args.out_dir, "output directory");
  solve->add_option("--grid", solve_args.grid, "cdf grid a:b:n");
  solve->add_option("--tol", solve_args.tol, "generator validation tolerance");

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "solve across a parameter range");
  sweep->add_option("spec", sweep_args.spec_path, "model spec JSON file")->required();
  sweep->add_option("--out", sweep_args.out_dir, "output directory");
  sweep->add_option("--param", sweep_args.param, "one of N1, N2, C, rho")->required();
  sweep->add_option("--values", sweep_args.values, "comma-separated values")->required();
  sweep->add_flag("--qbd-baseline", sweep_args.qbd_baseline,
                  "also solve the finite QBD chain and report the largest difference");
  sweep->add_flag("--timing", sweep_args.timing, "record wall-clock time per solve");
  sweep->add_option("--tol", sweep_args.tol, "generator validation tolerance");

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimate of stationary statistics");
  sim->add_option("spec", sim_args.spec_path, "model spec JSON file")->required();
  sim->add_option("--out", sim_args.out_dir, "output directory");
  sim->add_option("--grid", sim_args.grid, "cdf grid a:b:n");
  sim->add_option("--horizon", sim_args.horizon, "simulated time per replication");
  sim->add_option("--warmup", sim_args.warmup, "discarded prefix time");
  sim->add_option("--reps", sim_args.reps, "independent replications");
  sim->add_option("--seed", sim_args.seed, "base RNG seed");
  sim->add_flag("--compare", sim_args.compare, "append analytic columns and z-scores");
  sim->add_option("--tol", sim_args.tol, "generator validation tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*solve) return cmd_solve(solve_args);
    if (*sweep) return cmd_sweep(sweep_args);
    if (*sim) return cmd_simulate(sim_args);
  } catch (const NotRecurrent& e) {
    std::cerr << e.what() << "\n";
    return kNotRecurrent;
  } catch (const SpecParseError& e) {
    std::cerr << e.what() << "\n";
    return kInvalid;
  } catch (const SolverError& e) {
    std::cerr << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInvalid;
  }
  return kInvalid;
}

}  // namespace fluidq::cli
