// Benchmark driver for the inexact Bregman proximal gradient solvers on the
// QAP relaxation.
//
// Exit codes: 0 success, 1 I/O or unexpected error, 2 configuration error,
// 3 instance error, 4 solver abort, 5 bound-check failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include "ibpg/errors.hpp"
#include "ibpg/harness.hpp"

namespace {

enum Exit { kOk = 0, kOther = 1, kConfig = 2, kInstance = 3, kSolver = 4, kBounds = 5 };

/// Flags that mirror config keys; only flags given on the command line
/// override the config file.
struct ConfigFlags {
  std::string config_path;
  std::map<std::string, std::string> values;
  bool warm_start = false;
  bool check_bounds = false;
  CLI::Option* warm_opt = nullptr;
  CLI::Option* bounds_opt = nullptr;
  std::map<std::string, CLI::Option*> opts;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config_path, "key = value configuration file");
    for (const char* key : {"instance", "solver", "p", "alpha", "gamma", "tau", "theta", "outer-budget",
                            "inner-budget", "wall-seconds", "check-every", "seed", "out-dir", "reference",
                            "reference-cache-dir", "st"}) {
      opts[key] = app->add_option(std::string("--") + key, values[key]);
    }
    warm_opt = app->add_flag("--warm-start", warm_start, "reuse the previous Sinkhorn scaling");
    bounds_opt = app->add_flag("--check-bounds", check_bounds, "verify the convergence inequalities");
  }

  ibpg::ExperimentConfig build() const {
    ibpg::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = ibpg::load_config(config_path);
    for (const auto& [key, opt] : opts) {
      if (opt->count() > 0) cfg.set(key, values.at(key));
    }
    if (warm_opt->count() > 0) cfg.warm_start = warm_start;
    if (bounds_opt->count() > 0) cfg.check_bounds = check_bounds;
    return cfg;
  }
};

void print_summary(const ibpg::ExperimentResult& r) {
  const auto& s = r.summary;
  std::printf("%s solver=%s p=%g outer=%zu inner=%llu stop=%s final_nfval=%s", s.instance.c_str(),
              ibpg::to_string(s.solver).c_str(), s.p, s.outer_iterations,
              static_cast<unsigned long long>(s.inner_iterations), s.stop_reason.c_str(),
              ibpg::format_double(s.final_nfval).c_str());
  if (s.bounds.checked) std::printf(" bounds=%s", s.bounds.all_pass() ? "pass" : "FAIL");
  std::printf("\n  trace: %s\n", r.trace_path.string().c_str());
}

int run_solve(const ConfigFlags& flags) {
  const ibpg::ExperimentConfig cfg = flags.build();
  cfg.validate();
  if (cfg.instances.empty()) throw ibpg::ConfigError("no instance given");
  bool ok = true;
  for (const auto& inst : cfg.instances) {
    const auto r = ibpg::run_experiment(cfg, inst);
    print_summary(r);
    if (r.summary.bounds.checked && !r.summary.bounds.all_pass()) ok = false;
  }
  return ok ? kOk : kBounds;
}

int run_sweep(const ConfigFlags& flags, const std::vector<double>& ps, const std::vector<std::string>& solvers,
              unsigned jobs) {
  ibpg::ExperimentConfig base = flags.build();
  base.validate();
  if (base.instances.empty()) throw ibpg::ConfigError("no instance given");
  struct Task {
    ibpg::ExperimentConfig cfg;
    std::string instance;
  };
  std::vector<Task> tasks;
  for (const auto& inst : base.instances) {
    for (const auto& solver : solvers) {
      for (double p : ps) {
        ibpg::ExperimentConfig cfg = base;
        cfg.set("solver", solver);
        cfg.p = p;
        cfg.validate();
        tasks.push_back({cfg, inst});
      }
    }
  }
  // The reference cache is filled once up front so workers only read it.
  if (base.reference == "compute") {
    for (const auto& inst : base.instances) {
      const auto qp = ibpg::build_relaxation(ibpg::load_qaplib(inst), base.st);
      ibpg::obtain_reference(qp, ibpg::reference_cache_path(base, inst));
    }
  }

  std::vector<std::optional<ibpg::ExperimentResult>> results(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::size_t next = 0;
  std::mutex mutex;
  auto worker = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lock(mutex);
        if (next >= tasks.size()) return;
        i = next++;
      }
      try {
        results[i] = ibpg::run_experiment(tasks[i].cfg, tasks[i].instance);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < std::max(1u, jobs); ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  bool ok = true;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    print_summary(*results[i]);
    if (results[i]->summary.bounds.checked && !results[i]->summary.bounds.all_pass()) ok = false;
  }
  return ok ? kOk : kBounds;
}

int run_compare(const std::string& a, const std::string& b, double budget, double stagnation) {
  const auto ta = ibpg::load_trace(a);
  const auto tb = ibpg::load_trace(b);
  const auto c = ibpg::compare_runs(ta, tb, budget > 0 ? std::optional<double>(budget) : std::nullopt, stagnation);
  std::printf("budget (cumulative inner iterations): %.0f\n", c.budget);
  std::printf("a: %s nfval=%s%s\n", ta.label.c_str(), ibpg::format_double(c.nfval_a).c_str(),
              c.stagnated_a ? " [stagnated]" : "");
  std::printf("b: %s nfval=%s%s\n", tb.label.c_str(), ibpg::format_double(c.nfval_b).c_str(),
              c.stagnated_b ? " [stagnated]" : "");
  std::printf("winner: %s\n", c.winner == "tie" ? "tie" : (c.winner == "a" ? ta.label : tb.label).c_str());
  return kOk;
}

int run_plotdata(const std::vector<std::string>& traces, const std::string& out_dir, const std::string& prefix,
                 bool no_svg) {
  std::vector<ibpg::LoadedTrace> loaded;
  for (const auto& t : traces) loaded.push_back(ibpg::load_trace(t));
  for (const auto& p : ibpg::emit_plot_data(loaded, out_dir, prefix, !no_svg)) std::printf("%s\n", p.string().c_str());
  return kOk;
}

int run_reference(const std::string& instance, const std::string& st, const std::string& cache_dir) {
  ibpg::ExperimentConfig cfg;
  cfg.st = ibpg::parse_st_construction(st);
  cfg.reference_cache_dir = cache_dir;
  const auto qp = ibpg::build_relaxation(ibpg::load_qaplib(instance), cfg.st);
  const auto path = ibpg::reference_cache_path(cfg, instance);
  const auto ref = ibpg::obtain_reference(qp, path);
  std::printf("F_star=%s fw_gap=%s residual=%s\ncache: %s\n", ibpg::format_double(ref.F_star).c_str(),
              ibpg::format_double(ref.fw_gap).c_str(), ibpg::format_double(ref.residual).c_str(),
              path.string().c_str());
  return kOk;
}

int run_geninstance(int rows, int cols, std::uint64_t seed, int max_flow, const std::string& out) {
  const auto inst = ibpg::grid_instance(rows, cols, seed, max_flow);
  const std::string text = "# grid " + std::to_string(rows) + "x" + std::to_string(cols) +
                           " Manhattan distances, random flows 0.." + std::to_string(max_flow) +
                           ", seed " + std::to_string(seed) + "\n" + ibpg::format_qaplib(inst);
  if (out.empty() || out == "-") {
    std::fputs(text.c_str(), stdout);
  } else {
    ibpg::write_file_atomic(out, text);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inexact Bregman proximal gradient benchmarks on the QAP relaxation"};
  app.require_subcommand(1);

  ConfigFlags solve_flags;
  auto* solve = app.add_subcommand("solve", "run one experiment per instance");
  solve_flags.attach(solve);

  ConfigFlags sweep_flags;
  std::vector<double> sweep_ps = {3.1, 2.1, 1.1, 0.1};
  std::vector<std::string> sweep_solvers = {"ibpg", "vibpg"};
  unsigned jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "run every (solver, p) combination");
  sweep_flags.attach(sweep);
  sweep->add_option("--p-values", sweep_ps, "tolerance exponents")->delimiter(',');
  sweep->add_option("--solvers", sweep_solvers, "solvers")->delimiter(',');
  sweep->add_option("-j,--jobs", jobs, "parallel workers");

  std::string cmp_a, cmp_b;
  double cmp_budget = 0.0, cmp_stag = 1e-6;
  auto* compare = app.add_subcommand("compare", "compare two traces at a matched inner budget");
  compare->add_option("trace_a", cmp_a)->required()->check(CLI::ExistingFile);
  compare->add_option("trace_b", cmp_b)->required()->check(CLI::ExistingFile);
  compare->add_option("--budget", cmp_budget, "cumulative inner iterations (default: smaller final count)");
  compare->add_option("--stagnation", cmp_stag, "nfval level for the stagnation flag");

  std::vector<std::string> plot_traces;
  std::string plot_dir = ".", plot_prefix = "plot";
  bool no_svg = false;
  auto* plot = app.add_subcommand("plotdata", "write plot data files and an SVG chart");
  plot->add_option("traces", plot_traces)->required()->check(CLI::ExistingFile);
  plot->add_option("--out-dir", plot_dir);
  plot->add_option("--prefix", plot_prefix);
  plot->add_flag("--no-svg", no_svg);

  std::string ref_instance, ref_st = "lap_dual", ref_cache;
  auto* reference = app.add_subcommand("reference", "compute and cache the optimal value of the relaxation");
  reference->add_option("--instance", ref_instance)->required();
  reference->add_option("--st", ref_st);
  reference->add_option("--cache-dir", ref_cache);

  int gen_rows = 3, gen_cols = 4, gen_flow = 10;
  std::uint64_t gen_seed = 12;
  std::string gen_out;
  auto* gen = app.add_subcommand("geninstance", "write a synthetic grid instance");
  gen->add_option("--rows", gen_rows);
  gen->add_option("--cols", gen_cols);
  gen->add_option("--seed", gen_seed);
  gen->add_option("--max-flow", gen_flow);
  gen->add_option("-o,--output", gen_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*solve) return run_solve(solve_flags);
    if (*sweep) return run_sweep(sweep_flags, sweep_ps, sweep_solvers, jobs);
    if (*compare) return run_compare(cmp_a, cmp_b, cmp_budget, cmp_stag);
    if (*plot) return run_plotdata(plot_traces, plot_dir, plot_prefix, no_svg);
    if (*reference) return run_reference(ref_instance, ref_st, ref_cache);
    if (*gen) return run_geninstance(gen_rows, gen_cols, gen_seed, gen_flow, gen_out);
  } catch (const ibpg::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfig;
  } catch (const ibpg::InstanceError& e) {
    std::cerr << "instance error: " << e.what() << "\n";
    return kInstance;
  } catch (const ibpg::Error& e) {
    std::cerr << "solver aborted: " << e.what() << "\n";
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
