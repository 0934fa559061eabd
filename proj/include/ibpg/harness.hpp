#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ibpg/qap.hpp"
#include "ibpg/solvers.hpp"
#include "ibpg/trace_io.hpp"

namespace ibpg {

/// Settings of one experiment (or of a sweep, through `instances`).
struct ExperimentConfig {
  std::vector<std::string> instances;
  SolverKind solver = SolverKind::ibpg;
  double p = 1.1;
  double alpha = 5.0;
  double gamma = 2.0;
  double tau = 1.0;
  std::string theta_mode = "closed_form";  ///< or "root_find"
  std::size_t outer_budget = std::numeric_limits<std::size_t>::max();
  std::uint64_t inner_budget = 500000;
  double wall_seconds = std::numeric_limits<double>::infinity();
  bool warm_start = false;
  std::uint64_t check_every = 10;
  std::uint64_t seed = 0;
  std::string out_dir;  ///< empty: $IBPG_OUT_DIR, else ./ibpg_out
  /// "compute" (solve and cache), "none", or the path of a reference file.
  std::string reference = "compute";
  /// Where computed references are cached; empty: beside the instance.
  std::string reference_cache_dir;
  StConstruction st = StConstruction::lap_dual;
  bool check_bounds = false;

  /// Applies one `key = value` setting; keys use underscores or dashes.
  /// Throws ConfigError for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  /// Throws ConfigError if the settings are inconsistent.
  void validate() const;
  /// The effective output directory.
  std::filesystem::path output_dir() const;
};

/// Parses the flat `key = value` format ('#' starts a comment line).
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Cached optimal value of the relaxation.
struct ReferenceRecord {
  std::string instance_hash;
  Point x_star;
  double F_star = 0.0;
  double fw_gap = 0.0;
  double residual = 0.0;
};

/// 64-bit FNV-1a hash, hex-encoded.
std::string content_hash(const std::string& bytes);

/// Hash of the instance contents and the S,T construction identifying a cache entry.
std::string reference_key(const QapInstance& instance, StConstruction st);

void save_reference(const ReferenceRecord& record, const std::filesystem::path& path);
ReferenceRecord load_reference(const std::filesystem::path& path);

/// Returns the cached reference when its key matches, otherwise solves and
/// writes the cache atomically.
ReferenceRecord obtain_reference(const QapProblem& problem, const std::filesystem::path& cache_path);

/// Default cache location for an instance file.
std::filesystem::path reference_cache_path(const ExperimentConfig& config,
                                           const std::filesystem::path& instance);

inline const std::vector<std::uint64_t> kSummaryCheckpoints = {1000, 10000, 100000, 500000};

struct BoundFlags {
  bool checked = false;
  bool descent = true;
  bool averaged = true;
  bool last = true;
  bool lyapunov = true;
  double worst = -std::numeric_limits<double>::infinity();

  bool all_pass() const { return descent && averaged && last && lyapunov; }
};

struct RunSummary {
  std::string instance;
  SolverKind solver = SolverKind::ibpg;
  double p = 0.0;
  double F_star = std::numeric_limits<double>::quiet_NaN();
  double final_nfval = std::numeric_limits<double>::quiet_NaN();
  /// (checkpoint, nfval of the last row at or below it); NaN if unreached.
  std::vector<std::pair<std::uint64_t, double>> checkpoints;
  std::size_t outer_iterations = 0;
  std::uint64_t inner_iterations = 0;
  std::string stop_reason;
  BoundFlags bounds;
  double seconds = 0.0;
};

struct ExperimentResult {
  RunTrace trace;
  RunSummary summary;
  std::filesystem::path trace_path;
  std::filesystem::path meta_path;
  std::filesystem::path summary_path;
};

/// File stem used for the outputs of a run.
std::string run_stem(const std::string& instance, SolverKind solver, double p);

/// Runs one experiment on `instance_path` and writes the trace CSV, the JSON
/// metadata sidecar and the summary JSON.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& instance_path);

/// Summary values derived from trace records only.
RunSummary summarize(const RunTrace& trace, double F_star);

/// A trace loaded back from disk together with its sidecar.
struct LoadedTrace {
  std::string label;
  std::string instance_hash;
  double F_star = std::numeric_limits<double>::quiet_NaN();
  std::vector<TraceRow> rows;
};

/// Reads `<stem>.csv` and its `<stem>.meta.json` sidecar.
LoadedTrace load_trace(const std::filesystem::path& csv_path);

/// nfval at cumulative inner count `budget`, linearly interpolated between
/// recorded rows (the first row for budgets before it, the last after it).
double nfval_at_inner(const std::vector<TraceRow>& rows, double budget);

struct Comparison {
  double budget = 0.0;
  double nfval_a = 0.0;
  double nfval_b = 0.0;
  /// "a", "b" or "tie".
  std::string winner;
  bool stagnated_a = false;
  bool stagnated_b = false;
};

/// Compares two traces at a matched cumulative inner-iteration budget
/// (default: the smaller of the two final counts). Runs whose final nfval is
/// not below `stagnation_level` are flagged. Throws ConfigError when the
/// traces belong to different instances.
Comparison compare_runs(const LoadedTrace& a, const LoadedTrace& b, std::optional<double> budget = std::nullopt,
                        double stagnation_level = 1e-6);

/// Writes `<prefix>_outer.csv` (out# ≤ 2·10⁴), `<prefix>_sink.csv` and, if
/// requested, `<prefix>.svg`. Returns the written paths.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<LoadedTrace>& traces,
                                                  const std::filesystem::path& out_dir,
                                                  const std::string& prefix, bool svg = true);

}  // namespace ibpg
