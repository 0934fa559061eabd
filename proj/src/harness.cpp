#include "ibpg/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ibpg/errors.hpp"
#include "ibpg/transport.hpp"

namespace ibpg {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

double to_double(const std::string& key, const std::string& value) {
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (value.empty() || end != value.c_str() + value.size()) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + value + "'");
  }
  return v;
}

std::uint64_t to_count(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (!(v >= 0.0) || v != std::floor(v) || v > 9.0e18) {
    throw ConfigError("config: '" + key + "' expects a nonnegative integer, got '" + value + "'");
  }
  return static_cast<std::uint64_t>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("config: '" + key + "' expects a boolean, got '" + value + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InstanceError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

void ExperimentConfig::set(const std::string& raw_key, const std::string& raw_value) {
  const std::string key = normalize_key(trim(raw_key));
  const std::string value = trim(raw_value);
  if (key == "instance") {
    instances.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!trim(item).empty()) instances.push_back(trim(item));
    }
  } else if (key == "solver") {
    if (value == "ibpg") solver = SolverKind::ibpg;
    else if (value == "vibpg") solver = SolverKind::vibpg;
    else throw ConfigError("config: solver must be ibpg or vibpg");
  } else if (key == "p") {
    p = to_double(key, value);
  } else if (key == "alpha") {
    alpha = to_double(key, value);
  } else if (key == "gamma") {
    gamma = to_double(key, value);
  } else if (key == "tau") {
    tau = to_double(key, value);
  } else if (key == "theta" || key == "theta_mode") {
    if (value != "closed_form" && value != "root_find") throw ConfigError("config: theta must be closed_form or root_find");
    theta_mode = value;
  } else if (key == "outer_budget") {
    outer_budget = static_cast<std::size_t>(to_count(key, value));
  } else if (key == "inner_budget") {
    inner_budget = to_count(key, value);
  } else if (key == "wall_seconds") {
    wall_seconds = to_double(key, value);
  } else if (key == "warm_start") {
    warm_start = to_bool(key, value);
  } else if (key == "check_every") {
    check_every = to_count(key, value);
  } else if (key == "seed") {
    seed = to_count(key, value);
  } else if (key == "out_dir") {
    out_dir = value;
  } else if (key == "reference") {
    reference = value;
  } else if (key == "reference_cache_dir") {
    reference_cache_dir = value;
  } else if (key == "st") {
    st = parse_st_construction(value);
  } else if (key == "check_bounds") {
    check_bounds = to_bool(key, value);
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  if (!(p > 0.0)) throw ConfigError("config: p must be positive");
  if (theta_mode != "closed_form" && theta_mode != "root_find") throw ConfigError("config: unknown theta mode '" + theta_mode + "'");
  if (!(tau > 0.0)) throw ConfigError("config: tau must be positive");
  if (!(gamma >= 1.0)) throw ConfigError("config: gamma must be at least 1");
  if (theta_mode == "closed_form" && !(alpha >= gamma + 1.0)) throw ConfigError("config: alpha must be at least gamma + 1");
  if (outer_budget == 0 || inner_budget == 0 || !(wall_seconds > 0.0)) throw ConfigError("config: budgets must be positive");
  if (check_every == 0) throw ConfigError("config: check_every must be positive");
}

std::filesystem::path ExperimentConfig::output_dir() const {
  if (!out_dir.empty()) return out_dir;
  if (const char* env = std::getenv("IBPG_OUT_DIR"); env && *env) return env;
  return "ibpg_out";
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::stringstream ss(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    base.set(t.substr(0, eq), t.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::move(base));
}

// ---------------------------------------------------------------------------
// Reference cache
// ---------------------------------------------------------------------------

std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string reference_key(const QapInstance& instance, StConstruction st) {
  return content_hash(format_qaplib(instance) + "|st=" + to_string(st));
}

void save_reference(const ReferenceRecord& record, const std::filesystem::path& path) {
  json j;
  j["instance_hash"] = record.instance_hash;
  j["n"] = record.x_star.rows();
  j["F_star"] = record.F_star;
  j["fw_gap"] = record.fw_gap;
  j["residual"] = record.residual;
  std::vector<double> entries;
  for (Eigen::Index i = 0; i < record.x_star.rows(); ++i)
    for (Eigen::Index c = 0; c < record.x_star.cols(); ++c) entries.push_back(record.x_star(i, c));
  j["x_star"] = entries;
  write_file_atomic(path, j.dump(1) + "\n");
}

ReferenceRecord load_reference(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
    ReferenceRecord r;
    r.instance_hash = j.at("instance_hash").get<std::string>();
    const auto n = j.at("n").get<Eigen::Index>();
    const auto entries = j.at("x_star").get<std::vector<double>>();
    if (n < 1 || entries.size() != static_cast<std::size_t>(n * n)) throw InstanceError("reference: bad x_star size");
    r.x_star.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index c = 0; c < n; ++c) r.x_star(i, c) = entries[static_cast<std::size_t>(i * n + c)];
    r.F_star = j.at("F_star").get<double>();
    r.fw_gap = j.at("fw_gap").get<double>();
    r.residual = j.at("residual").get<double>();
    return r;
  } catch (const json::exception& e) {
    throw InstanceError("reference " + path.string() + ": " + e.what());
  }
}

ReferenceRecord obtain_reference(const QapProblem& problem, const std::filesystem::path& cache_path) {
  const std::string key = reference_key(problem.instance, problem.st);
  if (std::filesystem::exists(cache_path)) {
    try {
      ReferenceRecord cached = load_reference(cache_path);
      if (cached.instance_hash == key && cached.x_star.rows() == problem.n()) return cached;
    } catch (const InstanceError&) {
      // Unreadable cache: recompute and overwrite below.
    }
  }
  const ReferenceSolution sol = reference_solve(problem);
  ReferenceRecord rec{key, sol.x_star, sol.F_star, sol.fw_gap, sol.residual};
  save_reference(rec, cache_path);
  return rec;
}

std::filesystem::path reference_cache_path(const ExperimentConfig& config, const std::filesystem::path& instance) {
  const std::string file = instance.filename().string() + "." + to_string(config.st) + ".ref.json";
  if (!config.reference_cache_dir.empty()) return std::filesystem::path(config.reference_cache_dir) / file;
  return instance.parent_path() / file;
}

// ---------------------------------------------------------------------------
// Running experiments
// ---------------------------------------------------------------------------

std::string run_stem(const std::string& instance, SolverKind solver, double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", p);
  return instance + "_" + to_string(solver) + "_p" + buf;
}

RunSummary summarize(const RunTrace& trace, double F_star) {
  RunSummary s;
  s.solver = trace.meta.solver;
  s.F_star = F_star;
  s.outer_iterations = trace.records.size();
  s.inner_iterations = trace.cum_inner_iters;
  s.stop_reason = to_string(trace.stop);
  if (!trace.records.empty()) s.final_nfval = trace.records.back().nfval;
  for (std::uint64_t c : kSummaryCheckpoints) {
    double value = std::numeric_limits<double>::quiet_NaN();
    if (trace.cum_inner_iters >= c) {
      for (const auto& r : trace.records) {
        if (r.cum_inner_iters > c) break;
        value = r.nfval;
      }
    }
    s.checkpoints.emplace_back(c, value);
  }
  return s;
}

namespace {

BoundFlags run_bound_checks(const RunTrace& trace, const ProblemDefinition& def, const ThetaSchedule& theta,
                            const ReferenceRecord& ref) {
  constexpr double tol = 1e-8;
  BoundFlags flags;
  flags.checked = true;
  auto note = [&](const ResidualSeries& series, bool& flag) {
    if (series.residual.empty()) return;
    flag = series.holds(tol);
    flags.worst = std::max(flags.worst, series.max_scaled);
  };
  if (trace.records.empty()) return flags;
  if (trace.meta.solver == SolverKind::ibpg) {
    bool d1 = true;
    bool d2 = true;
    note(check_descent_inequality(trace, def, ref.x_star), d1);
    note(check_descent_inequality(trace, def, trace.iterates.feasible[1]), d2);
    flags.descent = d1 && d2;
    const BoundReport rep = check_ibpg_bounds(trace, def, ref.x_star, ref.F_star);
    note(rep.averaged, flags.averaged);
    note(rep.last, flags.last);
  } else {
    const BoundReport rep = check_vibpg_bound(trace, def, theta, ref.x_star, ref.F_star, ref.fw_gap);
    note(rep.last, flags.last);
    note(rep.lyapunov, flags.lyapunov);
  }
  return flags;
}

json metadata_json(const ExperimentConfig& config, const RunTrace& trace, const QapProblem& qp,
                   const std::string& instance_name, const std::string& instance_hash,
                   const std::optional<ReferenceRecord>& ref) {
  json j;
  j["instance"] = instance_name;
  j["instance_hash"] = instance_hash;
  j["n"] = qp.n();
  j["solver"] = to_string(trace.meta.solver);
  j["kernel"] = trace.meta.kernel;
  j["st"] = to_string(qp.st);
  j["L"] = trace.meta.L;
  j["norm_H"] = qp.norm_H;
  j["norm_H_power"] = qp.norm_H_power;
  j["psd_margin"] = qp.psd_margin;
  j["tau"] = trace.meta.tau;
  j["gamma"] = trace.meta.gamma;
  j["p"] = config.p;
  j["theta_schedule"] = trace.meta.theta_schedule;
  j["tolerance_schedule"] = trace.meta.tolerance_schedule;
  j["summability"] = summability_class(ToleranceSchedule::power_rule(config.p), config.gamma).label();
  j["seed"] = trace.meta.seed;
  j["check_every"] = config.check_every;
  j["warm_start"] = config.warm_start;
  j["budget"] = {{"outer", number_or_null(static_cast<double>(config.outer_budget))},
                 {"inner", config.inner_budget},
                 {"seconds", number_or_null(config.wall_seconds)}};
  j["F_star"] = ref ? json(ref->F_star) : json(nullptr);
  j["fw_gap"] = ref ? json(ref->fw_gap) : json(nullptr);
  j["stop_reason"] = to_string(trace.stop);
  j["columns"] = kTraceHeader;
  return j;
}

json summary_json(const RunSummary& s) {
  json j;
  j["instance"] = s.instance;
  j["solver"] = to_string(s.solver);
  j["p"] = s.p;
  j["F_star"] = number_or_null(s.F_star);
  j["final_nfval"] = number_or_null(s.final_nfval);
  json cps = json::array();
  for (const auto& [c, v] : s.checkpoints) cps.push_back({{"inner", c}, {"nfval", number_or_null(v)}});
  j["checkpoints"] = cps;
  j["outer_iterations"] = s.outer_iterations;
  j["inner_iterations"] = s.inner_iterations;
  j["stop_reason"] = s.stop_reason;
  j["bounds"] = {{"checked", s.bounds.checked},         {"descent", s.bounds.descent},
                 {"averaged", s.bounds.averaged},       {"last", s.bounds.last},
                 {"lyapunov", s.bounds.lyapunov},       {"pass", s.bounds.all_pass()},
                 {"worst_scaled", number_or_null(s.bounds.worst)}};
  j["seconds"] = s.seconds;
  return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& instance_path) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const QapInstance instance = load_qaplib(instance_path);
  const QapProblem qp = build_relaxation(instance, config.st);
  const ProblemDefinition def = make_problem_definition(qp);
  const std::string hash = reference_key(instance, config.st);

  std::optional<ReferenceRecord> ref;
  if (config.reference == "compute") {
    ref = obtain_reference(qp, reference_cache_path(config, instance_path));
  } else if (config.reference != "none") {
    ref = load_reference(config.reference);
    if (ref->instance_hash != hash) throw ConfigError("reference file belongs to a different instance");
  }
  if (config.check_bounds && !ref) throw ConfigError("bound checks need a reference solution");

  const ThetaSchedule theta = config.theta_mode == "root_find" ? ThetaSchedule::root_find(config.gamma)
                                                               : ThetaSchedule::closed_form(config.alpha, config.gamma);
  const ToleranceSchedule tolerances = ToleranceSchedule::power_rule(config.p);

  ProblemDefinition run_def = def;
  run_def.smoothness.tau = config.tau;
  run_def.smoothness.gamma = config.gamma;

  RunOptions opts;
  opts.budget.max_outer = config.outer_budget;
  opts.budget.max_inner = config.inner_budget;
  opts.budget.max_seconds = config.wall_seconds;
  opts.retain_iterates = config.check_bounds;
  opts.seed = config.seed;
  if (ref) {
    const double F_star = ref->F_star;
    opts.metric = [&qp, F_star](const Point& X) { return nfval(qp, X, F_star); };
    opts.reference = BoundReference{ref->x_star, F_star, ref->fw_gap};
  }

  SinkhornOracle oracle(SinkhornOptions{config.check_every, config.warm_start, 1e-300});
  const Eigen::Index n = qp.n();
  const Point start_point = Point::Ones(n, n);

  ExperimentResult result;
  if (config.solver == SolverKind::ibpg) {
    result.trace = ibpg_run(run_def, oracle, tolerances, start_point, opts);
  } else {
    result.trace = vibpg_run(run_def, oracle, theta, tolerances, round_to_polytope(start_point), start_point, opts);
  }

  const std::string name = instance.name.empty() ? instance_path.stem().string() : instance.name;
  result.summary = summarize(result.trace, ref ? ref->F_star : std::numeric_limits<double>::quiet_NaN());
  result.summary.instance = name;
  result.summary.p = config.p;
  if (config.check_bounds) result.summary.bounds = run_bound_checks(result.trace, run_def, theta, *ref);
  result.summary.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const std::filesystem::path dir = config.output_dir();
  const std::string stem = run_stem(name, config.solver, config.p);
  result.trace_path = dir / (stem + ".csv");
  result.meta_path = dir / (stem + ".meta.json");
  result.summary_path = dir / (stem + ".summary.json");
  write_trace_csv(result.trace, result.trace_path);
  write_file_atomic(result.meta_path, metadata_json(config, result.trace, qp, name, hash, ref).dump(1) + "\n");
  write_file_atomic(result.summary_path, summary_json(result.summary).dump(1) + "\n");
  return result;
}

// ---------------------------------------------------------------------------
// Comparison and plot data
// ---------------------------------------------------------------------------

LoadedTrace load_trace(const std::filesystem::path& csv_path) {
  LoadedTrace t;
  t.rows = read_trace_csv(csv_path);
  t.label = csv_path.stem().string();
  std::filesystem::path meta = csv_path;
  meta.replace_extension(".meta.json");
  if (std::filesystem::exists(meta)) {
    try {
      const json j = json::parse(read_file(meta));
      t.instance_hash = j.value("instance_hash", std::string{});
      if (j.contains("F_star") && j["F_star"].is_number()) t.F_star = j["F_star"].get<double>();
    } catch (const json::exception& e) {
      throw InstanceError("metadata " + meta.string() + ": " + e.what());
    }
  }
  return t;
}

double nfval_at_inner(const std::vector<TraceRow>& rows, double budget) {
  if (rows.empty()) throw ConfigError("nfval_at_inner: empty trace");
  if (budget <= static_cast<double>(rows.front().cum_inner_iters)) return rows.front().nfval;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double x1 = static_cast<double>(rows[i].cum_inner_iters);
    if (budget <= x1) {
      const double x0 = static_cast<double>(rows[i - 1].cum_inner_iters);
      const double w = x1 > x0 ? (budget - x0) / (x1 - x0) : 1.0;
      return (1.0 - w) * rows[i - 1].nfval + w * rows[i].nfval;
    }
  }
  return rows.back().nfval;
}

Comparison compare_runs(const LoadedTrace& a, const LoadedTrace& b, std::optional<double> budget,
                        double stagnation_level) {
  if (a.rows.empty() || b.rows.empty()) throw ConfigError("compare: empty trace");
  if (a.instance_hash != b.instance_hash) throw ConfigError("compare: traces belong to different instances");
  if (std::isfinite(a.F_star) && std::isfinite(b.F_star) && a.F_star != b.F_star) {
    throw ConfigError("compare: traces use different reference values");
  }
  Comparison c;
  c.budget = budget ? *budget
                    : static_cast<double>(std::min(a.rows.back().cum_inner_iters, b.rows.back().cum_inner_iters));
  c.nfval_a = nfval_at_inner(a.rows, c.budget);
  c.nfval_b = nfval_at_inner(b.rows, c.budget);
  if (c.nfval_a < c.nfval_b) c.winner = "a";
  else if (c.nfval_b < c.nfval_a) c.winner = "b";
  else c.winner = "tie";
  c.stagnated_a = !(a.rows.back().nfval < stagnation_level);
  c.stagnated_b = !(b.rows.back().nfval < stagnation_level);
  return c;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string svg_chart(const std::vector<LoadedTrace>& traces) {
  constexpr double W = 640, H = 420, left = 70, right = 180, top = 20, bottom = 50;
  double xmax = 1.0, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& t : traces) {
    for (const auto& r : t.rows) {
      xmax = std::max(xmax, static_cast<double>(r.cum_inner_iters));
      if (r.nfval > 0.0 && std::isfinite(r.nfval)) {
        ymin = std::min(ymin, std::log10(r.nfval));
        ymax = std::max(ymax, std::log10(r.nfval));
      }
    }
  }
  if (!std::isfinite(ymin)) ymin = -1.0, ymax = 0.0;
  ymin = std::floor(ymin);
  ymax = std::ceil(ymax);
  if (ymax <= ymin) ymax = ymin + 1.0;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + pw * x / xmax; };
  auto py = [&](double ly) { return top + ph * (ymax - ly) / (ymax - ymin); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double ly = ymin; ly <= ymax; ly += 1.0) {
    out << "<text x=\"" << left - 8 << "\" y=\"" << py(ly) + 4 << "\" font-size=\"11\" text-anchor=\"end\">1e"
        << static_cast<int>(ly) << "</text>\n";
  }
  out << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" font-size=\"12\" text-anchor=\"middle\">sink# (max "
      << static_cast<long long>(xmax) << ")</text>\n";
  out << "<text x=\"16\" y=\"" << top + ph / 2 << "\" font-size=\"12\" transform=\"rotate(-90 16 " << top + ph / 2
      << ")\" text-anchor=\"middle\">nfval</text>\n";
  for (std::size_t s = 0; s < traces.size(); ++s) {
    const char* color = colors[s % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& r : traces[s].rows) {
      if (!(r.nfval > 0.0) || !std::isfinite(r.nfval)) continue;
      out << px(static_cast<double>(r.cum_inner_iters)) << ',' << py(std::log10(r.nfval)) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << W - right + 10 << "\" y=\"" << top + 16 * (s + 1) << "\" font-size=\"11\" fill=\"" << color
        << "\">" << xml_escape(traces[s].label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace

std::vector<std::filesystem::path> emit_plot_data(const std::vector<LoadedTrace>& traces,
                                                  const std::filesystem::path& out_dir, const std::string& prefix,
                                                  bool svg) {
  if (traces.empty()) throw ConfigError("plotdata: no traces");
  constexpr std::size_t kOuterCap = 20000;
  std::ostringstream outer, sink;
  outer << "series,out,nfval\n";
  sink << "series,sink,nfval\n";
  for (const auto& t : traces) {
    for (const auto& r : t.rows) {
      const std::size_t out_index = r.k + 1;
      if (out_index <= kOuterCap) outer << t.label << ',' << out_index << ',' << format_double(r.nfval) << '\n';
      sink << t.label << ',' << r.cum_inner_iters << ',' << format_double(r.nfval) << '\n';
    }
  }
  std::vector<std::filesystem::path> written = {out_dir / (prefix + "_outer.csv"), out_dir / (prefix + "_sink.csv")};
  write_file_atomic(written[0], outer.str());
  write_file_atomic(written[1], sink.str());
  if (svg) {
    written.push_back(out_dir / (prefix + ".svg"));
    write_file_atomic(written[2], svg_chart(traces));
  }
  return written;
}

}  // namespace ibpg
