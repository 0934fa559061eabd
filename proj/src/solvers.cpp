#include "ibpg/solvers.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <string>

#include "ibpg/errors.hpp"

namespace ibpg {

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::outer_budget:
      return "outer_budget";
    case StopReason::inner_budget:
      return "inner_budget";
    case StopReason::wall_time:
      return "wall_time";
  }
  return "unknown";
}

std::string to_string(SolverKind kind) { return kind == SolverKind::ibpg ? "ibpg" : "vibpg"; }

namespace {

using Clock = std::chrono::steady_clock;

void validate_problem(const ProblemDefinition& problem) {
  if (!problem.f_value || !problem.f_gradient || !problem.P_value || !problem.kernel) {
    throw ConfigError("problem definition is incomplete");
  }
  problem.smoothness.validate();
  if (!(problem.smoothness.L > 0.0)) throw ConfigError("problem: L must be positive to run a solver");
}

void require_interior(const ProblemDefinition& problem, const Point& x, double tol, const char* what) {
  if (!problem.kernel->in_interior(x)) {
    throw DomainError(DomainError::Kind::not_interior, std::string(what) + " not in int dom phi");
  }
  if (!problem.smoothness.restriction.contains(x, tol)) {
    throw DomainError(DomainError::Kind::not_in_domain, std::string(what) + " outside restriction set");
  }
}

void require_feasible(const ProblemDefinition& problem, const Point& x, const char* what) {
  if (!problem.kernel->in_domain(x) || !std::isfinite(problem.P_value(x))) {
    throw DomainError(DomainError::Kind::not_in_domain, std::string(what) + " not in dom P ∩ dom phi");
  }
}

/// Admission check performed on every certificate before it is accepted.
/// Returns the re-measured Bregman deviation.
double admit(const ProblemDefinition& problem, const InexactCertificate& cert,
             const SubproblemQuery& query, double feas_tol) {
  const auto& kernel = *problem.kernel;
  try {
    require_interior(problem, cert.interior_point, feas_tol, "certificate interior point");
    require_feasible(problem, cert.feasible_point, "certificate feasible point");
  } catch (const DomainError& e) {
    throw CertificateError(std::string("k=") + std::to_string(query.outer_index) + ": " + e.what());
  }
  const double mu = bregman_distance(kernel, cert.feasible_point, cert.interior_point);
  if (mu > query.mu_tol) {
    throw CertificateError("k=" + std::to_string(query.outer_index) + ": D(feasible, interior) = " +
                           std::to_string(mu) + " exceeds mu_k = " + std::to_string(query.mu_tol));
  }
  if (cert.delta_norm > query.eta_tol) {
    throw CertificateError("k=" + std::to_string(query.outer_index) + ": |Delta| exceeds eta_k");
  }
  if (cert.nu_claimed > query.nu_tol || cert.nu_claimed < 0.0) {
    throw CertificateError("k=" + std::to_string(query.outer_index) + ": nu outside [0, nu_k]");
  }
  return mu;
}

struct Stopwatch {
  Clock::time_point start = Clock::now();
  double seconds() const { return std::chrono::duration<double>(Clock::now() - start).count(); }
};

RunMetadata make_meta(SolverKind kind, const ProblemDefinition& problem,
                      const ToleranceSchedule& tolerances, const RunOptions& options) {
  RunMetadata meta;
  meta.solver = kind;
  meta.kernel = std::string(problem.kernel->name());
  meta.L = problem.smoothness.L;
  meta.tau = problem.smoothness.tau;
  meta.gamma = problem.smoothness.gamma;
  meta.tolerance_schedule = tolerances.describe();
  meta.seed = options.seed;
  meta.budget = options.budget;
  return meta;
}

}  // namespace

RunTrace ibpg_run(const ProblemDefinition& problem, SubproblemOracle& oracle,
                  const ToleranceSchedule& tolerances, const Point& x0, const RunOptions& options,
                  std::optional<Point> x0_feasible) {
  validate_problem(problem);
  tolerances.validate();
  require_finite(x0, "x0");
  require_interior(problem, x0, options.feasibility_tol, "x0");

  const auto& kernel = *problem.kernel;
  const double L = problem.smoothness.L;

  Point x = x0;
  Point xt = x0_feasible ? *x0_feasible : problem.to_feasible(x0);
  require_feasible(problem, xt, "x~0");

  RunTrace trace;
  trace.meta = make_meta(SolverKind::ibpg, problem, tolerances, options);
  trace.initial_gap = bregman_distance(kernel, xt, x);
  if (options.retain_iterates) {
    trace.iterates.interior.push_back(x);
    trace.iterates.feasible.push_back(xt);
  }

  ErrorAccumulator acc;
  double ref_dist0 = 0.0;
  double ref_norm = 0.0;
  Point feasible_sum;
  if (options.reference) {
    ref_dist0 = bregman_distance(kernel, options.reference->x_ref, x0);
    ref_norm = options.reference->x_ref.norm();
    feasible_sum = Point::Zero(x0.rows(), x0.cols());
  }

  double mu_prev = trace.initial_gap;
  double norm_cur = xt.norm();
  const Stopwatch clock;

  for (std::size_t k = 0;; ++k) {
    if (k >= options.budget.max_outer) {
      trace.stop = StopReason::outer_budget;
      break;
    }
    if (clock.seconds() >= options.budget.max_seconds) {
      trace.stop = StopReason::wall_time;
      break;
    }
    if (trace.cum_inner_iters >= options.budget.max_inner) {
      trace.stop = StopReason::inner_budget;
      break;
    }

    const bool normalized = tolerances.normalization == Normalization::iterate_normalized;
    // In normalized mode η_k depends on ‖x̃^{k+1}‖; the oracle receives the
    // unnormalized cap and the exact check happens after the solve.
    const ToleranceTriple tol = tolerances.at(k, normalized ? std::optional<double>(0.0) : std::nullopt);

    SubproblemQuery query;
    query.gradient = problem.f_gradient(x);
    query.anchor = x;
    query.lambda = L;
    query.mu_tol = tol.mu;
    query.eta_tol = tol.eta;
    query.nu_tol = tol.nu;
    query.outer_index = k;
    query.inner_budget = options.budget.max_inner - trace.cum_inner_iters;

    InexactCertificate cert;
    try {
      cert = oracle.solve(query);
    } catch (const OracleBudgetExceeded& e) {
      trace.cum_inner_iters += e.used();
      trace.stop = StopReason::inner_budget;
      break;
    }
    const double mu = admit(problem, cert, query, options.feasibility_tol);
    const double norm_next = cert.feasible_point.norm();
    double eta_k = tol.eta;
    if (normalized) {
      eta_k = tolerances.at(k, norm_next).eta;
      if (cert.delta_norm > eta_k) throw CertificateError("k=" + std::to_string(k) + ": normalized eta violated");
    }

    const double norm_diff = (cert.feasible_point - xt).norm();
    x = std::move(cert.interior_point);
    xt = std::move(cert.feasible_point);
    trace.cum_inner_iters += cert.inner_iterations;

    acc.add_ibpg(cert.delta_norm, mu, mu_prev, cert.nu_claimed, norm_next, norm_cur, norm_diff, L);

    TraceRecord rec;
    rec.k = k;
    rec.fval = problem.F(xt);
    if (options.metric) rec.nfval = options.metric(x);
    rec.eta_tol = eta_k;
    rec.mu_tol = tol.mu;
    rec.nu_tol = tol.nu;
    rec.mu_measured = mu;
    rec.delta_norm = cert.delta_norm;
    rec.nu_claimed = cert.nu_claimed;
    rec.inner_iters = cert.inner_iterations;
    rec.cum_inner_iters = trace.cum_inner_iters;
    rec.theta = 1.0;
    rec.lambda = L;
    rec.xi = acc.last_xi;
    if (options.reference) {
      const double kp1 = static_cast<double>(k + 1);
      const double base = L * ref_dist0 + acc.sum_eta_norm_next + acc.sum_eta * ref_norm +
                          L * acc.sum_mu + acc.sum_nu;
      rec.bound_rhs_avg = base / kp1;
      rec.bound_rhs_last = (base + acc.sum_i_xi) / kp1;
      feasible_sum += xt;
      rec.fval_avg = problem.F(feasible_sum / kp1);
    }
    trace.records.push_back(rec);

    if (options.retain_iterates) {
      trace.iterates.interior.push_back(x);
      trace.iterates.feasible.push_back(xt);
    }
    mu_prev = mu;
    norm_cur = norm_next;
  }
  trace.final_point = xt;
  return trace;
}

RunTrace vibpg_run(const ProblemDefinition& problem, SubproblemOracle& oracle,
                   const ThetaSchedule& theta, const ToleranceSchedule& tolerances, const Point& x0,
                   const Point& z0, const RunOptions& options) {
  validate_problem(problem);
  tolerances.validate();
  require_finite(x0, "x0");
  require_finite(z0, "z0");
  require_feasible(problem, x0, "x0");
  require_interior(problem, z0, options.feasibility_tol, "z0");

  const auto& kernel = *problem.kernel;
  const double L = problem.smoothness.L;
  const double tau = problem.smoothness.tau;
  const double gamma = problem.smoothness.gamma;
  if (std::abs(theta.gamma() - gamma) > 1e-15) {
    throw ConfigError("theta schedule gamma differs from the problem's restricted exponent");
  }

  Point x = x0;
  Point z = z0;

  RunTrace trace;
  trace.meta = make_meta(SolverKind::vibpg, problem, tolerances, options);
  trace.meta.theta_schedule = theta.describe();
  if (options.retain_iterates) {
    trace.iterates.main.push_back(x);
    trace.iterates.interior.push_back(z);
    trace.iterates.feasible.push_back(x);
  }

  ErrorAccumulator acc;
  double ref_dist0 = 0.0;
  double ref_norm = 0.0;
  if (options.reference) {
    ref_dist0 = bregman_distance(kernel, options.reference->x_ref, z0);
    ref_norm = options.reference->x_ref.norm();
  }
  const bool closed = theta.mode() == ThetaMode::closed_form;
  const Stopwatch clock;

  for (std::size_t k = 0;; ++k) {
    if (k >= options.budget.max_outer) {
      trace.stop = StopReason::outer_budget;
      break;
    }
    if (clock.seconds() >= options.budget.max_seconds) {
      trace.stop = StopReason::wall_time;
      break;
    }
    if (trace.cum_inner_iters >= options.budget.max_inner) {
      trace.stop = StopReason::inner_budget;
      break;
    }

    const double th = theta.theta(static_cast<long long>(k));
    const double vartheta = theta.vartheta(k);
    const bool normalized = tolerances.normalization == Normalization::iterate_normalized;
    const ToleranceTriple tol = tolerances.at(k, normalized ? std::optional<double>(0.0) : std::nullopt);
    const double lambda = tau * L * std::pow(th, gamma - 1.0);

    const Point y = (1.0 - th) * x + th * z;

    SubproblemQuery query;
    query.gradient = problem.f_gradient(y);
    query.anchor = z;
    query.lambda = lambda;
    query.mu_tol = tol.mu;
    query.eta_tol = tol.eta;
    query.nu_tol = tol.nu;
    query.outer_index = k;
    query.inner_budget = options.budget.max_inner - trace.cum_inner_iters;

    InexactCertificate cert;
    try {
      cert = oracle.solve(query);
    } catch (const OracleBudgetExceeded& e) {
      trace.cum_inner_iters += e.used();
      trace.stop = StopReason::inner_budget;
      break;
    }
    const double mu = admit(problem, cert, query, options.feasibility_tol);
    const double norm_next = cert.feasible_point.norm();
    double eta_k = tol.eta;
    if (normalized) {
      eta_k = tolerances.at(k, norm_next).eta;
      if (cert.delta_norm > eta_k) throw CertificateError("k=" + std::to_string(k) + ": normalized eta violated");
    }

    z = std::move(cert.interior_point);
    x = (1.0 - th) * x + th * cert.feasible_point;
    trace.cum_inner_iters += cert.inner_iterations;
    acc.add_vibpg(th, gamma, vartheta, cert.delta_norm, mu, cert.nu_claimed, norm_next);

    TraceRecord rec;
    rec.k = k;
    rec.fval = problem.F(x);
    if (options.metric) rec.nfval = options.metric(x);
    rec.eta_tol = eta_k;
    rec.mu_tol = tol.mu;
    rec.nu_tol = tol.nu;
    rec.mu_measured = mu;
    rec.delta_norm = cert.delta_norm;
    rec.nu_claimed = cert.nu_claimed;
    rec.inner_iters = cert.inner_iterations;
    rec.cum_inner_iters = trace.cum_inner_iters;
    rec.theta = th;
    rec.lambda = lambda;
    if (options.reference) {
      const double kd = static_cast<double>(k);
      const double pref = closed ? std::pow((theta.alpha() - 1.0) / (kd + theta.alpha() - 1.0), gamma)
                                 : std::pow(th, gamma);
      rec.bound_rhs_last = pref * (tau * L * ref_dist0 + options.reference->excess * acc.sum_vartheta +
                                   acc.sum_theta_eta_norm + acc.sum_theta_eta * ref_norm +
                                   tau * L * acc.sum_mu + acc.sum_theta_nu);
    }
    trace.records.push_back(rec);

    if (options.retain_iterates) {
      trace.iterates.main.push_back(x);
      trace.iterates.interior.push_back(z);
      trace.iterates.feasible.push_back(cert.feasible_point);
    }
  }
  trace.final_point = x;
  return trace;
}

double gradient_check(const ProblemDefinition& problem, const Point& point, std::size_t directions,
                      std::uint64_t seed, double step) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Point grad = problem.f_gradient(point);
  const double scale = std::max(1.0, point.cwiseAbs().maxCoeff());
  const double h = step * scale;
  const double denom = std::max(grad.norm(), 1e-12 * (1.0 + std::abs(problem.f_value(point))));
  double worst = 0.0;
  for (std::size_t i = 0; i < directions; ++i) {
    Point d(point.rows(), point.cols());
    for (Eigen::Index j = 0; j < d.size(); ++j) d.data()[j] = normal(rng);
    d /= d.norm();
    const double fd = (problem.f_value(point + h * d) - problem.f_value(point - h * d)) / (2.0 * h);
    const double an = inner(grad, d);
    worst = std::max(worst, std::abs(fd - an) / denom);
  }
  return worst;
}

}  // namespace ibpg
