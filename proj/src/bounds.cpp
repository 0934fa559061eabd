// Offline verification of the per-iteration and cumulative inequalities
// satisfied by the iBPG and v-iBPG iterates. Everything here is recomputed
// from retained iterates and certificate values; the online bound columns in
// the trace are not consulted.

#include <algorithm>
#include <cmath>

#include "ibpg/errors.hpp"
#include "ibpg/solvers.hpp"

namespace ibpg {

namespace {

void require_iterates(const RunTrace& trace, SolverKind kind) {
  if (trace.meta.solver != kind) throw ConfigError("bound check: trace from a different solver");
  if (!trace.has_iterates()) throw ConfigError("bound check: run without retained iterates");
  if (trace.iterates.interior.size() != trace.records.size() + 1) {
    throw ConfigError("bound check: iterate count does not match records");
  }
}

void push(ResidualSeries& series, std::size_t k, double residual, double scale) {
  series.residual.push_back(residual);
  series.scale.push_back(scale);
  const double scaled = residual / scale;
  if (scaled > series.max_scaled) {
    series.max_scaled = scaled;
    series.worst_k = k;
  }
}

}  // namespace

ResidualSeries check_descent_inequality(const RunTrace& trace, const ProblemDefinition& problem,
                                        const Point& x_ref) {
  require_iterates(trace, SolverKind::ibpg);
  const auto& kernel = *problem.kernel;
  const double L = problem.smoothness.L;
  const double F_ref = problem.F(x_ref);
  const auto& xs = trace.iterates.interior;
  const auto& xts = trace.iterates.feasible;

  ResidualSeries out;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& rec = trace.records[k];
    const double F_next = problem.F(xts[k + 1]);
    const double d_prev = bregman_distance(kernel, x_ref, xs[k]);
    const double d_next = bregman_distance(kernel, x_ref, xs[k + 1]);
    const double lhs = F_next - F_ref;
    const double rhs = L * d_prev - L * d_next + rec.delta_norm * (xts[k + 1] - x_ref).norm() +
                       L * rec.mu_measured + rec.nu_claimed;
    push(out, k, lhs - rhs, 1.0 + std::abs(F_next) + std::abs(F_ref) + L * d_prev);
  }
  return out;
}

ResidualSeries check_near_monotone(const RunTrace& trace, const ProblemDefinition& problem) {
  require_iterates(trace, SolverKind::ibpg);
  const auto& kernel = *problem.kernel;
  const double L = problem.smoothness.L;
  const auto& xs = trace.iterates.interior;
  const auto& xts = trace.iterates.feasible;

  ResidualSeries out;
  double mu_prev = bregman_distance(kernel, xts[0], xs[0]);
  double F_cur = problem.F(xts[0]);
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& rec = trace.records[k];
    const double F_next = problem.F(xts[k + 1]);
    const double xi = rec.delta_norm * (xts[k + 1] - xts[k]).norm() + L * (rec.mu_measured + mu_prev) +
                      rec.nu_claimed;
    push(out, k, F_next - F_cur - xi, 1.0 + std::abs(F_next) + std::abs(F_cur));
    mu_prev = rec.mu_measured;
    F_cur = F_next;
  }
  return out;
}

BoundReport check_ibpg_bounds(const RunTrace& trace, const ProblemDefinition& problem,
                              const Point& x_star, double F_star) {
  require_iterates(trace, SolverKind::ibpg);
  const auto& kernel = *problem.kernel;
  const double L = problem.smoothness.L;
  const auto& xs = trace.iterates.interior;
  const auto& xts = trace.iterates.feasible;

  const double d0 = bregman_distance(kernel, x_star, xs[0]);
  const double norm_star = x_star.norm();
  double mu_prev = bregman_distance(kernel, xts[0], xs[0]);

  BoundReport report;
  double sum_err = 0.0;   // Σ η_i‖x̃^{i+1}‖ + η_i‖x‖ + Lμ_i + ν_i
  double sum_i_xi = 0.0;  // Σ i·ξ_i
  Point running = Point::Zero(x_star.rows(), x_star.cols());
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& rec = trace.records[k];
    const double eta = rec.delta_norm;
    const double mu = rec.mu_measured;
    const double nu = rec.nu_claimed;
    sum_err += eta * xts[k + 1].norm() + eta * norm_star + L * mu + nu;
    const double xi = eta * (xts[k + 1] - xts[k]).norm() + L * (mu + mu_prev) + nu;
    sum_i_xi += static_cast<double>(k) * xi;
    mu_prev = mu;

    const double kp1 = static_cast<double>(k + 1);
    running += xts[k + 1];
    const double F_avg = problem.F(running / kp1);
    const double F_last = problem.F(xts[k + 1]);
    const double rhs_avg = (L * d0 + sum_err) / kp1;
    const double rhs_last = (L * d0 + sum_err + sum_i_xi) / kp1;
    push(report.averaged, k, (F_avg - F_star) - rhs_avg, 1.0 + std::abs(F_star) + std::abs(F_avg));
    push(report.last, k, (F_last - F_star) - rhs_last, 1.0 + std::abs(F_star) + std::abs(F_last));
  }
  return report;
}

BoundReport check_vibpg_bound(const RunTrace& trace, const ProblemDefinition& problem,
                              const ThetaSchedule& theta, const Point& x_star, double F_star,
                              double excess) {
  require_iterates(trace, SolverKind::vibpg);
  const auto& kernel = *problem.kernel;
  const double tL = problem.smoothness.tau * problem.smoothness.L;
  const double gamma = problem.smoothness.gamma;
  const bool closed = theta.mode() == ThetaMode::closed_form;
  const double alpha = theta.alpha();
  const auto& xs = trace.iterates.main;
  const auto& zs = trace.iterates.interior;
  const auto& zts = trace.iterates.feasible;

  const double d0 = bregman_distance(kernel, x_star, zs[0]);
  const double norm_star = x_star.norm();

  BoundReport report;
  double sum_vartheta = 0.0;
  double sum_err = 0.0;
  double F_cur = problem.F(xs[0]);
  double d_cur = d0;
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& rec = trace.records[k];
    const double th = theta.theta(static_cast<long long>(k));
    const double th_next = theta.theta(static_cast<long long>(k) + 1);
    const double w = std::pow(th, 1.0 - gamma);
    const double eta = rec.delta_norm;
    const double mu = rec.mu_measured;
    const double nu = rec.nu_claimed;
    sum_vartheta += theta.vartheta_raw(k);
    sum_err += w * eta * zts[k + 1].norm() + w * eta * norm_star + tL * mu + w * nu;

    const double kd = static_cast<double>(k);
    const double pref = closed ? std::pow((alpha - 1.0) / (kd + alpha - 1.0), gamma) : std::pow(th, gamma);
    const double F_next = problem.F(xs[k + 1]);
    const double rhs = pref * (tL * d0 + excess * sum_vartheta + sum_err);
    push(report.last, k, (F_next - F_star) - rhs, 1.0 + std::abs(F_star) + std::abs(F_next));
    report.max_prefactor_sum = std::max(report.max_prefactor_sum, pref * sum_vartheta);

    // Lyapunov step k → k+1.
    const double d_next = bregman_distance(kernel, x_star, zs[k + 1]);
    const double lhs_l = (1.0 - th_next) / std::pow(th_next, gamma) * (F_next - F_star) + tL * d_next;
    const double rhs_l = (1.0 - th) / std::pow(th, gamma) * (F_cur - F_star) + tL * d_cur +
                         excess * theta.vartheta_raw(k + 1) + w * eta * (zts[k + 1] - x_star).norm() +
                         tL * mu + w * nu;
    push(report.lyapunov, k, lhs_l - rhs_l,
         1.0 + std::abs(lhs_l) + std::abs(rhs_l));
    F_cur = F_next;
    d_cur = d_next;
  }
  return report;
}

Point averaged_iterate(const RunTrace& trace, std::size_t k) {
  if (!trace.has_iterates()) throw ConfigError("averaged_iterate: run without retained iterates");
  if (k == 0) throw ConfigError("averaged_iterate: k must be positive");
  if (trace.meta.solver != SolverKind::ibpg) throw ConfigError("averaged_iterate: iBPG traces only");
  const auto& xts = trace.iterates.feasible;
  if (k >= xts.size()) throw ConfigError("averaged_iterate: k beyond the run");
  Point sum = Point::Zero(xts[1].rows(), xts[1].cols());
  for (std::size_t i = 1; i <= k; ++i) sum += xts[i];
  return sum / static_cast<double>(k);
}

}  // namespace ibpg
