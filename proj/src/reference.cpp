#include <cmath>

#include "ibpg/errors.hpp"
#include "ibpg/qap.hpp"
#include "ibpg/transport.hpp"

namespace ibpg {

Point project_affine(const Point& Y) {
  const double n = static_cast<double>(Y.rows());
  const Eigen::VectorXd row_def = 1.0 - Y.rowwise().sum().array();
  const Eigen::RowVectorXd col_def = 1.0 - Y.colwise().sum().array();
  const double total = Y.sum();
  Point X = Y;
  X.colwise() += row_def / n;
  X.rowwise() += col_def / n;
  X.array() += (total - n) / (n * n);
  return X;
}

Point project_polytope(const Point& Y, double tol, std::size_t max_sweeps, std::size_t* sweeps_used) {
  if (Y.rows() != Y.cols()) throw DomainError(DomainError::Kind::shape_mismatch, "projection: Y must be square");
  require_finite(Y, "projection input");
  // Dykstra: the affine set needs no correction term, the orthant does.
  Point x = Y;
  Point q = Point::Zero(Y.rows(), Y.cols());
  for (std::size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    const Point a = project_affine(x);
    const Point shifted = a + q;
    Point next = shifted.cwiseMax(0.0);
    q = shifted - next;
    const double change = (next - x).norm();
    x = std::move(next);
    if (change <= tol && marginal_violation(x) <= tol) {
      if (sweeps_used) *sweeps_used = sweep;
      return x;
    }
  }
  throw NumericalError("projection: Dykstra sweep cap reached");
}

ReferenceSolution reference_solve(const QapProblem& problem, ReferenceOptions opts) {
  const Eigen::Index n = problem.n();
  const double Lf = problem.L;
  ReferenceSolution sol;
  Point X = Point::Constant(n, n, 1.0 / static_cast<double>(n));
  if (!(Lf > 0.0)) {
    sol.x_star = X;
    sol.F_star = objective(problem, X);
    return sol;
  }
  auto proj = [&](const Point& Z) { return project_polytope(Z, 1e-14, opts.max_sweeps); };
  auto residual = [&](const Point& Z) { return (Z - proj(Z - objective_gradient(problem, Z) / Lf)).norm(); };

  Point Y = X;
  double fX = objective(problem, X);
  double t = 1.0;
  bool done = false;
  for (std::size_t it = 1; it <= opts.max_outer; ++it) {
    const Point Xn = proj(Y - objective_gradient(problem, Y) / Lf);
    const double fn = objective(problem, Xn);
    sol.iterations = it;
    if (fn > fX && t > 1.0) {
      // Adaptive restart: drop the momentum and retry from X. Without
      // momentum the step is a plain projected gradient step and is kept.
      t = 1.0;
      Y = X;
      continue;
    }
    const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Y = Xn + ((t - 1.0) / tn) * (Xn - X);
    X = Xn;
    fX = fn;
    t = tn;
    if (it % 10 == 0) {
      sol.residual = residual(X);
      if (sol.residual <= opts.tol) {
        done = true;
        break;
      }
    }
  }
  if (!done) throw NumericalError("reference solve: outer iteration cap reached");
  sol.x_star = round_to_polytope(X.cwiseMax(0.0));
  sol.F_star = objective(problem, sol.x_star);
  sol.fw_gap = std::max(0.0, frank_wolfe_gap(problem, sol.x_star));
  return sol;
}

}  // namespace ibpg
