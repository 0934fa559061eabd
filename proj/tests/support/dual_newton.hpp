#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace testsupport {

/// Independent solver for min ⟨M, X⟩ + ε Σ x(log x − 1) s.t. Xe = e, Xᵀe = e.
///
/// Damped Newton ascent on the concave dual
///   g(a, b) = Σa + Σb − ε Σ exp((a_i + b_j − M_ij)/ε),
/// with b_n fixed at 0 to remove the (a + c, b − c) invariance. The plan is
/// X_ij = exp((a_i + b_j − M_ij)/ε).
inline Eigen::MatrixXd dual_newton_plan(const Eigen::MatrixXd& M, double eps, double tol = 1e-15) {
  const Eigen::Index n = M.rows();
  const Eigen::Index m = 2 * n - 1;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(m);  // (a, b_0..b_{n-2})

  auto plan = [&](const Eigen::VectorXd& v) {
    Eigen::MatrixXd X(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double b = j < n - 1 ? v(n + j) : 0.0;
        X(i, j) = std::exp((v(i) + b - M(i, j)) / eps);
      }
    return X;
  };
  auto dual = [&](const Eigen::VectorXd& v) { return v.sum() - eps * plan(v).sum(); };

  for (int it = 0; it < 500; ++it) {
    const Eigen::MatrixXd X = plan(w);
    const Eigen::VectorXd r = X.rowwise().sum();
    const Eigen::VectorXd c = X.colwise().sum().transpose();
    Eigen::VectorXd grad(m);
    grad.head(n) = Eigen::VectorXd::Ones(n) - r;
    grad.tail(n - 1) = Eigen::VectorXd::Ones(n - 1) - c.head(n - 1);
    if (grad.lpNorm<Eigen::Infinity>() <= tol) return X;

    Eigen::MatrixXd Hn = Eigen::MatrixXd::Zero(m, m);  // negated Hessian times ε
    Hn.topLeftCorner(n, n) = r.asDiagonal();
    Hn.bottomRightCorner(n - 1, n - 1) = c.head(n - 1).asDiagonal();
    Hn.topRightCorner(n, n - 1) = X.leftCols(n - 1);
    Hn.bottomLeftCorner(n - 1, n) = X.leftCols(n - 1).transpose();
    const Eigen::VectorXd step = eps * Hn.ldlt().solve(grad);

    // Damped steps far from the optimum; full steps inside the quadratic
    // region, where the dual value no longer resolves the ascent.
    double t = 1.0;
    if (grad.lpNorm<Eigen::Infinity>() > 1e-6) {
      const double g0 = dual(w);
      while (dual(w + t * step) < g0 + 1e-4 * t * grad.dot(step) && t > 1e-12) t *= 0.5;
    }
    w += t * step;
  }
  // Round-off can leave the last digits unresolved; accept marginals met to 1e-11.
  const Eigen::MatrixXd X = plan(w);
  const double r = (X.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double c = (X.colwise().sum().array() - 1.0).abs().maxCoeff();
  if (std::max(r, c) <= 1e-11) return X;
  throw std::runtime_error("dual Newton did not converge");
}

}  // namespace testsupport
