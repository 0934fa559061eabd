#include "ibpg/transport.hpp"

#include <cmath>
#include <limits>

#include "ibpg/errors.hpp"

namespace ibpg {

TransportSubproblem TransportSubproblem::from_linearization(const Point& C, const Point& S,
                                                            double epsilon, double anchor_floor) {
  if (!(epsilon > 0.0)) throw ConfigError("transport: epsilon must be positive");
  if (C.rows() != C.cols() || S.rows() != C.rows() || S.cols() != C.cols()) {
    throw DomainError(DomainError::Kind::shape_mismatch, "transport: C and S must be square and equal");
  }
  require_finite(C, "transport cost");
  if ((S.array() < 0.0).any() || !S.allFinite()) {
    throw DomainError(DomainError::Kind::not_in_domain, "transport: anchor must be nonnegative");
  }
  TransportSubproblem sub;
  sub.epsilon = epsilon;
  sub.log_xi = -C / epsilon + S.cwiseMax(anchor_floor).array().log().matrix();
  return sub;
}

TransportSubproblem TransportSubproblem::from_cost(const Eigen::MatrixXd& M, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("transport: epsilon must be positive");
  if (M.rows() != M.cols()) throw DomainError(DomainError::Kind::shape_mismatch, "transport: M must be square");
  require_finite(M, "transport cost");
  return {-M / epsilon, epsilon};
}

ScalingState ScalingState::cold(Eigen::Index n) {
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0};
}

void sinkhorn_update_u(const TransportSubproblem& sub, ScalingState& state) {
  const Eigen::Index n = sub.n();
  for (Eigen::Index i = 0; i < n; ++i) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) m = std::max(m, sub.log_xi(i, j) + state.log_v(j));
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) s += std::exp(sub.log_xi(i, j) + state.log_v(j) - m);
    state.log_u(i) = -(m + std::log(s));
  }
}

void sinkhorn_update_v(const TransportSubproblem& sub, ScalingState& state) {
  const Eigen::Index n = sub.n();
  for (Eigen::Index j = 0; j < n; ++j) {
    double m = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n; ++i) m = std::max(m, sub.log_xi(i, j) + state.log_u(i));
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += std::exp(sub.log_xi(i, j) + state.log_u(i) - m);
    state.log_v(j) = -(m + std::log(s));
  }
}

ScalingState sinkhorn_step(const TransportSubproblem& sub, ScalingState state) {
  if (!state.log_u.allFinite() || !state.log_v.allFinite()) {
    throw NumericalError("sinkhorn: non-finite scaling state");
  }
  sinkhorn_update_u(sub, state);
  sinkhorn_update_v(sub, state);
  ++state.t;
  return state;
}

Point assemble_plan(const TransportSubproblem& sub, const ScalingState& state) {
  const Eigen::Index n = sub.n();
  Point X(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      X(i, j) = std::exp(state.log_u(i) + sub.log_xi(i, j) + state.log_v(j));
    }
  }
  return X;
}

Point sinkhorn_direct(const TransportSubproblem& sub, std::uint64_t steps) {
  const Eigen::MatrixXd xi = sub.log_xi.array().exp().matrix();
  const Eigen::Index n = sub.n();
  Eigen::VectorXd u = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  for (std::uint64_t t = 0; t < steps; ++t) {
    u = (xi * v).cwiseInverse();
    v = (xi.transpose() * u).cwiseInverse();
  }
  return u.asDiagonal() * xi * v.asDiagonal();
}

Point round_to_polytope(const Point& X) {
  if (X.rows() != X.cols()) throw DomainError(DomainError::Kind::shape_mismatch, "rounding: X must be square");
  if (!X.allFinite() || (X.array() < 0.0).any()) {
    throw DomainError(DomainError::Kind::not_in_domain, "rounding: X must be finite and nonnegative");
  }
  Point Y = X;
  const Eigen::VectorXd r = Y.rowwise().sum();
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    if (r(i) > 1.0) Y.row(i) /= r(i);
  }
  const Eigen::RowVectorXd c = Y.colwise().sum();
  for (Eigen::Index j = 0; j < Y.cols(); ++j) {
    if (c(j) > 1.0) Y.col(j) /= c(j);
  }
  const Eigen::VectorXd err_r = (1.0 - Y.rowwise().sum().array()).cwiseMax(0.0).matrix();
  const Eigen::RowVectorXd err_c = (1.0 - Y.colwise().sum().array()).cwiseMax(0.0).matrix();
  const double total = err_r.sum();
  if (total > 0.0) Y.noalias() += err_r * err_c / total;
  return Y;
}

double marginal_violation(const Point& X) {
  const double rows = (X.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double cols = (X.colwise().sum().array() - 1.0).abs().maxCoeff();
  return std::max(rows, cols);
}

InexactCertificate SinkhornOracle::solve(const SubproblemQuery& query) {
  if (!(query.lambda > 0.0)) throw ConfigError("sinkhorn oracle: lambda must be positive");
  if (opts_.check_every == 0) throw ConfigError("sinkhorn oracle: check_every must be positive");
  const auto sub =
      TransportSubproblem::from_linearization(query.gradient, query.anchor, query.lambda, opts_.anchor_floor);
  ScalingState state = (opts_.warm_start && last_ && last_->log_v.size() == sub.n())
                           ? ScalingState{last_->log_u, last_->log_v, 0}
                           : ScalingState::cold(sub.n());
  const EntropyKernel entropy;

  while (true) {
    state = sinkhorn_step(sub, std::move(state));
    const bool at_budget = state.t >= query.inner_budget;
    if (state.t % opts_.check_every != 0 && !at_budget) continue;

    Point X = assemble_plan(sub, state);
    if (entropy.in_interior(X)) {
      Point Xt = round_to_polytope(X);
      const double mu = bregman_distance(entropy, Xt, X);
      if (mu <= query.mu_tol) {
        last_ = state;
        InexactCertificate cert;
        cert.interior_point = std::move(X);
        cert.feasible_point = std::move(Xt);
        cert.mu_measured = mu;
        cert.inner_iterations = state.t;
        return cert;
      }
    }
    if (at_budget) {
      throw OracleBudgetExceeded("sinkhorn: inner budget exhausted at k=" + std::to_string(query.outer_index),
                                 state.t);
    }
  }
}

double subgradient_residual(const Point& C, const Point& S, const Point& X, double epsilon) {
  const Eigen::MatrixXd R = C + epsilon * (X.array().log() - S.array().log()).matrix();
  const Eigen::VectorXd row_mean = R.rowwise().mean();
  const Eigen::RowVectorXd col_mean = R.colwise().mean();
  const double grand = R.mean();
  Eigen::MatrixXd fit = row_mean.replicate(1, R.cols()) + col_mean.replicate(R.rows(), 1);
  fit.array() -= grand;
  return (R - fit).cwiseAbs().maxCoeff();
}

}  // namespace ibpg
