#include <doctest.h>

#include <cmath>
#include <random>

#include "ibpg/transport.hpp"
#include "support/dual_newton.hpp"

using namespace ibpg;

namespace {

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = u(rng);
  return M;
}

ScalingState run_steps(const TransportSubproblem& sub, int steps) {
  ScalingState st = ScalingState::cold(sub.n());
  for (int t = 0; t < steps; ++t) st = sinkhorn_step(sub, st);
  return st;
}

}  // namespace

TEST_CASE("zero cost converges to the uniform doubly stochastic plan") {
  const auto sub = TransportSubproblem::from_cost(Eigen::MatrixXd::Zero(3, 3), 1.0);
  const auto st = run_steps(sub, 5);
  CHECK(st.t == 5);
  const Point X = assemble_plan(sub, st);
  CHECK((X - Point::Constant(3, 3, 1.0 / 3.0)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("each half-step fixes its marginals") {
  std::mt19937_64 rng(11);
  const auto sub = TransportSubproblem::from_cost(random_matrix(rng, 6, 0, 3), 0.3);
  ScalingState st = ScalingState::cold(6);
  for (int t = 0; t < 30; ++t) {
    sinkhorn_update_u(sub, st);
    CHECK((assemble_plan(sub, st).rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-13);
    sinkhorn_update_v(sub, st);
    CHECK((assemble_plan(sub, st).colwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-13);
  }
}

TEST_CASE("long-run Sinkhorn plan matches the dual Newton solution") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd M = random_matrix(rng, 3, 0, 1);
    const auto sub = TransportSubproblem::from_cost(M, 0.5);
    const Point X = assemble_plan(sub, run_steps(sub, 2000));
    const Eigen::MatrixXd ref = testsupport::dual_newton_plan(M, 0.5);
    CHECK((X - ref).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("assembled plans") {
  std::mt19937_64 rng(13);
  const auto sub = TransportSubproblem::from_cost(random_matrix(rng, 4, -1, 1), 0.7);
  const Point X0 = assemble_plan(sub, ScalingState::cold(4));
  CHECK((X0 - sub.log_xi.array().exp().matrix()).cwiseAbs().maxCoeff() <= 1e-15);
  const Point X = assemble_plan(sub, run_steps(sub, 7));
  CHECK((X.array() > 0.0).all());
}

TEST_CASE("Gibbs matrix from a linearization") {
  std::mt19937_64 rng(14);
  const Eigen::MatrixXd C = random_matrix(rng, 3, -2, 2);
  const Eigen::MatrixXd S = random_matrix(rng, 3, 0.1, 1);
  const auto sub = TransportSubproblem::from_linearization(C, S, 0.25);
  const Eigen::MatrixXd expected = -C / 0.25 + S.array().log().matrix();
  CHECK((sub.log_xi - expected).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK_THROWS_AS(TransportSubproblem::from_linearization(C, S, 0.0), ConfigError);
  CHECK_THROWS_AS(TransportSubproblem::from_linearization(C, -S, 1.0), DomainError);
  // Underflowed anchors are clamped rather than producing −inf.
  Eigen::MatrixXd S0 = S;
  S0(0, 0) = 0.0;
  CHECK(TransportSubproblem::from_linearization(C, S0, 1.0).log_xi.allFinite());
}

TEST_CASE("NaN scaling state aborts") {
  const auto sub = TransportSubproblem::from_cost(Eigen::MatrixXd::Zero(2, 2), 1.0);
  ScalingState st = ScalingState::cold(2);
  st.log_v(0) = NAN;
  CHECK_THROWS_AS(sinkhorn_step(sub, st), NumericalError);
}

TEST_CASE("log-domain and direct Sinkhorn agree on well-scaled inputs") {
  std::mt19937_64 rng(15);
  for (double eps : {0.1, 1.0}) {
    const Eigen::MatrixXd M = random_matrix(rng, 5, -30.0 * eps, 30.0 * eps);
    const auto sub = TransportSubproblem::from_cost(M, eps);
    REQUIRE(sub.log_xi.cwiseAbs().maxCoeff() <= 30.0);
    for (int steps : {1, 5, 50}) {
      const Point a = assemble_plan(sub, run_steps(sub, steps));
      const Point b = sinkhorn_direct(sub, static_cast<std::uint64_t>(steps));
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("rounding keeps points of the polytope") {
  Point P = Point::Zero(4, 4);
  P(0, 2) = P(1, 0) = P(2, 3) = P(3, 1) = 1.0;
  CHECK(round_to_polytope(P) == P);
  const Point U = Point::Constant(4, 4, 0.25);
  CHECK((round_to_polytope(U) - U).cwiseAbs().maxCoeff() <= 1e-16);
}

TEST_CASE("rounding the all-ones matrix") {
  const Point X = round_to_polytope(Point::Ones(5, 5));
  CHECK((X - Point::Constant(5, 5, 0.2)).cwiseAbs().maxCoeff() <= 1e-16);
}

TEST_CASE("rounding random positive matrices") {
  std::mt19937_64 rng(16);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 2 + trial % 9;
    const Point X = random_matrix(rng, n, 1e-3, trial % 2 ? 0.5 : 2.0 / static_cast<double>(n));
    const Point G = round_to_polytope(X);
    CHECK(marginal_violation(G) <= 1e-12);
    CHECK(G.minCoeff() >= 0.0);
    const double err = (X.rowwise().sum().array() - 1.0).abs().sum() + (X.colwise().sum().array() - 1.0).abs().sum();
    CHECK((G - X).cwiseAbs().sum() <= 2.0 * err + 1e-12);
  }
}

TEST_CASE("rounding input validation") {
  Point X = Point::Constant(3, 3, 0.5);
  X(1, 1) = 0.0;
  CHECK_NOTHROW(round_to_polytope(X));
  X(1, 1) = -1e-3;
  CHECK_THROWS_AS(round_to_polytope(X), DomainError);
  X(1, 1) = NAN;
  CHECK_THROWS_AS(round_to_polytope(X), DomainError);
  CHECK_THROWS_AS(round_to_polytope(Point::Ones(2, 3)), DomainError);
}

TEST_CASE("oracle certificates") {
  std::mt19937_64 rng(17);
  const Eigen::Index n = 6;
  const EntropyKernel h;
  for (int trial = 0; trial < 10; ++trial) {
    SubproblemQuery q;
    q.gradient = random_matrix(rng, n, -5, 5);
    q.anchor = random_matrix(rng, n, 0.01, 1);
    q.lambda = trial % 2 ? 0.5 : 5.0;
    q.mu_tol = std::pow(10.0, -1 - trial);
    SinkhornOracle oracle;
    const auto cert = oracle.solve(q);
    CHECK(cert.mu_measured <= q.mu_tol);
    CHECK(cert.mu_measured == bregman_distance(h, cert.feasible_point, cert.interior_point));
    CHECK(cert.delta_norm == 0.0);
    CHECK(cert.nu_claimed == 0.0);
    CHECK(cert.inner_iterations % 10 == 0);
    CHECK((cert.interior_point.array() > 0.0).all());
    CHECK(marginal_violation(cert.feasible_point) <= 1e-12);
    CHECK(cert.feasible_point.minCoeff() >= 0.0);
    // The optimality residual has row-plus-column structure.
    const double scale = 1.0 + q.gradient.cwiseAbs().maxCoeff() +
                         q.lambda * (cert.interior_point.array().log() - q.anchor.array().log()).abs().maxCoeff();
    CHECK(subgradient_residual(q.gradient, q.anchor, cert.interior_point, q.lambda) <= 1e-9 * scale);
  }
}

TEST_CASE("loose tolerance is met at the first check") {
  std::mt19937_64 rng(18);
  SubproblemQuery q;
  q.gradient = random_matrix(rng, 5, -1, 1);
  q.anchor = Point::Ones(5, 5);
  q.lambda = 2.0;
  q.mu_tol = 1.0;
  SinkhornOracle oracle;
  CHECK(oracle.solve(q).inner_iterations == 10);
}

TEST_CASE("deviation is driven below tight tolerances") {
  std::mt19937_64 rng(19);
  SubproblemQuery q;
  q.gradient = random_matrix(rng, 5, -1, 1);
  q.anchor = random_matrix(rng, 5, 0.1, 1);
  q.lambda = 0.3;
  q.mu_tol = 1e-12;
  q.inner_budget = 1000000;
  SinkhornOracle oracle;
  CHECK(oracle.solve(q).mu_measured <= 1e-12);
}

TEST_CASE("budget exhaustion is reported") {
  std::mt19937_64 rng(20);
  SubproblemQuery q;
  q.gradient = random_matrix(rng, 5, -10, 10);
  q.anchor = random_matrix(rng, 5, 0.1, 1);
  q.lambda = 0.05;
  q.mu_tol = 0.0;
  q.inner_budget = 35;
  SinkhornOracle oracle(SinkhornOptions{10, false, 1e-300});
  try {
    oracle.solve(q);
    FAIL("expected OracleBudgetExceeded");
  } catch (const OracleBudgetExceeded& e) {
    CHECK(e.used() == 35);
  }
  CHECK_FALSE(oracle.last_state().has_value());
}

TEST_CASE("warm start reuses the previous scaling") {
  std::mt19937_64 rng(21);
  SubproblemQuery q;
  q.gradient = random_matrix(rng, 6, -1, 1);
  q.anchor = random_matrix(rng, 6, 0.1, 1);
  q.lambda = 0.2;
  q.mu_tol = 1e-11;
  SinkhornOracle cold;
  SinkhornOracle warm(SinkhornOptions{10, true, 1e-300});
  const auto c1 = cold.solve(q);
  warm.solve(q);
  REQUIRE(warm.last_state().has_value());
  const auto w2 = warm.solve(q);
  CHECK(w2.inner_iterations < c1.inner_iterations);
  CHECK(w2.mu_measured <= q.mu_tol);
}
