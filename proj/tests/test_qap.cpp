#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ibpg/qap.hpp"
#include "ibpg/transport.hpp"

using namespace ibpg;

namespace {

const std::string kData = IBPG_DATA_DIR;

Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index i = 0; i < M.size(); ++i) M.data()[i] = u(rng);
  return M;
}

Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  const Eigen::MatrixXd M = random_matrix(rng, n, -3, 3);
  return 0.5 * (M + M.transpose());
}

double brute_force_lap(const Eigen::MatrixXd& C) {
  std::vector<int> perm(static_cast<std::size_t>(C.rows()));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (std::size_t i = 0; i < perm.size(); ++i) c += C(static_cast<Eigen::Index>(i), perm[i]);
    best = std::min(best, c);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

const QapProblem& nug12() {
  static const QapProblem qp = build_relaxation(load_qaplib(kData + "/nug12s.dat"));
  return qp;
}

}  // namespace

TEST_CASE("parse a minimal instance") {
  const auto inst = parse_qaplib("2  0 1 1 0  0 2 2 0");
  CHECK(inst.n == 2);
  CHECK(inst.A == (Eigen::MatrixXd(2, 2) << 0, 1, 1, 0).finished());
  CHECK(inst.B == (Eigen::MatrixXd(2, 2) << 0, 2, 2, 0).finished());
}

TEST_CASE("parser skips comments and blank lines and symmetrizes") {
  const auto inst = parse_qaplib("# header\n\n2\n\n0 1\n3 0\n# flows\n0 2.5\n2.5 0\n", "x");
  CHECK(inst.name == "x");
  CHECK(inst.A(0, 1) == 2.0);
  CHECK(inst.A(1, 0) == 2.0);
  CHECK(inst.B(0, 1) == 2.5);
}

TEST_CASE("parser errors") {
  CHECK_THROWS_AS(parse_qaplib("1 0 0"), InstanceError);
  CHECK_THROWS_AS(parse_qaplib("2 0 1 1 0 0 2 2"), InstanceError);
  CHECK_THROWS_AS(parse_qaplib("2 0 1 1 0 0 2 2 0 7"), InstanceError);
  CHECK_THROWS_AS(parse_qaplib("2 0 1 1 0 0 two 2 0"), InstanceError);
  CHECK_THROWS_AS(parse_qaplib("2.5 0 1 1 0 0 2 2 0"), InstanceError);
  CHECK_THROWS_AS(parse_qaplib(""), InstanceError);
  CHECK_THROWS_AS(load_qaplib("/nonexistent/instance.dat"), InstanceError);
}

TEST_CASE("format and parse round trip") {
  const auto inst = grid_instance(2, 3, 5);
  const auto back = parse_qaplib(format_qaplib(inst));
  CHECK(back.n == 6);
  CHECK(back.A == inst.A);
  CHECK(back.B == inst.B);
}

TEST_CASE("shipped instance is a 3x4 grid") {
  const auto inst = load_qaplib(kData + "/nug12s.dat");
  CHECK(inst.n == 12);
  CHECK(inst.name == "nug12s");
  CHECK(inst.A(0, 11) == 5.0);  // opposite corners of a 3×4 grid
  CHECK(inst.A == inst.A.transpose());
  CHECK(inst.B == inst.B.transpose());
  CHECK(inst.B.diagonal().isZero());
  CHECK(inst.A == grid_instance(3, 4, 12).A);
  CHECK(inst.B == grid_instance(3, 4, 12).B);
}

TEST_CASE("Hungarian method against brute force") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const Eigen::Index n = 1 + trial % 7;
    const Eigen::MatrixXd C = random_matrix(rng, n, -5, 5);
    const LapSolution sol = solve_lap(C);
    CHECK(sol.cost == doctest::Approx(brute_force_lap(C)).epsilon(1e-12));
    // Dual feasibility, complementary slackness and strong duality.
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) CHECK(sol.row_dual(i) + sol.col_dual(j) <= C(i, j) + 1e-9);
      CHECK(std::abs(sol.row_dual(i) + sol.col_dual(sol.assignment[i]) - C(i, sol.assignment[i])) <= 1e-9);
    }
    CHECK(std::abs(sol.row_dual.sum() + sol.col_dual.sum() - sol.cost) <= 1e-9);
    std::vector<int> seen(sol.assignment);
    std::sort(seen.begin(), seen.end());
    for (Eigen::Index i = 0; i < n; ++i) CHECK(seen[static_cast<std::size_t>(i)] == i);
  }
}

TEST_CASE("Hungarian tie breaking is deterministic") {
  const LapSolution a = solve_lap(Eigen::MatrixXd::Ones(4, 4));
  const LapSolution b = solve_lap(Eigen::MatrixXd::Ones(4, 4));
  CHECK(a.assignment == b.assignment);
  CHECK(a.cost == 4.0);
}

TEST_CASE("relaxation of zero data") {
  QapInstance inst{3, Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Zero(3, 3), "zero"};
  const auto qp = build_relaxation(inst);
  CHECK(qp.S.isZero());
  CHECK(qp.T.isZero());
  CHECK(qp.L == 0.0);
  CHECK(apply_H(qp, Point::Ones(3, 3)).isZero());
}

TEST_CASE("relaxation of identity data") {
  const Eigen::Index n = 4;
  QapInstance inst{n, Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n), "eye"};
  const auto qp = build_relaxation(inst);
  CHECK(qp.s.sum() + qp.t.sum() == doctest::Approx(static_cast<double>(n)).epsilon(1e-12));
  CHECK(std::abs(qp.psd_margin) <= 1e-12);
}

TEST_CASE("relaxations are positive semidefinite") {
  std::mt19937_64 rng(32);
  std::vector<QapProblem> problems = {nug12()};
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::Index n = 3 + trial;
    problems.push_back(build_relaxation(QapInstance{n, random_symmetric(rng, n), random_symmetric(rng, n), "r"}));
  }
  for (const auto& qp : problems) {
    const double scale = qp.scale();
    CHECK(qp.psd_margin >= -1e-9 * scale);
    // LAP duals are feasible: s_i + t_j ≤ λ_i ω_j.
    CHECK(qp.spectrum().minCoeff() >= -1e-9 * scale);
    for (int s = 0; s < 200; ++s) {
      const Point X = random_matrix(rng, qp.n(), 0, 1);
      CHECK(objective(qp, X) >= -1e-9 * scale);
    }
  }
}

TEST_CASE("sampled PSD check on the shipped instance") {
  std::mt19937_64 rng(33);
  const auto& qp = nug12();
  double worst = INFINITY;
  for (int s = 0; s < 1000; ++s) worst = std::min(worst, objective(qp, random_matrix(rng, 12, -1, 1)));
  CHECK(worst >= -1e-9 * qp.scale());
}

TEST_CASE("operator H") {
  std::mt19937_64 rng(34);
  const auto& qp = nug12();
  CHECK(apply_H(qp, Point::Zero(12, 12)).isZero());
  CHECK_THROWS_AS(apply_H(qp, Point::Zero(3, 3)), DomainError);

  const auto zero_st = build_relaxation(qp.instance, StConstruction::zero);
  const Point X = random_matrix(rng, 12, 0, 1);
  CHECK((apply_H(zero_st, X) - qp.instance.A * X * qp.instance.B).norm() <= 1e-12 * X.norm());

  for (int s = 0; s < 20; ++s) {
    const Point P = random_matrix(rng, 12, -1, 1), Q = random_matrix(rng, 12, -1, 1);
    const double a = inner(Q, apply_H(qp, P)), b = inner(apply_H(qp, Q), P);
    CHECK(std::abs(a - b) <= 1e-10 * (std::abs(a) + std::abs(b) + 1.0));
  }
}

TEST_CASE("H acts diagonally on the eigenbasis") {
  const auto& qp = nug12();
  const Eigen::MatrixXd ev = qp.spectrum();
  for (Eigen::Index i = 0; i < 12; i += 5) {
    for (Eigen::Index j = 0; j < 12; j += 4) {
      const Point E = qp.V.col(i) * qp.U.col(j).transpose();
      CHECK((apply_H(qp, E) - ev(i, j) * E).norm() <= 1e-9 * qp.scale());
    }
  }
}

TEST_CASE("objective and gradient") {
  const auto& qp = nug12();
  CHECK(objective(qp, Point::Zero(12, 12)) == 0.0);
  CHECK(objective_gradient(qp, Point::Zero(12, 12)).isZero());
  const auto def = make_problem_definition(qp);
  std::mt19937_64 rng(35);
  for (int s = 0; s < 20; ++s) {
    const Point X = random_matrix(rng, 12, 0.01, 1);
    CHECK(gradient_check(def, X, 4, static_cast<std::uint64_t>(s)) <= 1e-5);
  }
}

TEST_CASE("power iteration agrees with the spectrum") {
  const auto& qp = nug12();
  CHECK(qp.norm_H == doctest::Approx(qp.spectrum().cwiseAbs().maxCoeff()));
  CHECK(qp.L == 2.0 * qp.norm_H);
  CHECK(std::abs(qp.norm_H_power - qp.norm_H) <= 1e-6 * qp.norm_H);
  const auto tight = estimate_operator_norm(qp, 1e-9);
  CHECK(std::abs(qp.norm_H_power - tight.value) <= 0.01 * tight.value);
  CHECK(tight.converged);
}

TEST_CASE("relative smoothness of the relaxation with respect to entropy") {
  std::mt19937_64 rng(36);
  const auto& qp = nug12();
  const auto def = make_problem_definition(qp);
  std::vector<PointPair> pairs;
  for (int s = 0; s < 1000; ++s) pairs.push_back({random_matrix(rng, 12, 1e-6, 1), random_matrix(rng, 12, 0, 1)});
  const EntropyKernel h;
  const auto rep = check_relative_smoothness(def.smooth_part(), h, def.smoothness, pairs);
  CHECK(rep.max_relative_violation <= 1e-10);

  SmoothnessDescriptor halved = def.smoothness;
  halved.L *= 0.5;
  // Pairs along the top eigendirection make halving L visible.
  std::vector<PointPair> aligned;
  const Eigen::MatrixXd ev = qp.spectrum();
  Eigen::Index bi = 0, bj = 0;
  ev.maxCoeff(&bi, &bj);
  const Point E = qp.V.col(bi) * qp.U.col(bj).transpose();
  const Point base = Point::Constant(12, 12, 0.5);
  aligned.push_back({base, base + 0.4 * E / E.cwiseAbs().maxCoeff()});
  CHECK(check_relative_smoothness(def.smooth_part(), h, halved, aligned).max_violation > 0.0);
}

TEST_CASE("restricted exponent two of the relaxation") {
  std::mt19937_64 rng(37);
  const auto& qp = nug12();
  const auto def = make_problem_definition(qp);
  std::uniform_real_distribution<double> th(0.01, 1.0);
  std::vector<ExponentSample> samples;
  for (int s = 0; s < 1000; ++s) {
    samples.push_back({random_matrix(rng, 12, 0, 1), random_matrix(rng, 12, 0, 1), random_matrix(rng, 12, 1e-6, 1),
                       s % 10 == 0 ? 1.0 : th(rng)});
  }
  const EntropyKernel h;
  CHECK(check_restricted_exponent(def.smooth_part(), h, def.smoothness, samples).max_relative_violation <= 1e-10);
}

TEST_CASE("affine and polytope projections") {
  std::mt19937_64 rng(38);
  const Point Y = random_matrix(rng, 6, -1, 2);
  const Point A = project_affine(Y);
  CHECK(marginal_violation(A) <= 1e-14);
  // Idempotent on feasible points.
  const Point P = round_to_polytope(random_matrix(rng, 6, 0.01, 1));
  CHECK((project_polytope(P) - P).cwiseAbs().maxCoeff() <= 1e-12);
  std::size_t sweeps = 0;
  const Point Z = project_polytope(Y, 1e-14, 100000, &sweeps);
  CHECK(sweeps > 0);
  CHECK(marginal_violation(Z) <= 1e-10);
  CHECK(Z.minCoeff() >= 0.0);
  // Variational inequality of the projection against the vertices of Ω.
  for (int s = 0; s < 50; ++s) {
    std::vector<int> perm(6);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Point V = Point::Zero(6, 6);
    for (int i = 0; i < 6; ++i) V(i, perm[static_cast<std::size_t>(i)]) = 1.0;
    CHECK(inner(Y - Z, V - Z) <= 1e-9);
  }
  CHECK_THROWS_AS(project_polytope(Y, 1e-14, 2), NumericalError);
}

TEST_CASE("reference solve with H = 0") {
  QapInstance inst{4, Eigen::MatrixXd::Zero(4, 4), Eigen::MatrixXd::Zero(4, 4), "zero"};
  const auto sol = reference_solve(build_relaxation(inst));
  CHECK(sol.F_star == 0.0);
  CHECK(sol.residual == 0.0);
  CHECK(marginal_violation(sol.x_star) <= 1e-12);
}

TEST_CASE("reference solve agrees with a one-dimensional brute force at n = 2") {
  const auto inst = parse_qaplib("2  0 1 1 0  0 1 1 0");
  const auto qp = build_relaxation(inst);
  const auto sol = reference_solve(qp);
  // Ω = {[[a, 1−a], [1−a, a]] : a ∈ [0, 1]}.
  auto f = [&](double a) { return objective(qp, (Point(2, 2) << a, 1 - a, 1 - a, a).finished()); };
  double best_a = 0.0, best = INFINITY;
  for (int i = 0; i <= 100000; ++i) {
    const double a = i / 100000.0;
    if (f(a) < best) best = f(a), best_a = a;
  }
  double lo = std::max(0.0, best_a - 1e-5), hi = std::min(1.0, best_a + 1e-5);
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (f(m1) < f(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  best = std::min(best, f(0.5 * (lo + hi)));
  CHECK(std::abs(sol.F_star - best) <= 1e-8 * (1.0 + std::abs(best)));
}

TEST_CASE("reference solution on the shipped instance") {
  const auto& qp = nug12();
  const auto sol = reference_solve(qp);
  CHECK(sol.residual <= 1e-11);
  CHECK(marginal_violation(sol.x_star) <= 1e-10);
  CHECK(sol.x_star.minCoeff() >= -1e-12);
  CHECK(sol.fw_gap >= 0.0);
  CHECK(sol.fw_gap <= 1e-6 * sol.F_star);
  CHECK(sol.F_star > 0.0);
  // No vertex of Ω does better than the relaxation optimum.
  std::mt19937_64 rng(39);
  std::vector<int> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  for (int s = 0; s < 200; ++s) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Point P = Point::Zero(12, 12);
    for (int i = 0; i < 12; ++i) P(i, perm[static_cast<std::size_t>(i)]) = 1.0;
    CHECK(objective(qp, P) >= sol.F_star - 1e-9 * qp.scale());
  }
}

TEST_CASE("Frank-Wolfe gap bounds the suboptimality") {
  const auto& qp = nug12();
  const auto sol = reference_solve(qp);
  std::mt19937_64 rng(40);
  for (int s = 0; s < 20; ++s) {
    const Point X = round_to_polytope(random_matrix(rng, 12, 0.01, 1));
    CHECK(frank_wolfe_gap(qp, X) >= objective(qp, X) - sol.F_star - 1e-9 * qp.scale());
  }
}

TEST_CASE("normalized function value") {
  const auto& qp = nug12();
  const auto sol = reference_solve(qp);
  CHECK(nfval(qp, sol.x_star, sol.F_star) <= 1e-12);
  const Point X = round_to_polytope(Point::Ones(12, 12));
  const double fx = objective(qp, X);
  CHECK(nfval(qp, X, fx / 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(nfval(qp, X, 0.0) == doctest::Approx(fx));
}

TEST_CASE("problem definition wiring") {
  const auto& qp = nug12();
  const auto def = make_problem_definition(qp);
  CHECK(def.smoothness.L == qp.L);
  CHECK(def.smoothness.tau == 1.0);
  CHECK(def.smoothness.gamma == 2.0);
  CHECK(def.kernel->name() == "entropy");
  const Point U = Point::Constant(12, 12, 1.0 / 12.0);
  CHECK(def.P_value(U) == 0.0);
  CHECK(std::isinf(def.P_value(Point::Ones(12, 12))));
  CHECK((def.to_feasible(Point::Ones(12, 12)) - U).cwiseAbs().maxCoeff() <= 1e-16);
  CHECK(def.F(U) == doctest::Approx(objective(qp, U)));
}

TEST_CASE("construction names") {
  CHECK(parse_st_construction("zero") == StConstruction::zero);
  CHECK(parse_st_construction("lap_dual") == StConstruction::lap_dual);
  CHECK(to_string(StConstruction::zero) == "zero");
  CHECK_THROWS_AS(parse_st_construction("other"), ConfigError);
}
