#include "ibpg/qap.hpp"

#include <Eigen/Eigenvalues>

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "ibpg/errors.hpp"
#include "ibpg/transport.hpp"

namespace ibpg {

namespace {

std::vector<double> tokenize(std::string_view text) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;

    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    std::size_t i = first;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      const std::string_view tok = line.substr(i, j - i);
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value)) {
        throw InstanceError("qaplib: non-numeric token '" + std::string(tok) + "'");
      }
      values.push_back(value);
      i = j;
    }
  }
  return values;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& M) { return 0.5 * (M + M.transpose()); }

}  // namespace

QapInstance parse_qaplib(std::string_view text, std::string name) {
  const std::vector<double> values = tokenize(text);
  if (values.empty()) throw InstanceError("qaplib: empty instance");
  const double nd = values.front();
  if (nd != std::floor(nd) || nd <= 1.0 || nd > 1e5) {
    throw InstanceError("qaplib: dimension must be an integer greater than 1");
  }
  const auto n = static_cast<Eigen::Index>(nd);
  const std::size_t expected = 1 + 2 * static_cast<std::size_t>(n * n);
  if (values.size() != expected) {
    throw InstanceError("qaplib: expected " + std::to_string(expected) + " tokens, found " +
                        std::to_string(values.size()));
  }
  QapInstance inst;
  inst.n = n;
  inst.name = std::move(name);
  inst.A.resize(n, n);
  inst.B.resize(n, n);
  std::size_t at = 1;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) inst.A(i, j) = values[at++];
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) inst.B(i, j) = values[at++];
  inst.A = symmetrize(inst.A);
  inst.B = symmetrize(inst.B);
  return inst;
}

QapInstance load_qaplib(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InstanceError("cannot open instance file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_qaplib(buf.str(), path.stem().string());
}

std::string format_qaplib(const QapInstance& instance) {
  std::ostringstream out;
  out.precision(17);
  out << instance.n << "\n";
  for (const Eigen::MatrixXd* M : {&instance.A, &instance.B}) {
    out << "\n";
    for (Eigen::Index i = 0; i < instance.n; ++i) {
      for (Eigen::Index j = 0; j < instance.n; ++j) {
        if (j > 0) out << ' ';
        out << (*M)(i, j);
      }
      out << "\n";
    }
  }
  return out.str();
}

QapInstance grid_instance(int rows, int cols, std::uint64_t seed, int max_flow) {
  if (rows < 1 || cols < 1 || rows * cols < 2) throw ConfigError("grid instance needs at least 2 cells");
  if (max_flow < 1) throw ConfigError("grid instance: max_flow must be positive");
  const int n = rows * cols;
  QapInstance inst;
  inst.n = n;
  inst.name = "grid" + std::to_string(rows) + "x" + std::to_string(cols) + "s" + std::to_string(seed);
  inst.A = Eigen::MatrixXd::Zero(n, n);
  inst.B = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      inst.A(a, b) = std::abs(a / cols - b / cols) + std::abs(a % cols - b % cols);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> flow(0, max_flow);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) inst.B(a, b) = inst.B(b, a) = flow(rng);
  return inst;
}

std::string to_string(StConstruction st) { return st == StConstruction::lap_dual ? "lap_dual" : "zero"; }

StConstruction parse_st_construction(std::string_view text) {
  if (text == "lap_dual" || text == "lap") return StConstruction::lap_dual;
  if (text == "zero") return StConstruction::zero;
  throw ConfigError("unknown S,T construction '" + std::string(text) + "'");
}

Eigen::MatrixXd QapProblem::spectrum() const {
  Eigen::MatrixXd ev = lambda * omega.transpose();
  ev.colwise() -= s;
  ev.rowwise() -= t.transpose();
  return ev;
}

double QapProblem::scale() const {
  return 1.0 + instance.A.cwiseAbs().maxCoeff() * instance.B.cwiseAbs().maxCoeff() *
                   static_cast<double>(instance.n);
}

QapProblem build_relaxation(const QapInstance& instance, StConstruction st) {
  const Eigen::Index n = instance.n;
  if (n < 2 || instance.A.rows() != n || instance.A.cols() != n || instance.B.rows() != n ||
      instance.B.cols() != n) {
    throw InstanceError("relaxation: inconsistent instance dimensions");
  }
  QapProblem qp;
  qp.instance = instance;
  qp.st = st;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ea(instance.A);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eb(instance.B);
  if (ea.info() != Eigen::Success || eb.info() != Eigen::Success) {
    throw NumericalError("relaxation: eigendecomposition failed");
  }
  qp.V = ea.eigenvectors();
  qp.lambda = ea.eigenvalues();
  qp.U = eb.eigenvectors();
  qp.omega = eb.eigenvalues();

  if (st == StConstruction::lap_dual) {
    const LapSolution lap = solve_lap(qp.lambda * qp.omega.transpose());
    qp.s = lap.row_dual;
    qp.t = lap.col_dual;
  } else {
    qp.s = Eigen::VectorXd::Zero(n);
    qp.t = Eigen::VectorXd::Zero(n);
  }
  qp.S = qp.V * qp.s.asDiagonal() * qp.V.transpose();
  qp.T = qp.U * qp.t.asDiagonal() * qp.U.transpose();
  qp.S = symmetrize(qp.S);
  qp.T = symmetrize(qp.T);

  const Eigen::MatrixXd ev = qp.spectrum();
  qp.psd_margin = ev.minCoeff();
  qp.norm_H = ev.cwiseAbs().maxCoeff();
  qp.L = 2.0 * qp.norm_H;
  qp.norm_H_power = estimate_operator_norm(qp).value;
  return qp;
}

Point apply_H(const QapProblem& problem, const Point& X) {
  const Eigen::Index n = problem.n();
  if (X.rows() != n || X.cols() != n) throw DomainError(DomainError::Kind::shape_mismatch, "H: X must be n x n");
  const auto& inst = problem.instance;
  Point out = inst.A * X * inst.B;
  out.noalias() -= problem.S * X;
  out.noalias() -= X * problem.T;
  return out;
}

double objective(const QapProblem& problem, const Point& X) { return inner(X, apply_H(problem, X)); }

Point objective_gradient(const QapProblem& problem, const Point& X) { return 2.0 * apply_H(problem, X); }

PowerIteration estimate_operator_norm(const QapProblem& problem, double tol, std::size_t max_iter,
                                      std::uint64_t seed) {
  const Eigen::Index n = problem.n();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Point X(n, n);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
  X /= X.norm();

  PowerIteration result;
  double prev = 0.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    Point Y = apply_H(problem, X);
    const double nrm = Y.norm();
    result.iterations = it;
    if (nrm == 0.0) {
      result.value = 0.0;
      result.converged = true;
      return result;
    }
    result.value = nrm;
    X = Y / nrm;
    if (it > 1 && std::abs(nrm - prev) <= tol * nrm) {
      result.converged = true;
      break;
    }
    prev = nrm;
  }
  return result;
}

double nfval(const QapProblem& problem, const Point& X, double F_star) {
  const double f = objective(problem, round_to_polytope(X.cwiseMax(0.0)));
  const double gap = std::abs(f - F_star);
  return F_star == 0.0 ? gap : gap / std::abs(F_star);
}

double frank_wolfe_gap(const QapProblem& problem, const Point& X) {
  const Point G = objective_gradient(problem, X);
  const LapSolution lap = solve_lap(G);
  return inner(G, X) - lap.cost;
}

double polytope_indicator(const Point& X, double tol) {
  if (X.rows() != X.cols() || !X.allFinite()) return std::numeric_limits<double>::infinity();
  if (X.minCoeff() < -tol) return std::numeric_limits<double>::infinity();
  if (marginal_violation(X) > tol) return std::numeric_limits<double>::infinity();
  return 0.0;
}

ProblemDefinition make_problem_definition(const QapProblem& problem) {
  auto qp = std::make_shared<const QapProblem>(problem);
  ProblemDefinition def;
  def.f_value = [qp](const Point& X) { return objective(*qp, X); };
  def.f_gradient = [qp](const Point& X) { return objective_gradient(*qp, X); };
  def.P_value = [](const Point& X) { return polytope_indicator(X); };
  def.kernel = std::make_shared<const EntropyKernel>();
  def.smoothness = SmoothnessDescriptor{problem.L, 1.0, 2.0, BoxSet{0.0, 1.0}};
  def.to_feasible = [](const Point& X) { return round_to_polytope(X); };
  return def;
}

}  // namespace ibpg
