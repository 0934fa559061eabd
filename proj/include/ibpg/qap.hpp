#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ibpg/solvers.hpp"

namespace ibpg {

/// Quadratic assignment data: min over permutations of tr(A X B Xᵀ).
struct QapInstance {
  Eigen::Index n = 0;
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  std::string name;
};

/// Parses the plain QAPLIB layout: n, then A and B row-major. Blank lines and
/// lines starting with '#' are skipped; A and B are symmetrized.
/// Throws InstanceError on malformed input.
QapInstance parse_qaplib(std::string_view text, std::string name = {});
QapInstance load_qaplib(const std::filesystem::path& path);
/// Inverse of parse_qaplib (integers printed without a fractional part).
std::string format_qaplib(const QapInstance& instance);

/// nug-style synthetic instance: A = Manhattan distances on a rows×cols grid,
/// B = symmetric random integer flows in [0, max_flow] with zero diagonal.
QapInstance grid_instance(int rows, int cols, std::uint64_t seed, int max_flow = 10);

enum class StConstruction { lap_dual, zero };
std::string to_string(StConstruction st);
StConstruction parse_st_construction(std::string_view text);

/// Convex relaxation min ⟨X, H(X)⟩ over the doubly stochastic matrices with
/// H(X) = AXB − SX − XT.
struct QapProblem {
  QapInstance instance;
  StConstruction st = StConstruction::lap_dual;
  Eigen::MatrixXd V;       ///< eigenvectors of A
  Eigen::VectorXd lambda;  ///< eigenvalues of A
  Eigen::MatrixXd U;       ///< eigenvectors of B
  Eigen::VectorXd omega;   ///< eigenvalues of B
  Eigen::VectorXd s;
  Eigen::VectorXd t;
  Eigen::MatrixXd S;
  Eigen::MatrixXd T;
  /// min_ij λ_i ω_j − s_i − t_j, the smallest eigenvalue of H.
  double psd_margin = 0.0;
  /// ‖H‖ from the spectrum of H.
  double norm_H = 0.0;
  /// ‖H‖ from power iteration, kept as a cross-check.
  double norm_H_power = 0.0;
  /// L = 2‖H‖.
  double L = 0.0;

  Eigen::Index n() const { return instance.n; }
  /// Eigenvalues λ_i ω_j − s_i − t_j of H, indexed (i, j).
  Eigen::MatrixXd spectrum() const;
  /// Scale used for the relative PSD tolerances.
  double scale() const;
};

QapProblem build_relaxation(const QapInstance& instance,
                            StConstruction st = StConstruction::lap_dual);

Point apply_H(const QapProblem& problem, const Point& X);
double objective(const QapProblem& problem, const Point& X);
Point objective_gradient(const QapProblem& problem, const Point& X);

/// Min-cost linear assignment with its optimal dual potentials.
struct LapSolution {
  std::vector<int> assignment;  ///< row i is matched to column assignment[i]
  Eigen::VectorXd row_dual;     ///< u with u_i + v_j ≤ c_ij
  Eigen::VectorXd col_dual;
  double cost = 0.0;
};

/// Hungarian method, O(n³). Ties are broken by lowest index.
LapSolution solve_lap(const Eigen::MatrixXd& cost);

struct PowerIteration {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Largest |eigenvalue| of the self-adjoint operator H by power iteration
/// from a seeded random start.
PowerIteration estimate_operator_norm(const QapProblem& problem, double tol = 1e-8,
                                      std::size_t max_iter = 5000, std::uint64_t seed = 0);

/// |f(G_Ω(X)) − F*| / |F*|, or the absolute gap when F* = 0.
double nfval(const QapProblem& problem, const Point& X, double F_star);

/// ⟨∇f(X), X − Y⟩ with Y the best permutation matrix for the linearization;
/// an upper bound on f(X) − min_Ω f for X ∈ Ω.
double frank_wolfe_gap(const QapProblem& problem, const Point& X);

/// Indicator of Ω = {X ≥ 0, Xe = e, Xᵀe = e} with feasibility tolerance.
double polytope_indicator(const Point& X, double tol = 1e-9);

/// Entropy kernel, P = indicator of Ω, 𝒳 = [0,1]^{n×n}, τ = 1, γ = 2.
ProblemDefinition make_problem_definition(const QapProblem& problem);

// ---------------------------------------------------------------------------
// Independent reference solution
// ---------------------------------------------------------------------------

/// Euclidean projection onto {Xe = e, Xᵀe = e}.
Point project_affine(const Point& Y);

/// Euclidean projection onto Ω by Dykstra's alternating projections between
/// the affine set and the nonnegative orthant. Throws NumericalError if the
/// sweep cap is reached.
Point project_polytope(const Point& Y, double tol = 1e-14, std::size_t max_sweeps = 100000,
                       std::size_t* sweeps_used = nullptr);

struct ReferenceOptions {
  double tol = 1e-11;  ///< projected-gradient residual
  std::size_t max_outer = 100000;
  std::size_t max_sweeps = 100000;
};

struct ReferenceSolution {
  Point x_star;
  double F_star = 0.0;
  double residual = 0.0;  ///< ‖X − Proj_Ω(X − ∇f(X)/L)‖_F
  double fw_gap = 0.0;    ///< rigorous bound on F(x_star) − min F
  std::size_t iterations = 0;
};

/// Accelerated projected gradient with adaptive restart. Uses none of the
/// Bregman or Sinkhorn machinery.
ReferenceSolution reference_solve(const QapProblem& problem, ReferenceOptions opts = {});

}  // namespace ibpg
