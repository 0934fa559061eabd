#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ibpg/bregman.hpp"
#include "ibpg/schedules.hpp"

namespace ibpg {

/// min F(x) = P(x) + f(x) over the closure of dom φ.
struct ProblemDefinition {
  std::function<double(const Point&)> f_value;
  std::function<Point(const Point&)> f_gradient;
  /// P, returning +∞ outside dom P.
  std::function<double(const Point&)> P_value;
  std::shared_ptr<const BregmanKernel> kernel;
  SmoothnessDescriptor smoothness;
  /// Maps an interior point to a companion in dom P ∩ dom φ (used for x̃⁰).
  std::function<Point(const Point&)> to_feasible;

  /// F at a point of dom P ∩ dom φ.
  double F(const Point& x) const { return P_value(x) + f_value(x); }
  SmoothObjective smooth_part() const { return {f_value, f_gradient}; }
};

/// One inexact subproblem
///   min P(x) + ⟨gradient, x⟩ + λ·D_φ(x, anchor).
struct SubproblemQuery {
  Point gradient;  ///< ∇f at x^k (iBPG) or y^k (v-iBPG)
  Point anchor;    ///< Bregman center x^k or z^k
  double lambda = 0.0;
  double mu_tol = 0.0;
  double eta_tol = 0.0;
  double nu_tol = 0.0;
  std::size_t outer_index = 0;
  /// Inner iterations the oracle may spend before giving up.
  std::uint64_t inner_budget = std::numeric_limits<std::uint64_t>::max();
};

/// Two-point witness of the inexact optimality condition.
struct InexactCertificate {
  Point interior_point;  ///< x^{k+1} (or z^{k+1}) ∈ int dom φ ∩ 𝒳
  Point feasible_point;  ///< x̃^{k+1} (or z̃^{k+1}) ∈ dom P ∩ dom φ
  double delta_norm = 0.0;
  double mu_measured = 0.0;  ///< D_φ(feasible_point, interior_point)
  double nu_claimed = 0.0;
  std::uint64_t inner_iterations = 0;
};

/// Approximate subproblem solver. One instance per run; not thread-safe.
class SubproblemOracle {
 public:
  virtual ~SubproblemOracle() = default;
  /// Throws OracleBudgetExceeded if the tolerance cannot be met within
  /// query.inner_budget iterations.
  virtual InexactCertificate solve(const SubproblemQuery& query) = 0;
};

struct Budget {
  std::size_t max_outer = std::numeric_limits<std::size_t>::max();
  std::uint64_t max_inner = 500000;
  double max_seconds = std::numeric_limits<double>::infinity();
};

enum class StopReason { outer_budget, inner_budget, wall_time };
std::string to_string(StopReason reason);
std::string to_string(SolverKind kind);

/// Reference point used to evaluate the convergence bounds on the fly.
struct BoundReference {
  Point x_ref;
  double F_ref = 0.0;
  /// Upper bound on F(x_ref) − F*; multiplies Σϑ in the inertial bound.
  double excess = 0.0;
};

struct RunOptions {
  Budget budget{};
  bool retain_iterates = false;
  /// Optional per-iteration quality metric evaluated at the reported point
  /// (x^{k+1} for iBPG, x^{k+1} for v-iBPG); stored as `nfval`.
  std::function<double(const Point&)> metric;
  std::optional<BoundReference> reference;
  /// Feasibility tolerance used when validating certificate points.
  double feasibility_tol = 1e-9;
  std::uint64_t seed = 0;
};

struct TraceRecord {
  std::size_t k = 0;
  double fval = 0.0;  ///< F(x̃^{k+1}) for iBPG, F(x^{k+1}) for v-iBPG
  double nfval = std::numeric_limits<double>::quiet_NaN();
  double eta_tol = 0.0;
  double mu_tol = 0.0;
  double nu_tol = 0.0;
  double mu_measured = 0.0;
  double delta_norm = 0.0;
  double nu_claimed = 0.0;
  std::uint64_t inner_iters = 0;
  std::uint64_t cum_inner_iters = 0;
  double theta = 1.0;
  double lambda = 0.0;
  double xi = std::numeric_limits<double>::quiet_NaN();  ///< iBPG descent slack ξ_k
  double bound_rhs_last = std::numeric_limits<double>::quiet_NaN();
  double bound_rhs_avg = std::numeric_limits<double>::quiet_NaN();
  double fval_avg = std::numeric_limits<double>::quiet_NaN();  ///< F of the averaged iterate (iBPG)
};

struct RunMetadata {
  SolverKind solver = SolverKind::ibpg;
  std::string kernel;
  double L = 0.0;
  double tau = 1.0;
  double gamma = 1.0;
  std::string theta_schedule;
  std::string tolerance_schedule;
  std::uint64_t seed = 0;
  Budget budget{};
};

/// Iterates kept when RunOptions::retain_iterates is set.
///
/// iBPG: interior[k] = x^k, feasible[k] = x̃^k (k = 0..K).
/// v-iBPG: interior[k] = z^k, feasible[k] = z̃^k (feasible[0] unused, equal
/// to x⁰), main[k] = x^k.
struct RetainedIterates {
  std::vector<Point> interior;
  std::vector<Point> feasible;
  std::vector<Point> main;
};

struct RunTrace {
  RunMetadata meta;
  std::vector<TraceRecord> records;
  RetainedIterates iterates;
  StopReason stop = StopReason::outer_budget;
  std::uint64_t cum_inner_iters = 0;
  /// Final reported point: x̃^K (iBPG) or x^K (v-iBPG).
  Point final_point;
  /// D_φ(x̃⁰, x⁰), playing the role of μ_{−1} in the descent slack.
  double initial_gap = 0.0;

  bool has_iterates() const { return !iterates.interior.empty(); }
};

/// Inexact Bregman proximal gradient method.
///
/// x0 must lie in int dom φ ∩ 𝒳; x̃⁰ defaults to problem.to_feasible(x0).
RunTrace ibpg_run(const ProblemDefinition& problem, SubproblemOracle& oracle,
                  const ToleranceSchedule& tolerances, const Point& x0, const RunOptions& options,
                  std::optional<Point> x0_feasible = std::nullopt);

/// Inertial variant. x0 ∈ dom P ∩ dom φ, z0 ∈ int dom φ ∩ 𝒳.
RunTrace vibpg_run(const ProblemDefinition& problem, SubproblemOracle& oracle,
                   const ThetaSchedule& theta, const ToleranceSchedule& tolerances, const Point& x0,
                   const Point& z0, const RunOptions& options);

// ---------------------------------------------------------------------------
// Bound verification
// ---------------------------------------------------------------------------

struct ResidualSeries {
  std::vector<double> residual;  ///< lhs − rhs per iteration
  std::vector<double> scale;
  double max_scaled = -std::numeric_limits<double>::infinity();  ///< max residual/scale
  std::size_t worst_k = 0;

  bool holds(double tol) const { return max_scaled <= tol; }
};

/// Per-iteration sufficient-descent inequality of the iBPG at x_ref, with
/// measured certificate values in place of the scheduled tolerances.
/// Requires retained iterates (ConfigError otherwise).
ResidualSeries check_descent_inequality(const RunTrace& trace, const ProblemDefinition& problem,
                                        const Point& x_ref);

/// F(x̃^{k+1}) − F(x̃^k) − ξ_k for every k (near-monotone descent).
ResidualSeries check_near_monotone(const RunTrace& trace, const ProblemDefinition& problem);

struct BoundReport {
  ResidualSeries averaged;  ///< averaged-iterate bound (iBPG only)
  ResidualSeries last;      ///< last-iterate bound
  ResidualSeries lyapunov;  ///< per-step Lyapunov inequality (v-iBPG only)
  double max_prefactor_sum = 0.0;
};

/// Both O(1/k) function-value bounds of the iBPG at x_star.
BoundReport check_ibpg_bounds(const RunTrace& trace, const ProblemDefinition& problem,
                              const Point& x_star, double F_star);

/// The v-iBPG function-value bound at x_star and the per-step Lyapunov
/// inequality. `excess` bounds F(x_star) − F* (0 at an exact minimizer).
BoundReport check_vibpg_bound(const RunTrace& trace, const ProblemDefinition& problem,
                              const ThetaSchedule& theta, const Point& x_star, double F_star,
                              double excess = 0.0);

/// (1/k) Σ_{i=1..k} x̃^i. Requires retained iterates and 1 ≤ k ≤ K.
Point averaged_iterate(const RunTrace& trace, std::size_t k);

/// Relative error of the gradient callback against central differences at
/// `point`, probing `directions` random unit directions.
double gradient_check(const ProblemDefinition& problem, const Point& point, std::size_t directions,
                      std::uint64_t seed, double step = 1e-6);

}  // namespace ibpg
