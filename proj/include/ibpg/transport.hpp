#pragma once

#include <cstdint>
#include <optional>

#include "ibpg/solvers.hpp"

namespace ibpg {

/// Entropic transport problem
///   min ⟨M, X⟩ + ε Σ x(log x − 1)  s.t.  Xe = e, Xᵀe = e,
/// stored through the log-domain Gibbs matrix log Ξ = −M/ε.
struct TransportSubproblem {
  Eigen::MatrixXd log_xi;
  double epsilon = 1.0;

  Eigen::Index n() const { return log_xi.rows(); }

  /// From the subproblem min ⟨C, X⟩ + ε D_φ(X, S): M = C − ε log S, so
  /// log Ξ = −C/ε + log S. Entries of S are clamped below at `anchor_floor`.
  static TransportSubproblem from_linearization(const Point& C, const Point& S, double epsilon,
                                                double anchor_floor = 1e-300);
  /// From an explicit cost matrix M.
  static TransportSubproblem from_cost(const Eigen::MatrixXd& M, double epsilon);
};

/// Dual scalings (log u, log v) and the number of completed full steps.
struct ScalingState {
  Eigen::VectorXd log_u;
  Eigen::VectorXd log_v;
  std::uint64_t t = 0;

  /// v = e, u = e (the u entries are overwritten by the first step).
  static ScalingState cold(Eigen::Index n);
};

/// Row update u = e ./ (Ξ v) in log domain.
void sinkhorn_update_u(const TransportSubproblem& sub, ScalingState& state);
/// Column update v = e ./ (Ξᵀ u) in log domain.
void sinkhorn_update_v(const TransportSubproblem& sub, ScalingState& state);

/// One full Sinkhorn iteration (u then v) via max-shifted log-sum-exp.
/// Throws NumericalError if the state contains NaN.
ScalingState sinkhorn_step(const TransportSubproblem& sub, ScalingState state);

/// X = Diag(u) Ξ Diag(v).
Point assemble_plan(const TransportSubproblem& sub, const ScalingState& state);

/// Plain-exponential Sinkhorn on Ξ = exp(log Ξ) starting from v = e,
/// returning the plan after `steps` full iterations. Overflows for small ε;
/// kept only as an independent check of the log-domain path.
Point sinkhorn_direct(const TransportSubproblem& sub, std::uint64_t steps);

/// Rounding onto Ω = {X ≥ 0, Xe = e, Xᵀe = e}: cap rows at 1, cap columns
/// at 1, then add the rank-one correction err_r err_cᵀ / ‖err_r‖₁.
/// Zero entries are accepted; negative or non-finite entries throw DomainError.
Point round_to_polytope(const Point& X);

/// Max row/column marginal violation max(|Xe − e|∞, |Xᵀe − e|∞).
double marginal_violation(const Point& X);

struct SinkhornOptions {
  /// Certificate evaluation cadence, in full Sinkhorn steps.
  std::uint64_t check_every = 10;
  /// Reuse the previous call's log v instead of v = e.
  bool warm_start = false;
  double anchor_floor = 1e-300;
};

/// Inexact subproblem oracle for the entropy kernel with P = δ_{Ω°}.
///
/// Certificates carry X (interior) and G_Ω(X) (feasible) with Δ = 0 and ν = 0;
/// the optimality residual vanishes because log X − log Ξ is a sum of a row
/// and a column vector.
class SinkhornOracle final : public SubproblemOracle {
 public:
  explicit SinkhornOracle(SinkhornOptions opts = {}) : opts_(opts) {}

  InexactCertificate solve(const SubproblemQuery& query) override;

  /// Scaling state at the end of the last successful solve.
  const std::optional<ScalingState>& last_state() const { return last_; }
  const SinkhornOptions& options() const { return opts_; }

 private:
  SinkhornOptions opts_;
  std::optional<ScalingState> last_;
};

/// Residual of the additive structure of C + ε(log X − log S): after
/// removing the best row-plus-column fit, the max absolute entry.
double subgradient_residual(const Point& C, const Point& S, const Point& X, double epsilon);

}  // namespace ibpg
