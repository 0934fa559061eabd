#pragma once

#include "ibpg/solvers.hpp"

namespace ibpg {

/// Euclidean projection onto the probability simplex {x ≥ 0, Σx = 1},
/// computed by bisection on the shift τ in Σ max(v − τ, 0) = 1.
Point project_simplex(const Point& v);

/// Indicator of the probability simplex with feasibility tolerance `tol`.
double simplex_indicator(const Point& x, double tol = 1e-9);

/// Exact oracle for the quadratic kernel with P the simplex indicator:
/// the subproblem solution is proj(anchor − gradient/λ), returned as both
/// points of the certificate with zero errors.
class SimplexProjectionOracle final : public SubproblemOracle {
 public:
  InexactCertificate solve(const SubproblemQuery& query) override;
};

}  // namespace ibpg
