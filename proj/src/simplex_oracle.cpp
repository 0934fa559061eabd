#include "ibpg/simplex_oracle.hpp"

#include <cmath>
#include <limits>

#include "ibpg/errors.hpp"

namespace ibpg {

Point project_simplex(const Point& v) {
  require_finite(v, "simplex projection input");
  auto excess = [&](double shift) { return (v.array() - shift).cwiseMax(0.0).sum() - 1.0; };
  double lo = v.minCoeff() - 1.0;  // excess(lo) ≥ n − 1 ≥ 0
  double hi = v.maxCoeff();        // excess(hi) = −1
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  Point x = (v.array() - 0.5 * (lo + hi)).cwiseMax(0.0).matrix();
  return x / x.sum();
}

double simplex_indicator(const Point& x, double tol) {
  if (!x.allFinite() || (x.array() < -tol).any() || std::abs(x.sum() - 1.0) > tol) {
    return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

InexactCertificate SimplexProjectionOracle::solve(const SubproblemQuery& query) {
  if (!(query.lambda > 0.0)) throw ConfigError("simplex oracle: lambda must be positive");
  InexactCertificate cert;
  cert.interior_point = project_simplex(query.anchor - query.gradient / query.lambda);
  cert.feasible_point = cert.interior_point;
  cert.inner_iterations = 1;
  return cert;
}

}  // namespace ibpg
