#include <limits>

#include "ibpg/errors.hpp"
#include "ibpg/qap.hpp"

namespace ibpg {

// Shortest augmenting path Hungarian method with row/column potentials.
LapSolution solve_lap(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (n == 0 || cost.cols() != n) throw ConfigError("lap: cost matrix must be square and nonempty");
  if (!cost.allFinite()) throw NumericalError("lap: non-finite cost");
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 == 0) throw NumericalError("lap: no augmenting path");
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  LapSolution sol;
  sol.assignment.assign(n, -1);
  sol.row_dual.resize(n);
  sol.col_dual.resize(n);
  for (int j = 1; j <= n; ++j) sol.assignment[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i) {
    sol.row_dual(i) = u[i + 1];
    sol.col_dual(i) = v[i + 1];
    sol.cost += cost(i, sol.assignment[i]);
  }
  return sol;
}

}  // namespace ibpg
