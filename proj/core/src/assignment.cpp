#include "cuot/assignment.hpp"

#include <limits>
#include <stdexcept>

namespace cuot {

// Hungarian algorithm in the shortest-augmenting-path formulation with dual
// potentials (u on rows, v on columns). Exact for real-valued costs; O(n^3)
// with contiguous inner loops over columns.
AssignmentResult solve_assignment(const std::vector<double>& cost, int n) {
  if (n <= 0) throw std::invalid_argument("solve_assignment: n must be > 0");
  if (cost.size() != static_cast<size_t>(n) * static_cast<size_t>(n))
    throw std::invalid_argument("solve_assignment: cost matrix size mismatch");

  const double kInf = std::numeric_limits<double>::infinity();
  // 1-based; p[j] = row matched to column j, column 0 is the virtual start.
  std::vector<double> u(static_cast<size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<size_t>(n) + 1, 0.0);
  std::vector<int> p(static_cast<size_t>(n) + 1, 0);
  std::vector<int> way(static_cast<size_t>(n) + 1, 0);
  std::vector<double> minv(static_cast<size_t>(n) + 1, 0.0);
  std::vector<char> used(static_cast<size_t>(n) + 1, 0);

  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      const double* row = cost.data() + static_cast<size_t>(i0 - 1) * n;
      const double ui = u[i0];
      double delta = kInf;
      int j1 = -1;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - ui - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
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
    } while (j0);
  }

  AssignmentResult res;
  res.row_to_col.assign(n, -1);
  for (int j = 1; j <= n; ++j) res.row_to_col[p[j] - 1] = j - 1;
  for (int i = 0; i < n; ++i)
    res.total_cost += cost[static_cast<size_t>(i) * n + res.row_to_col[i]];
  return res;
}

}  // namespace cuot
