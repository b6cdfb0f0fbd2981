#pragma once

#include <vector>

namespace cuot {

struct AssignmentResult {
  std::vector<int> row_to_col;
  double total_cost = 0.0;
};

// Exact min-cost bipartite matching on a dense n x n cost matrix
// (row-major), via the Jonker-Volgenant shortest augmenting path algorithm.
AssignmentResult solve_assignment(const std::vector<double>& cost, int n);

}  // namespace cuot
