#pragma once

#include <Eigen/Dense>

#include "riswb/switches.hpp"

namespace riswb {

struct AssignmentResult {
  SwitchMatrix perm;  // perm.perm[j] = row assigned to column j
  double objective = 0.0;
};

// Exact maximization LAP: returns the permutation S maximizing
// sum over selected entries cost(i, j) with S(i, j) = 1, i.e.
// sum_j cost(perm[j], j). Shortest-augmenting-path (O(N^3)); among
// tied optima the lexicographically smallest perm array is returned.
AssignmentResult solve_lap_max(const Eigen::MatrixXd& cost);

}  // namespace riswb
