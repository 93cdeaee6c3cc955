#pragma once

#include <Eigen/Dense>
#include <vector>

#include "riswb/common.hpp"

namespace riswb {

// Binary permutation S of the BD-RIS switch network.
// perm[j] is the row index of the single 1 in column j: S(perm[j], j) = 1.
struct SwitchMatrix {
  std::vector<int> perm;

  int size() const { return static_cast<int>(perm.size()); }
  bool is_identity() const;
  static SwitchMatrix identity(int n);

  Eigen::MatrixXd dense() const;

  // (S^T g)[j] = g[perm[j]]
  Eigen::VectorXcd apply_transpose(const Eigen::VectorXcd& g) const;
};

// Accepts iff perm is a permutation of 0..N-1; error messages name the
// offending position.
SwitchMatrix validate_switch(std::vector<int> perm);

}  // namespace riswb
