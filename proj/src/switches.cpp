#include "riswb/switches.hpp"

#include <numeric>

namespace riswb {

bool SwitchMatrix::is_identity() const {
  for (int j = 0; j < size(); ++j)
    if (perm[j] != j) return false;
  return true;
}

SwitchMatrix SwitchMatrix::identity(int n) {
  SwitchMatrix s;
  s.perm.resize(n);
  std::iota(s.perm.begin(), s.perm.end(), 0);
  return s;
}

Eigen::MatrixXd SwitchMatrix::dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(size(), size());
  for (int j = 0; j < size(); ++j) m(perm[j], j) = 1.0;
  return m;
}

Eigen::VectorXcd SwitchMatrix::apply_transpose(const Eigen::VectorXcd& g) const {
  if (g.size() != size())
    throw DimensionError("SwitchMatrix::apply_transpose: size mismatch");
  Eigen::VectorXcd out(size());
  for (int j = 0; j < size(); ++j) out[j] = g[perm[j]];
  return out;
}

SwitchMatrix validate_switch(std::vector<int> perm) {
  const int n = static_cast<int>(perm.size());
  std::vector<char> seen(n, 0);
  for (int j = 0; j < n; ++j) {
    const int r = perm[j];
    if (r < 0 || r >= n)
      throw ValidationError("switch permutation: entry at position " +
                            std::to_string(j) + " out of range");
    if (seen[r])
      throw ValidationError("switch permutation: row " + std::to_string(r) +
                            " reused at position " + std::to_string(j));
    seen[r] = 1;
  }
  SwitchMatrix s;
  s.perm = std::move(perm);
  return s;
}

}  // namespace riswb
