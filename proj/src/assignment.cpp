#include "riswb/assignment.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace riswb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Column-side Kuhn augmentation over the tight-edge graph. Rows matched to
// columns <= fixed_limit are pinned and can never be reassigned.
struct TightMatcher {
  const std::vector<std::vector<int>>& rows_of_col;
  std::vector<int>& match_row;  // row -> column (-1 free)
  std::vector<int>& match_col;  // column -> row (-1 free)
  std::vector<char> visited_row;
  int fixed_limit = -1;

  bool augment(int col) {
    for (int r : rows_of_col[col]) {
      if (visited_row[r]) continue;
      visited_row[r] = 1;
      const int owner = match_row[r];
      if (owner < 0 || (owner > fixed_limit && augment(owner))) {
        match_row[r] = col;
        match_col[col] = r;
        return true;
      }
    }
    return false;
  }
};

}  // namespace

AssignmentResult solve_lap_max(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols())
    throw ValidationError("solve_lap_max: cost matrix must be square");
  const int n = static_cast<int>(cost.rows());
  if (n == 0) throw ValidationError("solve_lap_max: empty cost matrix");
  if (!cost.allFinite())
    throw ValidationError("solve_lap_max: cost matrix has non-finite entries");

  // Minimization on the negated cost, shortest augmenting path with dual
  // potentials (u over rows, v over columns). 1-based arrays, p[j] = row
  // assigned to column j.
  Eigen::MatrixXd a = -cost;
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = kInf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
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
    } while (j0 != 0);
  }

  double best = 0.0;
  for (int j = 1; j <= n; ++j) best += cost(p[j] - 1, j - 1);

  // Canonicalize ties: every optimal assignment uses only edges with zero
  // reduced cost under the optimal duals (complementary slackness), and any
  // perfect matching of such edges attains the optimum. Pick the
  // lexicographically smallest perm by fixing columns left to right and
  // checking a perfect matching still exists on the remaining columns.
  double scale = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
  const double tol = 1e-9 * scale;

  std::vector<std::vector<int>> rows_of_col(n);  // tight rows per column, ascending
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      if (std::abs(a(i, j) - u[i + 1] - v[j + 1]) <= tol)
        rows_of_col[j].push_back(i);

  std::vector<int> perm(n, -1);
  bool refined = true;
  for (int j = 0; j < n && refined; ++j) {
    refined = false;
    for (int i : rows_of_col[j]) {
      bool taken = false;
      for (int jj = 0; jj < j; ++jj) taken |= (perm[jj] == i);
      if (taken) continue;
      // Tentative matching state: columns 0..j pinned, the rest rebuilt.
      std::vector<int> match_row(n, -1), match_col(n, -1);
      for (int jj = 0; jj < j; ++jj) {
        match_col[jj] = perm[jj];
        match_row[perm[jj]] = jj;
      }
      match_col[j] = i;
      match_row[i] = j;
      TightMatcher m{rows_of_col, match_row, match_col, {}, j};
      bool ok = true;
      for (int c = j + 1; c < n && ok; ++c) {
        m.visited_row.assign(n, 0);
        ok = m.augment(c);
      }
      if (ok) {
        perm[j] = i;
        refined = true;
        break;
      }
    }
  }
  if (!refined)  // cannot happen on an exact tight graph; keep the JV answer
    for (int j = 0; j < n; ++j) perm[j] = p[j + 1] - 1;

  AssignmentResult res;
  res.perm = validate_switch(perm);
  res.objective = best;
  return res;
}

}  // namespace riswb
