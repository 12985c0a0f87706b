#pragma once

#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace hf {

// Maximum-weight perfect assignment on a square weight matrix, O(n^3)
// shortest-augmenting-path form with row/column potentials.
// Returns col[i] = column assigned to row i.
inline std::vector<int> max_weight_assignment(const Eigen::MatrixXd& w) {
  const int n = static_cast<int>(w.rows());
  const double inf = std::numeric_limits<double>::infinity();
  // Minimization on negated weights; row-major copy keeps the inner scan
  // over columns contiguous.
  std::vector<double> cost(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost[static_cast<size_t>(i) * n + j] = -w(i, j);
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<int> used;          // visited columns, including the virtual 0
    std::vector<int> free_cols(n);  // columns not yet in the alternating tree
    for (int j = 0; j < n; ++j) free_cols[j] = j + 1;
    do {
      used.push_back(j0);
      int i0 = p[j0];
      int j1_pos = -1;
      double delta = inf;
      const double* row = cost.data() + static_cast<size_t>(i0 - 1) * n;
      const double shift = u[i0];
      for (size_t pos = 0; pos < free_cols.size(); ++pos) {
        int j = free_cols[pos];
        double cur = row[j - 1] - shift - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1_pos = static_cast<int>(pos);
        }
      }
      for (int j : used) {
        u[p[j]] += delta;
        v[j] -= delta;
      }
      for (int j : free_cols) minv[j] -= delta;
      j0 = free_cols[j1_pos];
      free_cols[j1_pos] = free_cols.back();
      free_cols.pop_back();
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) col[p[j] - 1] = j - 1;
  return col;
}

}  // namespace hf
