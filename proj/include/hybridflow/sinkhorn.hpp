#pragma once

#include <Eigen/Dense>

namespace hf {

// Alternating row/column normalization onto the doubly-stochastic polytope.
// Input must be elementwise positive for convergence; zero rows are left as-is.
inline void sinkhorn_project(Eigen::MatrixXd& x, int max_iters = 50,
                             double tol = 1e-6) {
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd rs = x.rowwise().sum();
    for (int i = 0; i < x.rows(); ++i)
      if (rs(i) > 0) x.row(i) /= rs(i);
    Eigen::VectorXd cs = x.colwise().sum();
    for (int j = 0; j < x.cols(); ++j)
      if (cs(j) > 0) x.col(j) /= cs(j);
    double err = (x.rowwise().sum().array() - 1.0).abs().maxCoeff();
    err = std::max(err, (x.colwise().sum().array() - 1.0).abs().maxCoeff());
    if (err < tol) break;
  }
}

}  // namespace hf
