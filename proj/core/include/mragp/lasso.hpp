#pragma once

#include <Eigen/Core>

namespace mragp {

struct LassoResult {
  double intercept = 0.0;
  Eigen::VectorXd coef;  // on the original feature scale
  int n_nonzero = 0;
  int iterations = 0;
  bool converged = false;
};

// Minimizes (1/2n) ||y - b0 - X b||^2 + lambda ||b||_1 by cyclic coordinate
// descent on standardized features; the intercept is unpenalized. Constant
// columns get coefficient zero. Converged when the largest standardized
// coefficient update falls below tol.
LassoResult lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                     int max_iter = 100000, double tol = 1e-8);

}  // namespace mragp
