#include "mragp/lasso.hpp"

#include <cmath>

#include "mragp/errors.hpp"

namespace mragp {

namespace {
double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}
}  // namespace

LassoResult lasso_cd(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda,
                     int max_iter, double tol) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  if (n != y.size()) throw ValidationError("feature rows and response length differ");
  if (n == 0) throw ValidationError("empty regression input");
  if (!(lambda >= 0.0)) throw ValidationError("lambda must be nonnegative");

  Eigen::VectorXd mean = X.colwise().mean();
  Eigen::VectorXd sd(p);
  Eigen::MatrixXd Z(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd c = X.col(j).array() - mean(j);
    double s = std::sqrt(c.squaredNorm() / static_cast<double>(n));
    sd(j) = s;
    Z.col(j) = s > 1e-12 ? (c / s).eval() : Eigen::VectorXd::Zero(n);
  }
  double ybar = y.mean();
  Eigen::VectorXd r = y.array() - ybar;  // residual with all coefficients at zero

  LassoResult res;
  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);  // standardized scale
  const double inv_n = 1.0 / static_cast<double>(n);
  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    double max_delta = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (sd(j) <= 1e-12) continue;
      double rho = inv_n * Z.col(j).dot(r) + b(j);  // since z_j'z_j / n = 1
      double bj = soft_threshold(rho, lambda);
      double delta = bj - b(j);
      if (delta != 0.0) {
        r -= delta * Z.col(j);
        b(j) = bj;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (max_delta < tol) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }

  res.coef = Eigen::VectorXd::Zero(p);
  for (Eigen::Index j = 0; j < p; ++j)
    if (sd(j) > 1e-12 && b(j) != 0.0) res.coef(j) = b(j) / sd(j);
  res.intercept = ybar - res.coef.dot(mean);
  res.n_nonzero = static_cast<int>((res.coef.array() != 0.0).count());
  return res;
}

}  // namespace mragp
