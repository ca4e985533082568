#include <cmath>
#include <numbers>

#include "mra_internal.hpp"
#include "mragp/errors.hpp"

namespace mragp {

DenseGpResult dense_gp_oracle(const std::vector<LonLat>& obs_loc, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& tau2, const std::vector<LonLat>& targets,
                              const std::function<double(const LonLat&, const LonLat&)>& kernel) {
  const auto n = static_cast<Eigen::Index>(obs_loc.size());
  if (n > 5000)
    throw ValidationError("dense oracle is limited to 5000 observations, got " +
                          std::to_string(n));
  if (y.size() != n || tau2.size() != n)
    throw ValidationError("dense oracle: observation vector lengths disagree");
  const auto p = static_cast<Eigen::Index>(targets.size());

  Eigen::MatrixXd S(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      double v = kernel(obs_loc[static_cast<std::size_t>(i)], obs_loc[static_cast<std::size_t>(j)]);
      S(i, j) = v;
      S(j, i) = v;
    }
    S(i, i) += tau2(i);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(S);
  if (n > 0 && ldlt.info() != Eigen::Success)
    throw NumericalError("dense oracle: observation covariance factorization failed");
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = ldlt.vectorD()(i);
    if (!(d > 0.0)) throw NumericalError("dense oracle: observation covariance not PD");
    log_det += std::log(d);
  }
  Eigen::VectorXd alpha = ldlt.solve(y);

  DenseGpResult out;
  out.loglik = -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_det +
                       y.dot(alpha));
  Eigen::MatrixXd cross(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j)
      cross(i, j) =
          kernel(obs_loc[static_cast<std::size_t>(i)], targets[static_cast<std::size_t>(j)]);
  Eigen::MatrixXd C_tt(p, p);
  for (Eigen::Index i = 0; i < p; ++i)
    for (Eigen::Index j = 0; j <= i; ++j) {
      double v =
          kernel(targets[static_cast<std::size_t>(i)], targets[static_cast<std::size_t>(j)]);
      C_tt(i, j) = v;
      C_tt(j, i) = v;
    }
  out.mean = cross.transpose() * alpha;
  out.cov = C_tt - cross.transpose() * ldlt.solve(cross);
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

}  // namespace mragp
