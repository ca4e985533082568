#pragma once

#include <Eigen/Core>
#include <functional>

namespace mragp {

struct NelderMeadOptions {
  int max_iter = 1000;
  double ftol = 1e-9;      // spread of simplex values at convergence
  double xtol = 1e-7;      // simplex diameter at convergence
  double init_step = 0.5;  // per-coordinate offset of the initial simplex
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double fval = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Derivative-free simplex minimization (reflection 1, expansion 2,
// contraction 1/2, shrink 1/2). Non-finite objective values are treated as
// +inf so the simplex backs away from invalid regions.
NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opts = {});

}  // namespace mragp
