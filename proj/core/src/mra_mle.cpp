#include <cmath>

#include "mra_internal.hpp"
#include "mragp/errors.hpp"
#include "mragp/log.hpp"
#include "mragp/optim.hpp"

namespace mragp {

MleResult stationary_mle_mra(const ObsList& obs, const RegionTree& tree,
                             const StationaryMaternParams& init, const MleOptions& opts) {
  init.validate();
  if (obs.empty()) throw ValidationError("cannot estimate parameters without observations");
  Eigen::VectorXd y(static_cast<Eigen::Index>(obs.size()));
  for (std::size_t i = 0; i < obs.size(); ++i) y(static_cast<Eigen::Index>(i)) = obs[i].value;
  double var_y = (y.array() - y.mean()).square().sum() / static_cast<double>(y.size());
  if (!(var_y > 0.0)) var_y = 1.0;

  const double tau2_floor = 1e-10 * var_y;
  Eigen::VectorXd x0(opts.fix_nu ? 3 : 4);
  x0(0) = std::log(init.sigma2);
  x0(1) = std::log(init.beta);
  x0(2) = std::log(std::max(init.tau2, tau2_floor));
  if (!opts.fix_nu) x0(3) = std::log(init.nu);

  auto unpack = [&](const Eigen::VectorXd& x) {
    StationaryMaternParams p;
    p.sigma2 = std::exp(x(0));
    p.beta = std::exp(x(1));
    p.tau2 = std::exp(x(2));
    p.nu = opts.fix_nu ? init.nu : std::exp(x(3));
    return p;
  };

  auto objective = [&](const Eigen::VectorXd& x) -> double {
    StationaryMaternParams p = unpack(x);
    // keep the simplex away from numerically hopeless corners
    if (p.sigma2 > 1e9 * var_y || p.beta > 1e6 || p.beta < 1e-4 || p.nu > 20.0)
      return std::numeric_limits<double>::infinity();
    KernelSpec spec;
    spec.kind = KernelKind::kStationaryMatern;
    spec.params = p;
    try {
      PriorQuantities prior = build_prior(tree, spec, opts.n_threads);
      PosteriorState st = posterior_pass(prior, y, false, opts.n_threads);
      return -st.loglik;
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  NelderMeadOptions nm;
  nm.max_iter = opts.max_iter;
  nm.ftol = 1e-7;
  nm.xtol = 1e-5;
  nm.init_step = 0.5;
  NelderMeadResult res = nelder_mead(objective, x0, nm);
  if (!res.converged)
    log_warn("stationary likelihood fit did not converge in " + std::to_string(res.iterations) +
             " iterations; returning the best iterate");

  MleResult out;
  out.params = unpack(res.x);
  out.loglik = -res.fval;
  out.converged = res.converged;
  out.iterations = res.iterations;
  out.evaluations = res.evaluations;
  return out;
}

}  // namespace mragp
