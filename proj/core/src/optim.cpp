#include "mragp/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace mragp {

namespace {
double guarded(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
               int& evals) {
  ++evals;
  double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}
}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                             const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
  const int n = static_cast<int>(x0.size());
  NelderMeadResult res;
  std::vector<Eigen::VectorXd> simplex(static_cast<std::size_t>(n) + 1, x0);
  std::vector<double> fv(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i < n; ++i) simplex[static_cast<std::size_t>(i) + 1](i) += opts.init_step;
  for (std::size_t i = 0; i < simplex.size(); ++i) fv[i] = guarded(f, simplex[i], res.evaluations);

  std::vector<int> order(simplex.size());
  auto sort_simplex = [&]() {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return fv[static_cast<std::size_t>(a)] <
                                                fv[static_cast<std::size_t>(b)]; });
    std::vector<Eigen::VectorXd> s2(simplex.size());
    std::vector<double> f2(fv.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      s2[i] = simplex[static_cast<std::size_t>(order[i])];
      f2[i] = fv[static_cast<std::size_t>(order[i])];
    }
    simplex.swap(s2);
    fv.swap(f2);
  };
  sort_simplex();

  for (res.iterations = 0; res.iterations < opts.max_iter; ++res.iterations) {
    double spread = fv.back() - fv.front();
    double diam = 0.0;
    for (std::size_t i = 1; i < simplex.size(); ++i)
      diam = std::max(diam, (simplex[i] - simplex[0]).cwiseAbs().maxCoeff());
    if (spread < opts.ftol && diam < opts.xtol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    Eigen::VectorXd xr = centroid + (centroid - simplex.back());
    double fr = guarded(f, xr, res.evaluations);
    if (fr < fv.front()) {
      Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex.back());
      double fe = guarded(f, xe, res.evaluations);
      if (fe < fr) {
        simplex.back() = xe;
        fv.back() = fe;
      } else {
        simplex.back() = xr;
        fv.back() = fr;
      }
    } else if (fr < fv[fv.size() - 2]) {
      simplex.back() = xr;
      fv.back() = fr;
    } else {
      bool outside = fr < fv.back();
      Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                   : Eigen::VectorXd(centroid - 0.5 * (centroid - simplex.back()));
      double fc = guarded(f, xc, res.evaluations);
      if (fc < std::min(fr, fv.back())) {
        simplex.back() = xc;
        fv.back() = fc;
      } else {
        for (std::size_t i = 1; i < simplex.size(); ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          fv[i] = guarded(f, simplex[i], res.evaluations);
        }
      }
    }
    sort_simplex();
  }

  res.x = simplex.front();
  res.fval = fv.front();
  return res;
}

}  // namespace mragp
