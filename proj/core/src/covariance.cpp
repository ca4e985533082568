#include "mragp/covariance.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "mragp/errors.hpp"
#include "mragp/parallel.hpp"

namespace mragp {

void StationaryMaternParams::validate() const {
  if (!(sigma2 > 0.0)) throw ValidationError("sigma2 must be positive");
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (!(nu > 0.0)) throw ValidationError("nu must be positive");
  if (!(tau2 >= 0.0)) throw ValidationError("tau2 must be nonnegative");
}

double matern_correlation(double x, double nu) {
  if (!(x >= 0.0)) throw ValidationError("matern argument must be nonnegative and finite");
  if (x < 1e-12) return 1.0;
  if (nu == 0.5) return std::exp(-x);
  if (nu == 1.5) return (1.0 + x) * std::exp(-x);
  if (nu == 2.5) return (1.0 + x + x * x / 3.0) * std::exp(-x);
  // 2^{1-nu}/Gamma(nu) x^nu K_nu(x); underflows cleanly to 0 for large x.
  double k = std::cyl_bessel_k(nu, x);
  if (k == 0.0) return 0.0;
  double log_val = (1.0 - nu) * std::numbers::ln2 - std::lgamma(nu) + nu * std::log(x);
  return std::exp(log_val) * k;
}

double matern(double h_km, const StationaryMaternParams& p, bool same_location) {
  if (!std::isfinite(h_km) || h_km < 0.0)
    throw ValidationError("distance must be finite and nonnegative");
  p.validate();
  double x = std::sqrt(2.0 * p.nu) * h_km / p.beta;
  double v = p.sigma2 * matern_correlation(x, p.nu);
  if (same_location) v += p.tau2;
  return v;
}

double nonstationary_cov(const Point3& s, const Point3& t, const LocalParams& ps,
                         const LocalParams& pt, bool include_nugget) {
  if (!(ps.beta > 0.0) || !(pt.beta > 0.0)) throw ValidationError("beta must be positive");
  if (!(ps.sigma2 > 0.0) || !(pt.sigma2 > 0.0)) throw ValidationError("sigma2 must be positive");
  if (ps.nu != pt.nu) throw ValidationError("nu must be the same global constant at s and t");
  double b2 = ps.beta * ps.beta + pt.beta * pt.beta;
  double pref = std::pow(2.0 * ps.beta * pt.beta / b2, 1.5);
  double h = distance3(s, t);
  double arg = 2.0 * std::sqrt(ps.nu) * h / std::sqrt(b2);
  double v = std::sqrt(ps.sigma2 * pt.sigma2) * pref * matern_correlation(arg, ps.nu);
  bool same = s.x == t.x && s.y == t.y && s.z == t.z;
  if (same && include_nugget) v += ps.tau2;
  return v;
}

double wendland(double d_km, double ell_km) {
  if (!(ell_km > 0.0)) throw ValidationError("support length must be positive");
  if (d_km < 0.0) throw ValidationError("distance must be nonnegative");
  double r = d_km / ell_km;
  if (r >= 1.0) return 0.0;
  double u = 1.0 - r;
  double u2 = u * u;
  double u6 = u2 * u2 * u2;
  return u6 * (35.0 * r * r + 18.0 * r + 3.0) / 3.0;
}

std::vector<LocalParams> resolve_params(const std::vector<Site>& sites, const KernelSpec& spec) {
  std::vector<LocalParams> out(sites.size());
  switch (spec.kind) {
    case KernelKind::kStationaryMatern:
    case KernelKind::kStationaryExponential: {
      spec.params.validate();
      LocalParams p;
      p.sigma2 = spec.params.sigma2;
      p.beta = spec.params.beta;
      p.tau2 = spec.params.tau2;
      p.nu = spec.kind == KernelKind::kStationaryExponential ? 0.5 : spec.params.nu;
      for (auto& o : out) o = p;
      break;
    }
    case KernelKind::kNonstationaryExponential:
    case KernelKind::kNonstationaryMatern: {
      if (spec.field == nullptr)
        throw ValidationError("nonstationary kernel requires a parameter field");
      for (std::size_t i = 0; i < sites.size(); ++i) {
        try {
          out[i] = spec.field->theta_at(sites[i].ll);
        } catch (const std::exception& e) {
          throw ValidationError("parameter field failed at lon=" +
                                std::to_string(sites[i].ll.lon) + " lat=" +
                                std::to_string(sites[i].ll.lat) + ": " + e.what());
        }
        if (spec.kind == KernelKind::kNonstationaryExponential) out[i].nu = 0.5;
      }
      break;
    }
  }
  return out;
}

double kernel_value(const Site& a, const LocalParams& pa, const Site& b, const LocalParams& pb,
                    const KernelSpec& spec) {
  return nonstationary_cov(a.p, b.p, pa, pb, spec.include_nugget);
}

Eigen::MatrixXd cov_matrix_resolved(const std::vector<Site>& rows,
                                    const std::vector<LocalParams>& row_params,
                                    const std::vector<Site>& cols,
                                    const std::vector<LocalParams>& col_params,
                                    const KernelSpec& spec) {
  if (rows.size() != row_params.size() || cols.size() != col_params.size())
    throw ValidationError("sites and resolved parameters differ in length");
  const auto nr = static_cast<Eigen::Index>(rows.size());
  const auto nc = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd m(nr, nc);
  auto fill_row = [&](std::size_t i) {
    const Site& a = rows[i];
    const LocalParams& pa = row_params[i];
    for (Eigen::Index j = 0; j < nc; ++j) {
      m(static_cast<Eigen::Index>(i), j) = kernel_value(a, pa, cols[static_cast<std::size_t>(j)],
                                                        col_params[static_cast<std::size_t>(j)],
                                                        spec);
    }
  };
  if (static_cast<std::size_t>(nr) * static_cast<std::size_t>(nc) >= 1u << 16) {
    parallel_for(static_cast<std::size_t>(nr), fill_row);
  } else {
    for (std::size_t i = 0; i < static_cast<std::size_t>(nr); ++i) fill_row(i);
  }
  return m;
}

Eigen::MatrixXd cov_matrix(const std::vector<Site>& rows, const std::vector<Site>& cols,
                           const KernelSpec& spec) {
  auto rp = resolve_params(rows, spec);
  if (&rows == &cols) return cov_matrix_resolved(rows, rp, cols, rp, spec);
  auto cp = resolve_params(cols, spec);
  return cov_matrix_resolved(rows, rp, cols, cp, spec);
}

}  // namespace mragp
