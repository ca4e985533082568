#pragma once

#include <Eigen/Core>
#include <vector>

#include "mragp/geo.hpp"

namespace mragp {

struct StationaryMaternParams {
  double sigma2 = 1.0;  // partial sill, K^2
  double beta = 1.0;    // range, km
  double nu = 0.5;      // smoothness
  double tau2 = 0.0;    // nugget, K^2

  void validate() const;
};

// Parameters of the locally fitted model evaluated at one location. nu is a
// single global constant shared by every location.
struct LocalParams {
  double sigma2 = 1.0;
  double beta = 1.0;
  double tau2 = 0.0;
  double nu = 0.5;
};

// Source of location-dependent parameters for the nonstationary kernels.
class ThetaField {
 public:
  virtual ~ThetaField() = default;
  virtual LocalParams theta_at(const LonLat& p) const = 0;
};

enum class KernelKind {
  kStationaryMatern,
  kStationaryExponential,
  kNonstationaryExponential,
  kNonstationaryMatern,
};

struct KernelSpec {
  KernelKind kind = KernelKind::kStationaryExponential;
  StationaryMaternParams params;      // stationary kinds
  const ThetaField* field = nullptr;  // nonstationary kinds
  bool include_nugget = true;
};

// Matern correlation as a function of the prescaled argument
// x = sqrt(2 nu) h / beta; equals 1 at x = 0. Half-integer nu short-circuits
// to the closed forms, other nu goes through the Bessel function.
double matern_correlation(double x, double nu);

// sigma2 * M_nu(h / beta), plus tau2 iff same_location.
double matern(double h_km, const StationaryMaternParams& p, bool same_location);

// Nonstationary kernel between embedded points s and t with local parameters
// ps and pt. For each pair the kernel is
//   sigma(s) sigma(t) (2 b_s b_t / (b_s^2+b_t^2))^{3/2} rho_nu(arg) + tau2(s) 1{s=t},
// arg = 2 sqrt(nu) ||s-t|| / sqrt(b_s^2 + b_t^2); at nu = 1/2 the correlation
// is exp(-||s-t|| / sqrt((b_s^2+b_t^2)/2)). Coincidence s = t means exact
// coordinate equality; duplicate observations are merged upstream.
double nonstationary_cov(const Point3& s, const Point3& t, const LocalParams& ps,
                         const LocalParams& pt, bool include_nugget = true);

// Compactly supported Wendland weight, (1/3)(1-d/l)^6 (35(d/l)^2+18(d/l)+3)
// for d < l, zero beyond.
double wendland(double d_km, double ell_km);

// Local parameters for each site under `spec` (constant for stationary kinds).
std::vector<LocalParams> resolve_params(const std::vector<Site>& sites, const KernelSpec& spec);

double kernel_value(const Site& a, const LocalParams& pa, const Site& b, const LocalParams& pb,
                    const KernelSpec& spec);

// Dense cross-covariance; entry (i, j) pairs rows[i] with cols[j]. Exactly
// coincident pairs gain tau2 when spec.include_nugget is set.
Eigen::MatrixXd cov_matrix(const std::vector<Site>& rows, const std::vector<Site>& cols,
                           const KernelSpec& spec);
Eigen::MatrixXd cov_matrix_resolved(const std::vector<Site>& rows,
                                    const std::vector<LocalParams>& row_params,
                                    const std::vector<Site>& cols,
                                    const std::vector<LocalParams>& col_params,
                                    const KernelSpec& spec);

}  // namespace mragp
