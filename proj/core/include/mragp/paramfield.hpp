#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mragp/covariance.hpp"
#include "mragp/geo.hpp"
#include "mragp/obs.hpp"

namespace mragp {

// Configuration of the moving-window local fits. Each grid point gets a
// short-range box B1 and a strictly larger box B2 centered on it; the fit
// sees up to n_short points from B1 and up to n_long from the annulus
// B2 minus B1.
struct LocalFitConfig {
  double grid_step_deg = 2.0;
  double b1_half_width_deg = 5.0;
  double b2_half_width_deg = 15.0;
  std::size_t n_short = 800;
  std::size_t n_long = 100;
  std::size_t min_obs_short = 800;  // fewer B1 observations than this skips the point
  std::uint64_t seed = 0;

  void validate() const;
};

enum class FitStatus { kOk, kSkipped, kFailed };

std::string to_string(FitStatus s);
FitStatus fit_status_from_string(const std::string& s);

struct LocalEstimate {
  LonLat at;
  StationaryMaternParams params;
  double loglik = 0.0;
  std::size_t n_short = 0;
  std::size_t n_long = 0;
  FitStatus status = FitStatus::kSkipped;
};

// A local design drawn around one grid point. restart_seed carries the
// point's random stream forward into the optimizer restarts so concurrent
// grid evaluation stays schedule-independent.
struct LocalSample {
  LonLat center;
  ObsList short_range;
  ObsList long_range;
  std::size_t n_b1_available = 0;  // B1 population before subsampling
  std::uint64_t restart_seed = 0;
};

// Uniform subsamples without replacement: up to cfg.n_short from B1(center),
// up to cfg.n_long from B2(center) minus B1(center). Candidates are ordered
// by content before the draw, so the result is invariant to observation
// order. Deterministic given seed.
LocalSample sample_local_design(const LonLat& center, const ObsList& obs,
                                const LocalFitConfig& cfg, std::uint64_t seed);

// Stationary maximum likelihood on the pooled sample. The partial sill is
// profiled out analytically; the simplex runs on log range and log
// noise-to-signal ratio (plus log smoothness when fixed_nu is empty) with
// three random restarts. Fewer than 30 pooled points yields status skipped;
// exhausted restarts without convergence yield status failed with the best
// iterate recorded. Exactly duplicated locations are rejected before
// optimization.
LocalEstimate fit_local_matern(const LocalSample& sample,
                               std::optional<double> fixed_nu = 0.5);

// One estimate per ocean grid point of the step-cfg.grid_step_deg lattice
// over the observations' bounding box. Points run concurrently on per-point
// substreams of cfg.seed, so results do not depend on evaluation order.
std::vector<LocalEstimate> local_estimate_grid(const ObsList& obs, const LocalFitConfig& cfg,
                                               const OceanMask& mask,
                                               std::optional<double> fixed_nu = 0.5,
                                               int n_threads = 0);

// Spatially varying parameters: independent log-scale basis expansions over
// one shared set of compactly supported bump functions. Evaluation
// exponentiates, so every component is positive everywhere.
class ParamField : public ThetaField {
 public:
  ParamField() = default;
  ParamField(std::vector<LonLat> centers, double ell_km, Eigen::Vector3d intercepts,
             Eigen::MatrixXd coefs, double nu);

  LocalParams theta_at(const LonLat& p) const override;

  const std::vector<LonLat>& centers() const { return centers_; }
  double ell_km() const { return ell_km_; }
  const Eigen::Vector3d& intercepts() const { return intercepts_; }
  // column 0: log sigma2, column 1: log beta, column 2: log tau2
  const Eigen::MatrixXd& coefs() const { return coefs_; }
  double nu() const { return nu_; }

 private:
  std::vector<LonLat> centers_;
  double ell_km_ = 1.0;
  Eigen::Vector3d intercepts_ = Eigen::Vector3d::Zero();
  Eigen::MatrixXd coefs_;  // centers x 3, parameter order as above
  double nu_ = 0.5;
};

LocalParams eval_theta(const ParamField& field, const LonLat& s);

// L1-penalized regression of the stacked log estimates (usable rows only,
// several days may be concatenated) on the bump basis, one fit per
// parameter. A penalty strong enough to zero every coefficient leaves an
// intercept-only field and logs a warning. The field's smoothness is the
// median of the estimates' fitted values.
ParamField smooth_field(const std::vector<LocalEstimate>& estimates,
                        const std::vector<LonLat>& centers, double ell_km, double lasso_lambda,
                        int n_threads = 0);

struct SmoothingChoice {
  double center_spacing_km = 0.0;
  double ell_km = 0.0;
  double lambda = 0.0;
  double mspe = 0.0;
};

struct SmoothingCvResult {
  SmoothingChoice best;
  std::vector<SmoothingChoice> table;  // every candidate triple, input order
};

// K-fold cross-validation over the usable estimates on the log scale. Center
// sets are built per spacing candidate from a near-uniform mesh over the
// estimates' bounding box. MSPE sums the three parameters' squared
// prediction errors; ties break to the earlier candidate. Fold assignment is
// a seeded shuffle of a content-sorted index, so the result does not depend
// on estimate ordering.
SmoothingCvResult select_smoothing_cv(const std::vector<LocalEstimate>& estimates,
                                      const std::vector<double>& center_spacings_km,
                                      const std::vector<double>& ells_km,
                                      const std::vector<double>& lambdas, int folds,
                                      std::uint64_t seed);

// Columnar text table, one row per grid point:
//   lon lat sigma2 beta nu tau2 loglik n_short n_long status
void write_local_estimates(const std::vector<LocalEstimate>& estimates, const std::string& path);
std::vector<LocalEstimate> read_local_estimates(const std::string& path);

// Versioned text format: centers, support length, intercepts, sparse
// (index, coefficient) pairs per parameter, and the fixed smoothness.
void save_param_field(const ParamField& field, const std::string& path);
ParamField load_param_field(const std::string& path);

}  // namespace mragp
