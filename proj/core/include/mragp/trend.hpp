#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "mragp/obs.hpp"

namespace mragp {

// Clamped uniform cubic B-spline basis with k functions on [lo, hi].
// Contains all cubics, so constants and linears are reproduced exactly.
class CubicSplineBasis {
 public:
  CubicSplineBasis(double lo, double hi, int k);
  int size() const { return k_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::vector<double>& knots() const { return knots_; }
  // Basis values at t; t is clamped into [lo, hi].
  Eigen::VectorXd row(double t) const;

 private:
  int k_;
  double lo_;
  double hi_;
  std::vector<double> knots_;  // length k + 4, 4-fold end knots
};

struct LatBinSummary {
  int n_bins = 0;
  double lat_lo = -90.0;
  double lat_hi = 90.0;
  std::vector<double> center;
  std::vector<double> mean;       // valid where count > 0
  std::vector<long long> count;
};

struct TrendCvRow {
  int k = 0;
  int fold = 0;
  double mse = 0.0;
  long long n_test = 0;
  long long n_clamped = 0;  // held-out points outside the fold's fitted span
};

struct TrendModel {
  int k = 0;
  double dom_lo = 0.0;  // span of nonempty bin centers used in the fit
  double dom_hi = 0.0;
  std::vector<double> knots;
  Eigen::VectorXd coef;
  std::vector<TrendCvRow> cv_table;

  // mu(lat); latitudes outside [dom_lo, dom_hi] evaluate at the nearest
  // domain endpoint so every latitude in [-90, 90] gets a finite value.
  double mu(double lat_deg) const;
};

// Arithmetic per-bin means over n_bins equal latitude bins on [-90, 90].
LatBinSummary bin_by_latitude(const ObsList& obs, int n_bins);

// Least squares of nonempty bin means on the spline basis; needs at least k
// nonempty bins and a full-rank design.
TrendModel fit_trend(const LatBinSummary& bins, int k);

struct TrendSelection {
  int k_best = 0;
  std::vector<double> cv_mse;  // indexed by k - k_lo
  std::vector<TrendCvRow> table;
};

// Ten-fold style cross-validation over k in [k_lo, k_hi]: bin the training
// folds, fit, score held-out observations against mu(lat). Folds are assigned
// by a seeded shuffle of a content-sorted index, so the result does not
// depend on observation ordering. Ties break to the smallest k.
TrendSelection select_k_cv(const ObsList& obs, int k_lo, int k_hi, int folds,
                           std::uint64_t seed, int n_bins = 180);

// Residuals y(s) = z(s) - mu(lat(s)).
ObsList detrend(const ObsList& obs, const TrendModel& model);
ObsList add_trend(const ObsList& obs, const TrendModel& model);

void save_trend_model(const TrendModel& model, const std::string& path);
TrendModel load_trend_model(const std::string& path);

}  // namespace mragp
