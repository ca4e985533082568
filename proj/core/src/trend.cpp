#include "mragp/trend.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mragp/errors.hpp"

namespace mragp {

CubicSplineBasis::CubicSplineBasis(double lo, double hi, int k) : k_(k), lo_(lo), hi_(hi) {
  if (k < 4) throw ValidationError("cubic spline basis needs k >= 4");
  if (!(lo < hi)) throw ValidationError("spline domain must have lo < hi");
  knots_.resize(static_cast<std::size_t>(k) + 4);
  int interior = k - 4;
  for (int i = 0; i < 4; ++i) knots_[static_cast<std::size_t>(i)] = lo;
  for (int i = 0; i < interior; ++i)
    knots_[static_cast<std::size_t>(4 + i)] = lo + (hi - lo) * (i + 1) / (interior + 1);
  for (int i = 0; i < 4; ++i) knots_[static_cast<std::size_t>(k + i)] = hi;
}

Eigen::VectorXd CubicSplineBasis::row(double t) const {
  t = std::clamp(t, lo_, hi_);
  // span index: largest i with knots[i] <= t, capped so t = hi lands in the
  // last real interval
  int span = 3;
  while (span < k_ - 1 && t >= knots_[static_cast<std::size_t>(span + 1)]) ++span;
  // Cox-de Boor: N[j] holds the value of basis function span-3+j
  double N[4] = {1.0, 0.0, 0.0, 0.0};
  double left[4], right[4];
  for (int d = 1; d <= 3; ++d) {
    left[d] = t - knots_[static_cast<std::size_t>(span + 1 - d)];
    right[d] = knots_[static_cast<std::size_t>(span + d)] - t;
    double saved = 0.0;
    for (int r = 0; r < d; ++r) {
      double denom = right[r + 1] + left[d - r];
      double term = denom > 0.0 ? N[r] / denom : 0.0;
      N[r] = saved + right[r + 1] * term;
      saved = left[d - r] * term;
    }
    N[d] = saved;
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(k_);
  for (int j = 0; j < 4; ++j) {
    int idx = span - 3 + j;
    if (idx >= 0 && idx < k_) out(idx) = N[j];
  }
  return out;
}

LatBinSummary bin_by_latitude(const ObsList& obs, int n_bins) {
  if (n_bins < 2) throw ValidationError("need at least 2 latitude bins");
  if (obs.empty()) throw ValidationError("cannot bin an empty observation list");
  LatBinSummary s;
  s.n_bins = n_bins;
  double width = 180.0 / n_bins;
  s.center.resize(static_cast<std::size_t>(n_bins));
  s.mean.assign(static_cast<std::size_t>(n_bins), 0.0);
  s.count.assign(static_cast<std::size_t>(n_bins), 0);
  for (int i = 0; i < n_bins; ++i) s.center[static_cast<std::size_t>(i)] = -90.0 + (i + 0.5) * width;
  for (const auto& o : obs) {
    int b = std::min(n_bins - 1, static_cast<int>((o.ll.lat + 90.0) / width));
    s.mean[static_cast<std::size_t>(b)] += o.value;
    ++s.count[static_cast<std::size_t>(b)];
  }
  for (int i = 0; i < n_bins; ++i)
    if (s.count[static_cast<std::size_t>(i)] > 0)
      s.mean[static_cast<std::size_t>(i)] /= static_cast<double>(s.count[static_cast<std::size_t>(i)]);
  return s;
}

TrendModel fit_trend(const LatBinSummary& bins, int k) {
  std::vector<double> x, y;
  for (int i = 0; i < bins.n_bins; ++i) {
    if (bins.count[static_cast<std::size_t>(i)] > 0) {
      x.push_back(bins.center[static_cast<std::size_t>(i)]);
      y.push_back(bins.mean[static_cast<std::size_t>(i)]);
    }
  }
  if (static_cast<int>(x.size()) < k)
    throw ValidationError("fewer nonempty bins than basis functions: " +
                          std::to_string(x.size()) + " < " + std::to_string(k));
  TrendModel m;
  m.k = k;
  m.dom_lo = x.front();
  m.dom_hi = x.back();
  CubicSplineBasis basis(m.dom_lo, m.dom_hi, k);
  m.knots = basis.knots();
  Eigen::MatrixXd X(static_cast<Eigen::Index>(x.size()), k);
  Eigen::VectorXd b(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) = basis.row(x[i]).transpose();
    b(static_cast<Eigen::Index>(i)) = y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < k) {
    std::ostringstream msg;
    msg << "rank-deficient spline design (rank " << qr.rank() << " of " << k
        << "); deficient basis columns:";
    for (Eigen::Index i = qr.rank(); i < k; ++i)
      msg << " " << qr.colsPermutation().indices()(i);
    throw NumericalError(msg.str());
  }
  m.coef = qr.solve(b);
  return m;
}

double TrendModel::mu(double lat_deg) const {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
    throw ValidationError("latitude outside [-90, 90]");
  CubicSplineBasis basis(dom_lo, dom_hi, k);
  return basis.row(std::clamp(lat_deg, dom_lo, dom_hi)).dot(coef);
}

TrendSelection select_k_cv(const ObsList& obs, int k_lo, int k_hi, int folds,
                           std::uint64_t seed, int n_bins) {
  if (folds < 2) throw ValidationError("need at least 2 folds");
  if (k_lo < 4 || k_hi < k_lo) throw ValidationError("bad k range");
  if (static_cast<long long>(obs.size()) < folds)
    throw ValidationError("fewer observations than folds");

  // content-sorted index, then a seeded shuffle: fold assignment is
  // independent of the input ordering
  std::vector<std::size_t> idx(obs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& oa = obs[a];
    const auto& ob = obs[b];
    if (oa.ll.lat != ob.ll.lat) return oa.ll.lat < ob.ll.lat;
    if (oa.ll.lon != ob.ll.lon) return oa.ll.lon < ob.ll.lon;
    return oa.value < ob.value;
  });
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<int> fold_of(obs.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    fold_of[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));

  TrendSelection sel;
  sel.cv_mse.assign(static_cast<std::size_t>(k_hi - k_lo + 1), 0.0);
  for (int k = k_lo; k <= k_hi; ++k) {
    double sse = 0.0;
    long long n_test_total = 0;
    for (int f = 0; f < folds; ++f) {
      ObsList train;
      train.reserve(obs.size());
      for (std::size_t i = 0; i < obs.size(); ++i)
        if (fold_of[i] != f) train.push_back(obs[i]);
      auto bins = bin_by_latitude(train, n_bins);
      TrendModel m = fit_trend(bins, k);
      TrendCvRow row;
      row.k = k;
      row.fold = f;
      double fold_sse = 0.0;
      for (std::size_t i = 0; i < obs.size(); ++i) {
        if (fold_of[i] != f) continue;
        double lat = obs[i].ll.lat;
        if (lat < m.dom_lo || lat > m.dom_hi) ++row.n_clamped;
        double e = obs[i].value - m.mu(lat);
        fold_sse += e * e;
        ++row.n_test;
      }
      row.mse = row.n_test > 0 ? fold_sse / static_cast<double>(row.n_test) : 0.0;
      sel.table.push_back(row);
      sse += fold_sse;
      n_test_total += row.n_test;
    }
    sel.cv_mse[static_cast<std::size_t>(k - k_lo)] = sse / static_cast<double>(n_test_total);
  }
  // smallest k among ties within 1e-12
  int best = k_lo;
  for (int k = k_lo + 1; k <= k_hi; ++k)
    if (sel.cv_mse[static_cast<std::size_t>(k - k_lo)] <
        sel.cv_mse[static_cast<std::size_t>(best - k_lo)] - 1e-12)
      best = k;
  sel.k_best = best;
  return sel;
}

ObsList detrend(const ObsList& obs, const TrendModel& model) {
  ObsList out = obs;
  CubicSplineBasis basis(model.dom_lo, model.dom_hi, model.k);
  for (auto& o : out)
    o.value -= basis.row(std::clamp(o.ll.lat, model.dom_lo, model.dom_hi)).dot(model.coef);
  return out;
}

ObsList add_trend(const ObsList& obs, const TrendModel& model) {
  ObsList out = obs;
  CubicSplineBasis basis(model.dom_lo, model.dom_hi, model.k);
  for (auto& o : out)
    o.value += basis.row(std::clamp(o.ll.lat, model.dom_lo, model.dom_hi)).dot(model.coef);
  return out;
}

void save_trend_model(const TrendModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write trend model: " + path);
  out.precision(17);
  out << "trend_model 1\n";
  out << "k " << model.k << "\n";
  out << "domain " << model.dom_lo << " " << model.dom_hi << "\n";
  out << "coef";
  for (Eigen::Index i = 0; i < model.coef.size(); ++i) out << " " << model.coef(i);
  out << "\n";
}

TrendModel load_trend_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read trend model: " + path);
  std::string tag;
  int version;
  in >> tag >> version;
  if (tag != "trend_model" || version != 1)
    throw ValidationError("unrecognized trend model header in " + path);
  TrendModel m;
  std::string key;
  in >> key >> m.k;
  if (key != "k") throw ValidationError("malformed trend model: expected 'k'");
  in >> key >> m.dom_lo >> m.dom_hi;
  if (key != "domain") throw ValidationError("malformed trend model: expected 'domain'");
  in >> key;
  if (key != "coef") throw ValidationError("malformed trend model: expected 'coef'");
  m.coef.resize(m.k);
  for (int i = 0; i < m.k; ++i) in >> m.coef(i);
  if (!in) throw ValidationError("truncated trend model file: " + path);
  m.knots = CubicSplineBasis(m.dom_lo, m.dom_hi, m.k).knots();
  return m;
}

}  // namespace mragp
