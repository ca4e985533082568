#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "mragp/errors.hpp"
#include "mragp/optim.hpp"
#include "mragp/parallel.hpp"
#include "mragp/paramfield.hpp"
#include "mragp/rng.hpp"

namespace mragp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// u64 child seed under the same mixing as substream, for handing a whole
// stream family to a nested unit of work
std::uint64_t child_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  return splitmix64(s);
}

// content order: no draw may depend on how the input list happened to be
// arranged
bool obs_less(const Observation& a, const Observation& b) {
  if (a.ll.lon != b.ll.lon) return a.ll.lon < b.ll.lon;
  if (a.ll.lat != b.ll.lat) return a.ll.lat < b.ll.lat;
  return a.value < b.value;
}

// partial Fisher-Yates: uniform draw of k items without replacement
ObsList draw_without_replacement(ObsList pool, std::size_t k, std::mt19937_64& rng) {
  std::sort(pool.begin(), pool.end(), obs_less);
  if (k >= pool.size()) return pool;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

GeoBox centered_box(const LonLat& c, double half_width_deg) {
  GeoBox b;
  if (half_width_deg >= 180.0) {
    b.lon_min = -180.0;
    b.lon_max = 180.0;
  } else {
    b.lon_min = c.lon - half_width_deg;
    b.lon_max = c.lon + half_width_deg;
  }
  b.lat_min = std::max(-90.0, c.lat - half_width_deg);
  b.lat_max = std::min(90.0, c.lat + half_width_deg);
  return b;
}

}  // namespace

void LocalFitConfig::validate() const {
  if (!(grid_step_deg > 0.0)) throw ValidationError("grid step must be positive");
  if (!(b1_half_width_deg > 0.0)) throw ValidationError("B1 half-width must be positive");
  if (!(b2_half_width_deg > b1_half_width_deg))
    throw ValidationError("B2 must strictly contain B1");
  if (n_short == 0 || n_long == 0)
    throw ValidationError("local sample budgets must be positive");
  if (min_obs_short < 1) throw ValidationError("minimum B1 population must be at least 1");
}

std::string to_string(FitStatus s) {
  switch (s) {
    case FitStatus::kOk: return "ok";
    case FitStatus::kSkipped: return "skipped";
    case FitStatus::kFailed: return "failed";
  }
  return "skipped";
}

FitStatus fit_status_from_string(const std::string& s) {
  if (s == "ok") return FitStatus::kOk;
  if (s == "skipped") return FitStatus::kSkipped;
  if (s == "failed") return FitStatus::kFailed;
  throw ValidationError("unknown fit status '" + s + "'");
}

LocalSample sample_local_design(const LonLat& center, const ObsList& obs,
                                const LocalFitConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  GeoBox b1 = centered_box(center, cfg.b1_half_width_deg);
  GeoBox b2 = centered_box(center, cfg.b2_half_width_deg);

  ObsList in_b1, in_ring;
  for (const auto& o : obs) {
    if (b1.contains(o.ll))
      in_b1.push_back(o);
    else if (b2.contains(o.ll))
      in_ring.push_back(o);
  }

  LocalSample out;
  out.center = center;
  out.n_b1_available = in_b1.size();
  out.restart_seed = seed;
  auto rng_short = substream(seed, 0);
  out.short_range = draw_without_replacement(std::move(in_b1), cfg.n_short, rng_short);
  auto rng_long = substream(seed, 1);
  out.long_range = draw_without_replacement(std::move(in_ring), cfg.n_long, rng_long);
  return out;
}

namespace {

struct PooledSample {
  std::vector<LonLat> loc;
  Eigen::VectorXd y;
};

PooledSample pool_sample(const LocalSample& sample) {
  PooledSample p;
  p.loc.reserve(sample.short_range.size() + sample.long_range.size());
  for (const auto& o : sample.short_range) p.loc.push_back(o.ll);
  for (const auto& o : sample.long_range) p.loc.push_back(o.ll);
  p.y.resize(static_cast<Eigen::Index>(p.loc.size()));
  Eigen::Index k = 0;
  for (const auto& o : sample.short_range) p.y(k++) = o.value;
  for (const auto& o : sample.long_range) p.y(k++) = o.value;
  return p;
}

// negative profile log-likelihood over x = [log beta, log delta (, log nu)],
// delta = tau2 / sigma2; the sill drops out analytically
struct ProfileObjective {
  const Eigen::MatrixXd& D;  // chordal distances
  const Eigen::VectorXd& y;
  std::optional<double> fixed_nu;

  // filled by the last successful evaluation of operator()
  mutable double sigma2_hat = 0.0;

  double operator()(const Eigen::VectorXd& x) const {
    double beta = std::exp(x(0));
    double delta = std::exp(x(1));
    double nu = fixed_nu ? *fixed_nu : std::exp(x(2));
    if (!(beta > 1e-3) || !(beta < 1e7)) return kInf;
    if (!(delta > 1e-12) || !(delta < 1e6)) return kInf;
    if (!(nu > 0.01) || !(nu < 20.0)) return kInf;

    const Eigen::Index n = D.rows();
    StationaryMaternParams unit{1.0, beta, nu, 0.0};
    Eigen::MatrixXd R(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double v = matern(D(i, j), unit, false);
        R(i, j) = v;
        R(j, i) = v;
      }
      R(j, j) = 1.0 + delta;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(R);
    if (llt.info() != Eigen::Success) return kInf;
    double log_det = 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
    double quad = y.dot(llt.solve(y));
    if (!(quad > 0.0) || !std::isfinite(log_det)) return kInf;
    sigma2_hat = quad / static_cast<double>(n);
    return 0.5 * (static_cast<double>(n) *
                      (std::log(2.0 * M_PI * sigma2_hat) + 1.0) +
                  log_det);
  }
};

}  // namespace

LocalEstimate fit_local_matern(const LocalSample& sample, std::optional<double> fixed_nu) {
  LocalEstimate est;
  est.at = sample.center;
  est.n_short = sample.short_range.size();
  est.n_long = sample.long_range.size();
  est.status = FitStatus::kSkipped;
  est.loglik = -kInf;
  est.params.sigma2 = est.params.beta = est.params.tau2 =
      std::numeric_limits<double>::quiet_NaN();
  est.params.nu = fixed_nu.value_or(std::numeric_limits<double>::quiet_NaN());

  PooledSample p = pool_sample(sample);
  const Eigen::Index n = static_cast<Eigen::Index>(p.loc.size());
  if (n < 30) return est;

  {
    std::vector<LonLat> sorted = p.loc;
    std::sort(sorted.begin(), sorted.end(), [](const LonLat& a, const LonLat& b) {
      return a.lon != b.lon ? a.lon < b.lon : a.lat < b.lat;
    });
    for (std::size_t i = 1; i < sorted.size(); ++i)
      if (sorted[i].lon == sorted[i - 1].lon && sorted[i].lat == sorted[i - 1].lat)
        throw ValidationError("duplicate observation locations in local fit at lon=" +
                              std::to_string(sorted[i].lon) + " lat=" +
                              std::to_string(sorted[i].lat));
  }

  Eigen::MatrixXd D(n, n);
  double max_d = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    D(j, j) = 0.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double d = chordal_distance(p.loc[static_cast<std::size_t>(i)],
                                  p.loc[static_cast<std::size_t>(j)]);
      D(i, j) = d;
      D(j, i) = d;
      max_d = std::max(max_d, d);
    }
  }

  ProfileObjective obj{D, p.y, fixed_nu, 0.0};
  const int dim = fixed_nu ? 2 : 3;
  Eigen::VectorXd x0(dim);
  // empirical variance split 80/20 between sill and nugget fixes the initial
  // noise-to-signal ratio; the range starts at a fifth of the sample extent
  x0(0) = std::log(std::max(1.0, max_d / 5.0));
  x0(1) = std::log(0.25);
  if (!fixed_nu) x0(2) = std::log(0.5);

  NelderMeadOptions nm;
  nm.max_iter = 300;
  nm.ftol = 1e-8;
  nm.xtol = 1e-6;
  nm.init_step = 0.5;

  bool have_converged = false;
  double best_f = kInf;
  Eigen::VectorXd best_x = x0;
  for (int restart = 0; restart < 3; ++restart) {
    Eigen::VectorXd start = x0;
    if (restart > 0) {
      auto rng = substream(sample.restart_seed, 17 + static_cast<std::uint64_t>(restart));
      std::normal_distribution<double> gauss(0.0, 0.6);
      for (int k = 0; k < dim; ++k) start(k) += gauss(rng);
    }
    NelderMeadResult run = nelder_mead(std::cref(obj), start, nm);
    bool better = run.converged == have_converged ? run.fval < best_f : run.converged;
    if (better) {
      have_converged = have_converged || run.converged;
      best_f = run.fval;
      best_x = run.x;
    }
  }

  if (!std::isfinite(best_f)) return est;  // nothing usable even as a best iterate
  double final_f = obj(best_x);            // refresh the profiled sill at the optimum
  est.params.beta = std::exp(best_x(0));
  est.params.sigma2 = obj.sigma2_hat;
  est.params.tau2 = std::exp(best_x(1)) * obj.sigma2_hat;
  est.params.nu = fixed_nu ? *fixed_nu : std::exp(best_x(2));
  est.loglik = -final_f;
  est.status = have_converged ? FitStatus::kOk : FitStatus::kFailed;
  return est;
}

std::vector<LocalEstimate> local_estimate_grid(const ObsList& obs, const LocalFitConfig& cfg,
                                               const OceanMask& mask,
                                               std::optional<double> fixed_nu, int n_threads) {
  cfg.validate();
  if (obs.empty()) return {};

  GeoBox bbox;
  bbox.lon_min = bbox.lon_max = obs.front().ll.lon;
  bbox.lat_min = bbox.lat_max = obs.front().ll.lat;
  for (const auto& o : obs) {
    bbox.lon_min = std::min(bbox.lon_min, o.ll.lon);
    bbox.lon_max = std::max(bbox.lon_max, o.ll.lon);
    bbox.lat_min = std::min(bbox.lat_min, o.ll.lat);
    bbox.lat_max = std::max(bbox.lat_max, o.ll.lat);
  }
  std::vector<LonLat> grid = make_grid(bbox, cfg.grid_step_deg, mask);

  std::vector<LocalEstimate> out(grid.size());
  parallel_for(
      grid.size(),
      [&](std::size_t i) {
        LocalSample sample =
            sample_local_design(grid[i], obs, cfg, child_seed(cfg.seed, i));
        if (sample.n_b1_available < cfg.min_obs_short) {
          LocalEstimate est;
          est.at = grid[i];
          est.n_short = sample.short_range.size();
          est.n_long = sample.long_range.size();
          est.status = FitStatus::kSkipped;
          est.loglik = -kInf;
          est.params.sigma2 = est.params.beta = est.params.tau2 =
              std::numeric_limits<double>::quiet_NaN();
          est.params.nu = fixed_nu.value_or(std::numeric_limits<double>::quiet_NaN());
          out[i] = est;
          return;
        }
        out[i] = fit_local_matern(sample, fixed_nu);
      },
      n_threads);
  return out;
}

}  // namespace mragp
