#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "mragp/errors.hpp"
#include "mragp/trend.hpp"

using namespace mragp;

namespace {
Observation at_lat(double lat, double value) {
  Observation o;
  o.ll = LonLat(0.0, lat);
  o.value = value;
  return o;
}
}  // namespace

TEST_CASE("spline basis partitions unity and reproduces lines") {
  CubicSplineBasis basis(-60.0, 60.0, 9);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-60.0, 60.0);
  for (int i = 0; i < 200; ++i) {
    double t = u(rng);
    CHECK(basis.row(t).sum() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(basis.row(-60.0).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(basis.row(60.0).sum() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(basis.row(-60.0)(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(basis.row(60.0)(8) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("bin_by_latitude means and counts") {
  ObsList two = {at_lat(-89.0, 270.0), at_lat(89.0, 300.0)};
  auto bins2 = bin_by_latitude(two, 2);
  CHECK(bins2.mean[0] == 270.0);
  CHECK(bins2.mean[1] == 300.0);
  CHECK(bins2.count[0] + bins2.count[1] == 2);

  ObsList constant;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-90.0, 90.0);
  for (int i = 0; i < 500; ++i) constant.push_back(at_lat(u(rng), 7.25));
  auto binsc = bin_by_latitude(constant, 180);
  long long total = 0;
  for (int b = 0; b < 180; ++b) {
    total += binsc.count[b];
    if (binsc.count[b] > 0) CHECK(binsc.mean[b] == doctest::Approx(7.25).epsilon(1e-14));
  }
  CHECK(total == 500);

  // z(lat) = lat: bin means land within half a bin width of the center
  ObsList ramp;
  for (int i = 0; i < 20000; ++i) {
    double lat = u(rng);
    ramp.push_back(at_lat(lat, lat));
  }
  auto binsr = bin_by_latitude(ramp, 180);
  for (int b = 0; b < 180; ++b)
    if (binsr.count[b] > 0) CHECK(std::abs(binsr.mean[b] - binsr.center[b]) <= 0.5);

  CHECK_THROWS_AS(bin_by_latitude({}, 180), ValidationError);
  CHECK_THROWS_AS(bin_by_latitude(two, 1), ValidationError);
}

TEST_CASE("fit_trend reproduces linear and interpolates when saturated") {
  // observations at bin centers so the bin means are exactly linear
  ObsList linear;
  auto centers = bin_by_latitude({at_lat(0.0, 0.0)}, 60).center;
  for (double lat : centers)
    for (int rep = 0; rep < 3; ++rep) linear.push_back(at_lat(lat, 2.0 + 0.05 * lat));
  auto bins = bin_by_latitude(linear, 60);
  auto model = fit_trend(bins, 8);
  for (int b = 0; b < bins.n_bins; ++b)
    if (bins.count[b] > 0)
      CHECK(model.mu(bins.center[b]) == doctest::Approx(2.0 + 0.05 * bins.center[b]).epsilon(1e-8));

  // constant-shift equivariance
  ObsList shifted = linear;
  for (auto& o : shifted) o.value += 10.0;
  auto model2 = fit_trend(bin_by_latitude(shifted, 60), 8);
  for (double lat : {-55.0, -10.0, 0.0, 30.0, 55.0})
    CHECK(model2.mu(lat) - model.mu(lat) == doctest::Approx(10.0).epsilon(1e-9));

  // saturated fit interpolates the bin means
  int nonempty = 0;
  for (int b = 0; b < bins.n_bins; ++b)
    if (bins.count[b] > 0) ++nonempty;
  auto saturated = fit_trend(bins, nonempty);
  for (int b = 0; b < bins.n_bins; ++b)
    if (bins.count[b] > 0)
      CHECK(std::abs(saturated.mu(bins.center[b]) - bins.mean[b]) < 1e-6);

  CHECK_THROWS_AS(fit_trend(bins, nonempty + 1), ValidationError);
}

TEST_CASE("fit_trend tracks a sinusoid with k=11") {
  ObsList obs;
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-90.0, 90.0);
  for (int i = 0; i < 100000; ++i) {
    double lat = u(rng);
    obs.push_back(at_lat(lat, std::sin(std::numbers::pi * lat / 180.0)));
  }
  auto bins = bin_by_latitude(obs, 180);
  auto model = fit_trend(bins, 11);
  double max_err = 0.0;
  for (int b = 0; b < 180; ++b)
    if (bins.count[b] > 0)
      max_err = std::max(max_err,
                         std::abs(model.mu(bins.center[b]) -
                                  std::sin(std::numbers::pi * bins.center[b] / 180.0)));
  CHECK(max_err < 1e-3);
}

TEST_CASE("detrend round trip and zero residual") {
  // exactly linear bin means make the fitted curve the exact line, so the
  // residual of any on-line point inside the domain vanishes
  ObsList fit_obs;
  auto centers = bin_by_latitude({at_lat(0.0, 0.0)}, 90).center;
  for (double lat : centers) fit_obs.push_back(at_lat(lat, 1.0 + 0.02 * lat));
  auto model = fit_trend(bin_by_latitude(fit_obs, 90), 7);

  ObsList obs;
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-89.0, 89.0);
  for (int i = 0; i < 1000; ++i) {
    double lat = u(rng);
    obs.push_back(at_lat(lat, 1.0 + 0.02 * lat));
  }
  auto resid = detrend(obs, model);
  for (const auto& o : resid) CHECK(std::abs(o.value) < 1e-7);
  auto back = add_trend(resid, model);
  for (std::size_t i = 0; i < obs.size(); ++i)
    CHECK(back[i].value == doctest::Approx(obs[i].value).epsilon(1e-12));
}

TEST_CASE("select_k_cv picks small k on noise-free linear data") {
  // replicated bin-center observations: every fold's bin means stay exactly
  // on the line, so every k fits perfectly and the tie breaks to k = 5
  ObsList obs;
  auto centers = bin_by_latitude({at_lat(0.0, 0.0)}, 90).center;
  for (double lat : centers)
    for (int rep = 0; rep < 20; ++rep) obs.push_back(at_lat(lat, 3.0 - 0.01 * lat));
  auto sel = select_k_cv(obs, 5, 9, 10, 77, 90);
  CHECK(sel.k_best == 5);

  // invariance to observation ordering
  ObsList shuffled = obs;
  std::mt19937_64 rng(21);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto sel2 = select_k_cv(shuffled, 5, 9, 10, 77, 90);
  CHECK(sel2.k_best == sel.k_best);
  for (std::size_t i = 0; i < sel.cv_mse.size(); ++i)
    CHECK(sel2.cv_mse[i] == doctest::Approx(sel.cv_mse[i]).epsilon(1e-12));
}

TEST_CASE("select_k_cv recovers the generating k on spline data") {
  // truth built from a k=7 spline on the span of the 90 bin centers, so the
  // k=7 candidate can represent it exactly; selected k should sit near 7
  CubicSplineBasis truth(-89.0, 89.0, 7);
  Eigen::VectorXd coef(7);
  coef << 0.0, 2.0, -1.0, 3.0, 0.5, -2.0, 1.0;
  std::uniform_real_distribution<double> u(-90.0, 90.0);
  std::normal_distribution<double> noise(0.0, 0.05);
  int hits = 0;
  for (int seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(100 + static_cast<unsigned>(seed));
    ObsList obs;
    for (int i = 0; i < 3000; ++i) {
      double lat = u(rng);
      obs.push_back(at_lat(lat, truth.row(std::clamp(lat, -89.0, 89.0)).dot(coef) + noise(rng)));
    }
    auto sel = select_k_cv(obs, 5, 12, 10, 7, 90);
    if (sel.k_best >= 6 && sel.k_best <= 8) ++hits;
  }
  CHECK(hits >= 11);  // majority over 20 seeds
}

TEST_CASE("trend model text round trip") {
  ObsList obs;
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-55.0, 55.0);
  for (int i = 0; i < 2000; ++i) {
    double lat = u(rng);
    obs.push_back(at_lat(lat, std::cos(lat / 20.0)));
  }
  auto model = fit_trend(bin_by_latitude(obs, 90), 9);
  const char* path = "trend_roundtrip.txt";
  save_trend_model(model, path);
  auto loaded = load_trend_model(path);
  CHECK(loaded.k == model.k);
  for (double lat : {-54.0, -20.0, 0.0, 33.0, 54.9})
    CHECK(loaded.mu(lat) == doctest::Approx(model.mu(lat)).epsilon(1e-14));
  std::remove(path);
}
