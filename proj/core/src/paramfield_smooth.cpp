#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "mragp/errors.hpp"
#include "mragp/lasso.hpp"
#include "mragp/log.hpp"
#include "mragp/parallel.hpp"
#include "mragp/paramfield.hpp"
#include "mragp/rng.hpp"

namespace mragp {

namespace {

std::vector<const LocalEstimate*> usable_rows(const std::vector<LocalEstimate>& estimates) {
  std::vector<const LocalEstimate*> rows;
  for (const auto& e : estimates)
    if (e.status == FitStatus::kOk) rows.push_back(&e);
  return rows;
}

// feature matrix of bump weights, rows over estimates, columns over centers
Eigen::MatrixXd bump_features(const std::vector<const LocalEstimate*>& rows,
                              const std::vector<LonLat>& centers, double ell_km) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(centers.size()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      X(i, j) = wendland(
          chordal_distance(rows[static_cast<std::size_t>(i)]->at,
                           centers[static_cast<std::size_t>(j)]),
          ell_km);
  return X;
}

Eigen::MatrixXd log_responses(const std::vector<const LocalEstimate*>& rows) {
  Eigen::MatrixXd Y(static_cast<Eigen::Index>(rows.size()), 3);
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    const auto& p = rows[static_cast<std::size_t>(i)]->params;
    if (!(p.sigma2 > 0.0) || !(p.beta > 0.0) || !(p.tau2 > 0.0))
      throw ValidationError("usable local estimate has a non-positive parameter at lon=" +
                            std::to_string(rows[static_cast<std::size_t>(i)]->at.lon) +
                            " lat=" +
                            std::to_string(rows[static_cast<std::size_t>(i)]->at.lat));
    Y(i, 0) = std::log(p.sigma2);
    Y(i, 1) = std::log(p.beta);
    Y(i, 2) = std::log(p.tau2);
  }
  return Y;
}

double median_nu(const std::vector<const LocalEstimate*>& rows) {
  std::vector<double> nus;
  nus.reserve(rows.size());
  for (const auto* r : rows) nus.push_back(r->params.nu);
  std::sort(nus.begin(), nus.end());
  return nus[nus.size() / 2];
}

}  // namespace

ParamField::ParamField(std::vector<LonLat> centers, double ell_km, Eigen::Vector3d intercepts,
                       Eigen::MatrixXd coefs, double nu)
    : centers_(std::move(centers)),
      ell_km_(ell_km),
      intercepts_(std::move(intercepts)),
      coefs_(std::move(coefs)),
      nu_(nu) {
  if (!(ell_km_ > 0.0)) throw ValidationError("bump support length must be positive");
  if (coefs_.rows() != static_cast<Eigen::Index>(centers_.size()) || coefs_.cols() != 3)
    throw ValidationError("coefficient matrix must be centers x 3");
}

LocalParams ParamField::theta_at(const LonLat& p) const {
  Eigen::Vector3d logv = intercepts_;
  for (std::size_t j = 0; j < centers_.size(); ++j) {
    double w = wendland(chordal_distance(p, centers_[j]), ell_km_);
    if (w != 0.0) logv += w * coefs_.row(static_cast<Eigen::Index>(j)).transpose();
  }
  LocalParams out;
  out.sigma2 = std::exp(logv(0));
  out.beta = std::exp(logv(1));
  out.tau2 = std::exp(logv(2));
  out.nu = nu_;
  return out;
}

LocalParams eval_theta(const ParamField& field, const LonLat& s) { return field.theta_at(s); }

ParamField smooth_field(const std::vector<LocalEstimate>& estimates,
                        const std::vector<LonLat>& centers, double ell_km, double lasso_lambda,
                        int n_threads) {
  if (centers.empty()) throw ValidationError("no bump centers to smooth onto");
  if (!(ell_km > 0.0)) throw ValidationError("bump support length must be positive");
  if (!(lasso_lambda >= 0.0)) throw ValidationError("penalty must be nonnegative");
  auto rows = usable_rows(estimates);
  if (rows.empty()) throw ValidationError("no usable local estimates to smooth");

  Eigen::MatrixXd X = bump_features(rows, centers, ell_km);
  Eigen::MatrixXd Y = log_responses(rows);

  Eigen::Vector3d intercepts;
  Eigen::MatrixXd coefs(X.cols(), 3);
  parallel_for(
      3,
      [&](std::size_t k) {
        LassoResult fit = lasso_cd(X, Y.col(static_cast<Eigen::Index>(k)), lasso_lambda);
        intercepts(static_cast<Eigen::Index>(k)) = fit.intercept;
        coefs.col(static_cast<Eigen::Index>(k)) = fit.coef;
      },
      n_threads);

  if ((coefs.array() != 0.0).count() == 0)
    log_warn("smoothing penalty zeroed every coefficient; the field is intercept-only");
  return ParamField(centers, ell_km, intercepts, std::move(coefs), median_nu(rows));
}

SmoothingCvResult select_smoothing_cv(const std::vector<LocalEstimate>& estimates,
                                      const std::vector<double>& center_spacings_km,
                                      const std::vector<double>& ells_km,
                                      const std::vector<double>& lambdas, int folds,
                                      std::uint64_t seed) {
  if (center_spacings_km.empty() || ells_km.empty() || lambdas.empty())
    throw ValidationError("cross-validation needs at least one candidate in every dimension");
  if (folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
  auto rows = usable_rows(estimates);
  if (rows.size() < static_cast<std::size_t>(folds))
    throw ValidationError("fewer usable estimates than folds");

  // fold labels from a seeded shuffle of a content-sorted index
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const LonLat& pa = rows[a]->at;
    const LonLat& pb = rows[b]->at;
    return pa.lon != pb.lon ? pa.lon < pb.lon : pa.lat < pb.lat;
  });
  auto rng = substream(seed, 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(order[i - 1], order[pick(rng)]);
  }
  std::vector<int> fold(rows.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    fold[order[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));

  GeoBox bbox;
  bbox.lon_min = bbox.lon_max = rows.front()->at.lon;
  bbox.lat_min = bbox.lat_max = rows.front()->at.lat;
  for (const auto* r : rows) {
    bbox.lon_min = std::min(bbox.lon_min, r->at.lon);
    bbox.lon_max = std::max(bbox.lon_max, r->at.lon);
    bbox.lat_min = std::min(bbox.lat_min, r->at.lat);
    bbox.lat_max = std::max(bbox.lat_max, r->at.lat);
  }

  Eigen::MatrixXd Y = log_responses(rows);
  SmoothingCvResult result;
  result.best.mspe = std::numeric_limits<double>::infinity();

  for (double spacing : center_spacings_km) {
    std::vector<LonLat> centers = icosahedral_centers(bbox, spacing, OceanMask::all_ocean());
    if (centers.empty()) continue;
    for (double ell : ells_km) {
      Eigen::MatrixXd X = bump_features(rows, centers, ell);
      for (double lambda : lambdas) {
        double sse = 0.0;
        std::size_t n_test = 0;
        for (int f = 0; f < folds; ++f) {
          std::vector<Eigen::Index> train, test;
          for (std::size_t i = 0; i < rows.size(); ++i)
            (fold[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
          if (train.empty() || test.empty()) continue;
          Eigen::MatrixXd Xtr(static_cast<Eigen::Index>(train.size()), X.cols());
          for (std::size_t i = 0; i < train.size(); ++i)
            Xtr.row(static_cast<Eigen::Index>(i)) = X.row(train[i]);
          for (int k = 0; k < 3; ++k) {
            Eigen::VectorXd ytr(static_cast<Eigen::Index>(train.size()));
            for (std::size_t i = 0; i < train.size(); ++i)
              ytr(static_cast<Eigen::Index>(i)) = Y(train[i], k);
            LassoResult fit = lasso_cd(Xtr, ytr, lambda);
            for (Eigen::Index t : test) {
              double pred = fit.intercept + X.row(t).dot(fit.coef);
              double err = pred - Y(t, k);
              sse += err * err;
            }
          }
          n_test += test.size();
        }
        SmoothingChoice row{spacing, ell, lambda,
                            sse / (3.0 * static_cast<double>(n_test))};
        result.table.push_back(row);
        if (row.mspe < result.best.mspe) result.best = row;
      }
    }
  }
  if (!std::isfinite(result.best.mspe))
    throw ValidationError("every candidate produced an empty center set");
  return result;
}

void write_local_estimates(const std::vector<LocalEstimate>& estimates,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write local estimates: " + path);
  out.precision(17);
  out << "# lon lat sigma2 beta nu tau2 loglik n_short n_long status\n";
  for (const auto& e : estimates)
    out << e.at.lon << " " << e.at.lat << " " << e.params.sigma2 << " " << e.params.beta
        << " " << e.params.nu << " " << e.params.tau2 << " " << e.loglik << " " << e.n_short
        << " " << e.n_long << " " << to_string(e.status) << "\n";
  if (!out) throw ValidationError("failed writing local estimates: " + path);
}

namespace {

// stream extraction rejects "nan" and "inf", which skipped rows contain, so
// numeric fields go through strtod
double parse_double(std::istringstream& row, bool& ok) {
  std::string tok;
  if (!(row >> tok)) {
    ok = false;
    return 0.0;
  }
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size()) ok = false;
  return v;
}

}  // namespace

std::vector<LocalEstimate> read_local_estimates(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read local estimates: " + path);
  std::vector<LocalEstimate> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream row(line);
    LocalEstimate e;
    bool ok = true;
    double lon = parse_double(row, ok);
    double lat = parse_double(row, ok);
    e.params.sigma2 = parse_double(row, ok);
    e.params.beta = parse_double(row, ok);
    e.params.nu = parse_double(row, ok);
    e.params.tau2 = parse_double(row, ok);
    e.loglik = parse_double(row, ok);
    std::string status;
    if (!(row >> e.n_short >> e.n_long >> status)) ok = false;
    if (!ok)
      throw ValidationError("malformed local estimate row at line " + std::to_string(line_no) +
                            " of " + path);
    e.at = LonLat(lon, lat);
    e.status = fit_status_from_string(status);
    out.push_back(e);
  }
  return out;
}

void save_param_field(const ParamField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write parameter field: " + path);
  out.precision(17);
  out << "param_field 1\n";
  out << "nu " << field.nu() << "\n";
  out << "ell " << field.ell_km() << "\n";
  out << "centers " << field.centers().size() << "\n";
  for (const auto& c : field.centers()) out << c.lon << " " << c.lat << "\n";
  out << "intercepts " << field.intercepts()(0) << " " << field.intercepts()(1) << " "
      << field.intercepts()(2) << "\n";
  static const char* names[3] = {"sigma2", "beta", "tau2"};
  for (int k = 0; k < 3; ++k) {
    const auto col = field.coefs().col(k);
    Eigen::Index nnz = (col.array() != 0.0).count();
    out << "coef " << names[k] << " " << nnz << "\n";
    for (Eigen::Index j = 0; j < col.size(); ++j)
      if (col(j) != 0.0) out << j << " " << col(j) << "\n";
  }
  if (!out) throw ValidationError("failed writing parameter field: " + path);
}

ParamField load_param_field(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read parameter field: " + path);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (tag != "param_field" || version != 1)
    throw ValidationError("unrecognized parameter field header in " + path);
  std::string key;
  double nu = 0.0, ell = 0.0;
  in >> key >> nu;
  if (key != "nu") throw ValidationError("malformed parameter field: expected 'nu'");
  in >> key >> ell;
  if (key != "ell") throw ValidationError("malformed parameter field: expected 'ell'");
  std::size_t n_centers = 0;
  in >> key >> n_centers;
  if (key != "centers") throw ValidationError("malformed parameter field: expected 'centers'");
  std::vector<LonLat> centers;
  centers.reserve(n_centers);
  for (std::size_t i = 0; i < n_centers; ++i) {
    double lon, lat;
    in >> lon >> lat;
    if (!in) throw ValidationError("truncated parameter field centers in " + path);
    centers.emplace_back(lon, lat);
  }
  Eigen::Vector3d intercepts;
  in >> key >> intercepts(0) >> intercepts(1) >> intercepts(2);
  if (key != "intercepts")
    throw ValidationError("malformed parameter field: expected 'intercepts'");
  Eigen::MatrixXd coefs =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_centers), 3);
  static const char* names[3] = {"sigma2", "beta", "tau2"};
  for (int k = 0; k < 3; ++k) {
    std::string name;
    Eigen::Index nnz = 0;
    in >> key >> name >> nnz;
    if (key != "coef" || name != names[k])
      throw ValidationError("malformed parameter field: expected 'coef " +
                            std::string(names[k]) + "'");
    for (Eigen::Index t = 0; t < nnz; ++t) {
      Eigen::Index j = 0;
      double v = 0.0;
      in >> j >> v;
      if (!in || j < 0 || j >= coefs.rows())
        throw ValidationError("malformed coefficient entry in " + path);
      coefs(j, k) = v;
    }
  }
  if (!in) throw ValidationError("truncated parameter field file: " + path);
  return ParamField(std::move(centers), ell, intercepts, std::move(coefs), nu);
}

}  // namespace mragp
