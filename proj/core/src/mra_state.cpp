#include <fstream>

#include "mra_internal.hpp"
#include "mragp/errors.hpp"
#include "mragp/serialize.hpp"

namespace mragp {

namespace {

constexpr char kPriorMagic[4] = {'M', 'R', 'P', 'R'};
constexpr char kPosteriorMagic[4] = {'M', 'R', 'P', 'S'};
constexpr std::uint32_t kOrderMarker = 0x01020304u;
constexpr std::uint32_t kVersion = 1;

void write_header(std::ostream& os, const char magic[4]) {
  os.write(magic, 4);
  write_pod<std::uint32_t>(os, kOrderMarker);
  write_pod<std::uint32_t>(os, kVersion);
}

void read_header(std::istream& is, const char magic[4], const std::string& what) {
  char got[4];
  is.read(got, 4);
  if (!is || std::memcmp(got, magic, 4) != 0)
    throw ValidationError("not a " + what + " checkpoint (bad magic)");
  if (read_pod<std::uint32_t>(is) != kOrderMarker)
    throw ValidationError(what + " checkpoint written with a foreign byte order");
  auto ver = read_pod<std::uint32_t>(is);
  if (ver != kVersion)
    throw ValidationError("unsupported " + what + " checkpoint version " + std::to_string(ver));
}

void write_lonlat(std::ostream& os, const LonLat& p) {
  write_pod<double>(os, p.lon);
  write_pod<double>(os, p.lat);
}

LonLat read_lonlat(std::istream& is) {
  LonLat p;
  p.lon = read_pod<double>(is);
  p.lat = read_pod<double>(is);
  return p;
}

void write_tree(std::ostream& os, const RegionTree& tree) {
  write_pod<std::int32_t>(os, tree.M);
  write_pod<std::int32_t>(os, tree.J);
  write_pod<std::int32_t>(os, tree.r);
  write_pod<std::int32_t>(os, tree.threshold);
  for (const auto& level : tree.levels) {
    write_pod<std::uint64_t>(os, level.size());
    for (const auto& reg : level) {
      write_pod<std::int32_t>(os, reg.level);
      write_pod<std::int32_t>(os, reg.index);
      write_pod<std::int32_t>(os, reg.parent);
      write_pod<std::uint8_t>(os, reg.from_file ? 1 : 0);
      write_pod<double>(os, reg.box.lon_min);
      write_pod<double>(os, reg.box.lon_max);
      write_pod<double>(os, reg.box.lat_min);
      write_pod<double>(os, reg.box.lat_max);
      write_pod<std::uint64_t>(os, reg.poly.size());
      for (const auto& p : reg.poly) write_lonlat(os, p);
      write_pod<std::uint64_t>(os, reg.knots.size());
      for (const auto& p : reg.knots) write_lonlat(os, p);
      write_pod<std::uint64_t>(os, reg.obs.size());
      for (auto oi : reg.obs) write_pod<std::int64_t>(os, oi);
      write_pod<std::uint64_t>(os, reg.children.size());
      for (auto c : reg.children) write_pod<std::int32_t>(os, c);
    }
  }
}

RegionTree read_tree(std::istream& is) {
  RegionTree tree;
  tree.M = read_pod<std::int32_t>(is);
  tree.J = read_pod<std::int32_t>(is);
  tree.r = read_pod<std::int32_t>(is);
  tree.threshold = read_pod<std::int32_t>(is);
  if (tree.M < 1 || tree.M > 64) throw ValidationError("checkpoint tree has a bad level count");
  tree.levels.resize(static_cast<std::size_t>(tree.M));
  for (auto& level : tree.levels) {
    auto n = read_pod<std::uint64_t>(is);
    if (n > (1ULL << 32)) throw ValidationError("checkpoint tree region count out of range");
    level.resize(n);
    for (auto& reg : level) {
      reg.level = read_pod<std::int32_t>(is);
      reg.index = read_pod<std::int32_t>(is);
      reg.parent = read_pod<std::int32_t>(is);
      reg.from_file = read_pod<std::uint8_t>(is) != 0;
      reg.box.lon_min = read_pod<double>(is);
      reg.box.lon_max = read_pod<double>(is);
      reg.box.lat_min = read_pod<double>(is);
      reg.box.lat_max = read_pod<double>(is);
      reg.poly.resize(read_pod<std::uint64_t>(is));
      for (auto& p : reg.poly) p = read_lonlat(is);
      reg.knots.resize(read_pod<std::uint64_t>(is));
      for (auto& p : reg.knots) p = read_lonlat(is);
      reg.obs.resize(read_pod<std::uint64_t>(is));
      for (auto& oi : reg.obs) oi = read_pod<std::int64_t>(is);
      reg.children.resize(read_pod<std::uint64_t>(is));
      for (auto& c : reg.children) c = read_pod<std::int32_t>(is);
    }
  }
  return tree;
}

bool kind_uses_field(KernelKind kind) {
  return kind == KernelKind::kNonstationaryExponential ||
         kind == KernelKind::kNonstationaryMatern;
}

}  // namespace

void save_prior(const PriorQuantities& prior, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open " + path + " for writing");
  write_header(os, kPriorMagic);
  write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(prior.spec.kind));
  write_pod<double>(os, prior.spec.params.sigma2);
  write_pod<double>(os, prior.spec.params.beta);
  write_pod<double>(os, prior.spec.params.nu);
  write_pod<double>(os, prior.spec.params.tau2);
  write_pod<std::uint8_t>(os, prior.spec.include_nugget ? 1 : 0);
  write_pod<std::uint8_t>(os, prior.spec.field != nullptr ? 1 : 0);
  write_tree(os, prior.tree);
  for (const auto& level : prior.levels)
    for (const auto& rp : level) {
      write_pod<double>(os, rp.jitter);
      write_matrix(os, rp.K);
      write_pod<std::uint64_t>(os, rp.V.size());
      for (const auto& v : rp.V) write_matrix(os, v);
    }
  if (!os) throw ValidationError("write failed for " + path);
}

PriorQuantities load_prior(const std::string& path, const ThetaField* field) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path);
  read_header(is, kPriorMagic, "prior");

  PriorQuantities prior;
  prior.spec.kind = static_cast<KernelKind>(read_pod<std::uint8_t>(is));
  prior.spec.params.sigma2 = read_pod<double>(is);
  prior.spec.params.beta = read_pod<double>(is);
  prior.spec.params.nu = read_pod<double>(is);
  prior.spec.params.tau2 = read_pod<double>(is);
  prior.spec.include_nugget = read_pod<std::uint8_t>(is) != 0;
  bool had_field = read_pod<std::uint8_t>(is) != 0;
  if (kind_uses_field(prior.spec.kind) && had_field && field == nullptr)
    throw ValidationError(
        "this prior was built with a spatially varying parameter field; pass the field to "
        "load_prior to reattach it");
  prior.spec.field = field;
  prior.tree = read_tree(is);

  prior.levels.resize(static_cast<std::size_t>(prior.tree.M));
  for (int m = 1; m <= prior.tree.M; ++m) {
    auto& lv = prior.levels[static_cast<std::size_t>(m - 1)];
    lv.resize(prior.tree.levels[static_cast<std::size_t>(m - 1)].size());
    for (std::size_t i = 0; i < lv.size(); ++i) {
      RegionPrior& rp = lv[i];
      detail::region_meta(prior.tree, prior.spec, m, static_cast<int>(i), rp);
      rp.jitter = read_pod<double>(is);
      rp.K = read_matrix(is);
      auto nv = read_pod<std::uint64_t>(is);
      if (nv != static_cast<std::uint64_t>(m))
        throw ValidationError("prior checkpoint block count does not match its tree");
      rp.V.resize(nv);
      for (auto& v : rp.V) v = read_matrix(is);
      if (rp.K.rows() != static_cast<Eigen::Index>(rp.knot_sites.size()))
        throw ValidationError("prior checkpoint block size does not match its tree");

      // factorizations are rebuilt; K already carries the jitter it was
      // factored with at save time
      if (rp.K.rows() > 0) {
        rp.K_llt.compute(rp.K);
        if (rp.K_llt.info() != Eigen::Success)
          throw NumericalError("prior checkpoint knot covariance not positive definite in "
                               "region (level " +
                               std::to_string(m) + ", index " + std::to_string(i) + ")");
        rp.log_det_K = detail::llt_log_det(rp.K_llt);
        rp.lambda = rp.K_llt.solve(Eigen::MatrixXd::Identity(rp.K.rows(), rp.K.cols()));
      } else {
        rp.K_llt.compute(rp.K);
        rp.log_det_K = 0.0;
        rp.lambda = Eigen::MatrixXd(0, 0);
      }
      rp.Vsol.resize(static_cast<std::size_t>(m - 1));
      for (int j = 1; j < m; ++j) {
        const RegionPrior& anc = prior.at(j, rp.chain[static_cast<std::size_t>(j - 1)]);
        rp.Vsol[static_cast<std::size_t>(j - 1)] =
            anc.K_llt.solve(rp.V[static_cast<std::size_t>(j - 1)].transpose());
      }
    }
  }
  return prior;
}

void save_posterior(const PosteriorState& state, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open " + path + " for writing");
  write_header(os, kPosteriorMagic);
  write_pod<double>(os, state.loglik);
  write_pod<std::int64_t>(os, state.n_obs);
  write_pod<std::uint8_t>(os, state.with_moments ? 1 : 0);
  write_pod<std::uint64_t>(os, state.interior.size());
  for (const auto& level : state.interior) {
    write_pod<std::uint64_t>(os, level.size());
    for (const auto& rp : level) {
      write_matrix(os, rp.P);
      write_matrix(os, rp.G);
      write_vector(os, rp.c);
      write_vector(os, rp.mu);
      write_matrix(os, rp.Phi);
    }
  }
  write_pod<std::uint64_t>(os, state.leaves.size());
  for (const auto& lf : state.leaves) {
    write_matrix(os, lf.Sigma);
    write_vector(os, lf.y);
  }
  if (!os) throw ValidationError("write failed for " + path);
}

PosteriorState load_posterior(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open " + path);
  read_header(is, kPosteriorMagic, "posterior");

  PosteriorState state;
  state.loglik = read_pod<double>(is);
  state.n_obs = read_pod<std::int64_t>(is);
  state.with_moments = read_pod<std::uint8_t>(is) != 0;
  auto n_levels = read_pod<std::uint64_t>(is);
  if (n_levels > 64) throw ValidationError("posterior checkpoint level count out of range");
  state.interior.resize(n_levels);
  for (std::size_t m = 0; m < n_levels; ++m) {
    auto n = read_pod<std::uint64_t>(is);
    if (n > (1ULL << 32)) throw ValidationError("posterior checkpoint region count out of range");
    auto& level = state.interior[m];
    level.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      RegionPosterior& rp = level[i];
      rp.P = read_matrix(is);
      rp.G = read_matrix(is);
      rp.c = read_vector(is);
      rp.mu = read_vector(is);
      rp.Phi = read_matrix(is);
      rp.P_llt.compute(rp.P);
      if (rp.P.rows() > 0 && rp.P_llt.info() != Eigen::Success)
        throw NumericalError("posterior checkpoint block not positive definite in region (level " +
                             std::to_string(m + 1) + ", index " + std::to_string(i) + ")");
      rp.log_det_P = rp.P.rows() > 0 ? detail::llt_log_det(rp.P_llt) : 0.0;
    }
  }
  auto n_leaves = read_pod<std::uint64_t>(is);
  if (n_leaves > (1ULL << 32)) throw ValidationError("posterior checkpoint leaf count out of range");
  state.leaves.resize(n_leaves);
  for (std::size_t i = 0; i < n_leaves; ++i) {
    LeafPosterior& lf = state.leaves[i];
    lf.Sigma = read_matrix(is);
    lf.y = read_vector(is);
    lf.Sigma_llt.compute(lf.Sigma);
    if (lf.Sigma.rows() > 0 && lf.Sigma_llt.info() != Eigen::Success)
      throw NumericalError("posterior checkpoint leaf covariance not positive definite (leaf " +
                           std::to_string(i) + ")");
    lf.log_det_Sigma = lf.Sigma.rows() > 0 ? detail::llt_log_det(lf.Sigma_llt) : 0.0;
    lf.alpha = lf.Sigma_llt.solve(lf.y);
  }
  return state;
}

}  // namespace mragp
