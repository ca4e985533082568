#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mra_internal.hpp"
#include "mragp/errors.hpp"
#include "mragp/log.hpp"
#include "mragp/parallel.hpp"

namespace mragp {

namespace {

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", x);
  return buf;
}

}  // namespace

namespace detail {

Eigen::LLT<Eigen::MatrixXd> robust_llt(Eigen::MatrixXd& A, const std::string& what,
                                       double* jitter_used, double* log_det) {
  const Eigen::Index n = A.rows();
  if (n == 0) {
    if (jitter_used) *jitter_used = 0.0;
    if (log_det) *log_det = 0.0;
    return Eigen::LLT<Eigen::MatrixXd>(A);
  }
  double mean_diag = A.diagonal().mean();
  if (!(mean_diag > 0.0)) mean_diag = 1.0;
  const double scales[] = {0.0, 1e-10, 1e-8, 1e-6};
  for (double s : scales) {
    double jitter = s * mean_diag;
    if (s > 0.0) {
      A.diagonal().array() += jitter - (jitter_used ? *jitter_used : 0.0);
      log_debug("jitter escalated to " + sci(jitter) + " for " + what);
    }
    if (jitter_used) *jitter_used = jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() == Eigen::Success) {
      // a successful factorization can still carry a non-positive pivot on
      // some BLAS paths; the determinant check catches it
      double ld = llt_log_det(llt);
      if (std::isfinite(ld)) {
        if (log_det) *log_det = ld;
        return llt;
      }
    }
  }
  throw NumericalError("matrix not positive definite after jitter escalation in " + what);
}

std::vector<Eigen::VectorXd> basis_at(const PriorQuantities& prior, const Site& s,
                                      const LocalParams& ps, const std::vector<int>& chain) {
  KernelSpec latent = prior.spec;
  latent.include_nugget = false;
  const int m = static_cast<int>(chain.size());
  std::vector<Eigen::VectorXd> v(static_cast<std::size_t>(m));
  for (int j = 1; j <= m; ++j) {
    const RegionPrior& anc = prior.at(j, chain[static_cast<std::size_t>(j - 1)]);
    const auto r_j = static_cast<Eigen::Index>(anc.knot_sites.size());
    Eigen::VectorXd row(r_j);
    for (Eigen::Index k = 0; k < r_j; ++k)
      row(k) = kernel_value(s, ps, anc.knot_sites[static_cast<std::size_t>(k)],
                            anc.knot_params[static_cast<std::size_t>(k)], latent);
    for (int l = 1; l < j; ++l)
      if (v[static_cast<std::size_t>(l - 1)].size() > 0 && r_j > 0)
        row.noalias() -=
            anc.Vsol[static_cast<std::size_t>(l - 1)].transpose() * v[static_cast<std::size_t>(l - 1)];
    v[static_cast<std::size_t>(j - 1)] = std::move(row);
  }
  return v;
}

std::vector<int> chain_of_point(const RegionTree& tree, const LonLat& p) {
  auto memb = assign_points(tree, {p});
  if (!memb.rejected.empty()) return {};
  std::vector<int> chain(static_cast<std::size_t>(tree.M));
  for (int m = 1; m <= tree.M; ++m) {
    int idx = memb.region_of[static_cast<std::size_t>(m - 1)][0];
    if (idx < 0) return {};
    chain[static_cast<std::size_t>(m - 1)] = idx;
  }
  return chain;
}

void region_meta(const RegionTree& tree, const KernelSpec& spec, int level, int index,
                 RegionPrior& rp) {
  const Region& reg = tree.at(level, index);

  rp.chain.resize(static_cast<std::size_t>(level));
  int idx = reg.index;
  for (int l = level; l >= 1; --l) {
    rp.chain[static_cast<std::size_t>(l - 1)] = idx;
    idx = tree.at(l, idx).parent;
  }

  rp.knot_sites.clear();
  rp.knot_sites.reserve(reg.knots.size());
  for (const auto& q : reg.knots) rp.knot_sites.push_back(make_site(q));
  rp.knot_params = resolve_params(rp.knot_sites, spec);

  rp.chain_offset.assign(static_cast<std::size_t>(level) + 1, 0);
  for (int l = 1; l <= level; ++l) {
    const auto& anc_knots =
        l == level ? reg.knots : tree.at(l, rp.chain[static_cast<std::size_t>(l - 1)]).knots;
    rp.chain_offset[static_cast<std::size_t>(l)] =
        rp.chain_offset[static_cast<std::size_t>(l - 1)] + static_cast<int>(anc_knots.size());
  }
}

}  // namespace detail

PriorQuantities build_prior(const RegionTree& tree, const KernelSpec& spec, int n_threads) {
  if (tree.M < 1) throw ValidationError("cannot build a prior on an empty tree");
  PriorQuantities prior;
  prior.tree = tree;
  prior.spec = spec;
  KernelSpec latent = spec;
  latent.include_nugget = false;
  prior.levels.resize(static_cast<std::size_t>(tree.M));
  for (int m = 1; m <= tree.M; ++m) {
    auto& lv = prior.levels[static_cast<std::size_t>(m - 1)];
    lv.resize(tree.levels[static_cast<std::size_t>(m - 1)].size());
    parallel_for(
        lv.size(),
        [&](std::size_t i) {
          const Region& reg = tree.at(m, static_cast<int>(i));
          RegionPrior rp;
          detail::region_meta(tree, spec, m, static_cast<int>(i), rp);

          rp.V.reserve(static_cast<std::size_t>(m));
          rp.Vsol.reserve(static_cast<std::size_t>(m - 1));
          for (int j = 1; j <= m; ++j) {
            const RegionPrior& anc =
                j == m ? rp : prior.at(j, rp.chain[static_cast<std::size_t>(j - 1)]);
            Eigen::MatrixXd Vj = cov_matrix_resolved(rp.knot_sites, rp.knot_params,
                                                     anc.knot_sites, anc.knot_params, latent);
            for (int l = 1; l < j; ++l) {
              const auto& Vl = rp.V[static_cast<std::size_t>(l - 1)];
              // K_{A_l}^{-1} (V_l^{A_j})': the ancestor's cached solve for
              // j < m, this region's own (just computed) for j = m
              const auto& sol = j == m ? rp.Vsol[static_cast<std::size_t>(l - 1)]
                                       : anc.Vsol[static_cast<std::size_t>(l - 1)];
              if (Vl.cols() > 0 && Vj.size() > 0) Vj.noalias() -= Vl * sol;
            }
            if (j < m) {
              const RegionPrior& lower = prior.at(j, rp.chain[static_cast<std::size_t>(j - 1)]);
              rp.Vsol.push_back(lower.K_llt.solve(Vj.transpose()));
            }
            rp.V.push_back(std::move(Vj));
          }

          rp.K = 0.5 * (rp.V.back() + rp.V.back().transpose());
          std::string name =
              "region (level " + std::to_string(m) + ", index " + std::to_string(reg.index) + ")";
          try {
            rp.K_llt = detail::robust_llt(rp.K, "knot covariance of " + name, &rp.jitter,
                                          &rp.log_det_K);
          } catch (const NumericalError&) {
            throw NumericalError("knot covariance not positive definite in " + name +
                                 " after jitter escalation");
          }
          if (rp.jitter > 0.0) {
            // at the finest level the remainder is routinely rank-deficient
            // (observations can coincide with ancestor knots), so a small
            // jitter there is expected rather than a conditioning problem
            const std::string msg = "knot covariance of " + name + " needed jitter " + sci(rp.jitter);
            if (m < tree.M)
              log_warn(msg);
            else
              log_debug(msg);
          }
          rp.lambda = rp.K_llt.solve(
              Eigen::MatrixXd::Identity(rp.K.rows(), rp.K.cols()));
          lv[i] = std::move(rp);
        },
        n_threads);
  }
  return prior;
}

namespace {

// shared routing for the two covariance evaluators: chains, shared depth,
// and per-point basis stacks
struct PairBasis {
  std::vector<int> chain_s, chain_t;
  int shared = 0;  // deepest level with equal region ids
  Site ss, st;
  LocalParams ps, pt;
  std::vector<Eigen::VectorXd> vs, vt;
};

PairBasis pair_basis(const PriorQuantities& prior, const LonLat& s, const LonLat& t) {
  PairBasis pb;
  pb.chain_s = detail::chain_of_point(prior.tree, s);
  pb.chain_t = detail::chain_of_point(prior.tree, t);
  if (pb.chain_s.empty() || pb.chain_t.empty())
    throw ValidationError("location outside every level-1 region at lon=" +
                          std::to_string(pb.chain_s.empty() ? s.lon : t.lon) +
                          " lat=" + std::to_string(pb.chain_s.empty() ? s.lat : t.lat));
  while (pb.shared < prior.tree.M &&
         pb.chain_s[static_cast<std::size_t>(pb.shared)] ==
             pb.chain_t[static_cast<std::size_t>(pb.shared)])
    ++pb.shared;
  pb.ss = make_site(s);
  pb.st = make_site(t);
  pb.ps = resolve_params({pb.ss}, prior.spec)[0];
  pb.pt = resolve_params({pb.st}, prior.spec)[0];
  std::vector<int> prefix(pb.chain_s.begin(), pb.chain_s.begin() + pb.shared);
  pb.vs = detail::basis_at(prior, pb.ss, pb.ps, prefix);
  pb.vt = detail::basis_at(prior, pb.st, pb.pt, prefix);
  return pb;
}

}  // namespace

double implied_cov(const PriorQuantities& prior, const LonLat& s, const LonLat& t) {
  PairBasis pb = pair_basis(prior, s, t);
  if (pb.shared == prior.tree.M) {
    // same leaf: the recursion telescopes back to the full latent covariance
    KernelSpec latent = prior.spec;
    latent.include_nugget = false;
    return kernel_value(pb.ss, pb.ps, pb.st, pb.pt, latent);
  }
  double acc = 0.0;
  for (int j = 1; j <= pb.shared; ++j) {
    const RegionPrior& anc = prior.at(j, pb.chain_s[static_cast<std::size_t>(j - 1)]);
    if (anc.lambda.rows() == 0) continue;
    acc += pb.vs[static_cast<std::size_t>(j - 1)].dot(
        anc.lambda * pb.vt[static_cast<std::size_t>(j - 1)]);
  }
  return acc;
}

double basis_expansion_cov(const PriorQuantities& prior, const LonLat& s, const LonLat& t) {
  PairBasis pb = pair_basis(prior, s, t);
  double acc = 0.0;
  for (int j = 1; j <= pb.shared; ++j) {
    const RegionPrior& anc = prior.at(j, pb.chain_s[static_cast<std::size_t>(j - 1)]);
    if (anc.lambda.rows() == 0) continue;
    acc += pb.vs[static_cast<std::size_t>(j - 1)].dot(
        anc.lambda * pb.vt[static_cast<std::size_t>(j - 1)]);
  }
  return acc;
}

Eigen::MatrixXd implied_cov_matrix(const PriorQuantities& prior, const std::vector<LonLat>& pts,
                                   int n_threads) {
  const RegionTree& tree = prior.tree;
  const auto n = static_cast<Eigen::Index>(pts.size());
  Membership memb = assign_points(tree, pts);
  if (!memb.rejected.empty()) {
    const auto& p = pts[memb.rejected.front()];
    throw ValidationError("location outside every level-1 region at lon=" +
                          std::to_string(p.lon) + " lat=" + std::to_string(p.lat));
  }
  KernelSpec latent = prior.spec;
  latent.include_nugget = false;
  // basis stacks stop above the leaves; same-leaf pairs take the exact kernel
  const int nb = std::max(0, tree.M - 1);

  struct PointBasis {
    Site site;
    LocalParams par;
    std::vector<Eigen::VectorXd> v;
    std::vector<Eigen::VectorXd> w;  // w[j] = Lambda_{j+1} v[j]
  };
  std::vector<PointBasis> pb(pts.size());
  parallel_for(
      pts.size(),
      [&](std::size_t i) {
        auto& b = pb[i];
        b.site = make_site(pts[i]);
        b.par = resolve_params({b.site}, prior.spec)[0];
        std::vector<int> prefix(static_cast<std::size_t>(nb));
        for (int l = 0; l < nb; ++l)
          prefix[static_cast<std::size_t>(l)] = memb.region_of[static_cast<std::size_t>(l)][i];
        b.v = detail::basis_at(prior, b.site, b.par, prefix);
        b.w.resize(b.v.size());
        for (std::size_t j = 0; j < b.v.size(); ++j) {
          const RegionPrior& anc = prior.at(static_cast<int>(j) + 1, prefix[j]);
          if (anc.lambda.rows() > 0) b.w[j] = anc.lambda * b.v[j];
        }
      },
      n_threads);

  Eigen::MatrixXd C(n, n);
  parallel_for(
      static_cast<std::size_t>(n),
      [&](std::size_t i) {
        // row i from the diagonal out; the mirrored writes touch cells no
        // other row owns
        for (Eigen::Index jj = static_cast<Eigen::Index>(i); jj < n; ++jj) {
          const auto j = static_cast<std::size_t>(jj);
          int shared = 0;
          while (shared < tree.M &&
                 memb.region_of[static_cast<std::size_t>(shared)][i] ==
                     memb.region_of[static_cast<std::size_t>(shared)][j])
            ++shared;
          double acc;
          if (shared == tree.M) {
            acc = kernel_value(pb[i].site, pb[i].par, pb[j].site, pb[j].par, latent);
          } else {
            acc = 0.0;
            for (int l = 0; l < std::min(shared, nb); ++l)
              if (pb[j].w[static_cast<std::size_t>(l)].size() > 0)
                acc += pb[i].v[static_cast<std::size_t>(l)].dot(
                    pb[j].w[static_cast<std::size_t>(l)]);
          }
          C(static_cast<Eigen::Index>(i), jj) = acc;
          C(jj, static_cast<Eigen::Index>(i)) = acc;
        }
      },
      n_threads);
  return C;
}

}  // namespace mragp
