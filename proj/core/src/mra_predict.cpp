#include <cmath>
#include <limits>

#include "mra_internal.hpp"
#include "mragp/errors.hpp"
#include "mragp/parallel.hpp"

namespace mragp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct PointWork {
  bool ok = false;
  std::vector<int> chain;
  int leaf = -1;
  std::vector<Eigen::VectorXd> zeta;  // k = 1..M-1: L_{P_k}^{-1} psi_k
  std::vector<Eigen::VectorXd> xi;    // j = 1..M-1: L_{K_j}^{-1} v_j
  Eigen::VectorXd b;                  // v_M
  Eigen::VectorXd sol;                // Sigma_leaf^{-1} v_M
  Site site;
  LocalParams par;
};

}  // namespace

PredictionField predict(const PosteriorState& state, const PriorQuantities& prior,
                        const PredictionRequest& req, int n_threads) {
  const int M = prior.tree.M;
  const std::size_t n = req.locations.size();
  if (req.joint && n > 1000)
    throw ValidationError("joint covariance is limited to 1000 locations, got " +
                          std::to_string(n));
  if (!state.with_moments && M > 1)
    throw ValidationError("posterior state was computed without moments; rerun the pass");

  PredictionField out;
  out.mean = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), kNaN);
  out.sd = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), kNaN);
  out.errors.assign(n, "");
  if (n == 0) return out;

  KernelSpec latent = prior.spec;
  latent.include_nugget = false;

  auto memb = assign_points(prior.tree, req.locations);
  std::vector<char> rejected(n, 0);
  for (auto i : memb.rejected) rejected[i] = 1;

  // innovation maps are shared by all points in a leaf
  std::vector<Eigen::MatrixXd> psi_of_leaf(state.leaves.size());
  std::vector<char> have_psi(state.leaves.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (rejected[i]) continue;
    int leaf = memb.region_of[static_cast<std::size_t>(M - 1)][i];
    if (leaf >= 0 && !have_psi[static_cast<std::size_t>(leaf)]) {
      psi_of_leaf[static_cast<std::size_t>(leaf)] = detail::assemble_psi(
          prior, state, prior.at(M, leaf).chain, M - 1);
      have_psi[static_cast<std::size_t>(leaf)] = 1;
    }
  }

  std::vector<PointWork> work(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        if (rejected[i]) {
          out.errors[i] = "location outside every level-1 region";
          return;
        }
        PointWork w;
        w.chain.resize(static_cast<std::size_t>(M));
        for (int m = 1; m <= M; ++m) {
          int idx = memb.region_of[static_cast<std::size_t>(m - 1)][i];
          if (idx < 0) {
            out.errors[i] = "location could not be routed to a level-" + std::to_string(m) +
                            " region";
            return;
          }
          w.chain[static_cast<std::size_t>(m - 1)] = idx;
        }
        try {
          w.site = make_site(req.locations[i]);
          w.par = resolve_params({w.site}, prior.spec)[0];
          auto v = detail::basis_at(prior, w.site, w.par, w.chain);
          w.leaf = w.chain.back();
          const RegionPrior& rpl = prior.at(M, w.leaf);
          const LeafPosterior& lp = state.leaves[static_cast<std::size_t>(w.leaf)];
          w.b = v.back();
          w.sol = lp.Sigma_llt.solve(w.b);
          double mean = w.b.size() > 0 ? w.b.dot(lp.alpha) : 0.0;

          const int q_anc = rpl.chain_offset[static_cast<std::size_t>(M - 1)];
          Eigen::VectorXd g(q_anc);
          for (int j = 1; j < M; ++j) {
            Eigen::VectorXd gj = v[static_cast<std::size_t>(j - 1)];
            const auto& Vj = rpl.V[static_cast<std::size_t>(j - 1)];
            if (w.b.size() > 0 && gj.size() > 0) gj.noalias() -= Vj.transpose() * w.sol;
            g.segment(rpl.chain_offset[static_cast<std::size_t>(j - 1)], gj.size()) = gj;
            mean += gj.dot(state.at(j, w.chain[static_cast<std::size_t>(j - 1)]).mu);
          }

          // whitened posterior loadings per ancestor innovation
          Eigen::VectorXd psi_stacked =
              q_anc > 0 ? Eigen::VectorXd(psi_of_leaf[static_cast<std::size_t>(w.leaf)]
                                              .transpose() *
                                          g)
                        : Eigen::VectorXd(0);
          double var = 0.0;
          w.zeta.resize(static_cast<std::size_t>(M - 1));
          w.xi.resize(static_cast<std::size_t>(M - 1));
          for (int k = 1; k < M; ++k) {
            int off = rpl.chain_offset[static_cast<std::size_t>(k - 1)];
            int r_k = rpl.chain_offset[static_cast<std::size_t>(k)] - off;
            const RegionPosterior& rk = state.at(k, w.chain[static_cast<std::size_t>(k - 1)]);
            const RegionPrior& pk = prior.at(k, w.chain[static_cast<std::size_t>(k - 1)]);
            w.zeta[static_cast<std::size_t>(k - 1)] =
                rk.P_llt.matrixL().solve(psi_stacked.segment(off, r_k));
            w.xi[static_cast<std::size_t>(k - 1)] =
                pk.K_llt.matrixL().solve(v[static_cast<std::size_t>(k - 1)]);
            var += w.zeta[static_cast<std::size_t>(k - 1)].squaredNorm();
          }
          // leaf remainder: w_{M-1}(s,s) minus the part explained by the
          // leaf's observations
          double c_ss = kernel_value(w.site, w.par, w.site, w.par, latent);
          double w_self = c_ss;
          for (const auto& xi : w.xi) w_self -= xi.squaredNorm();
          var += w_self - (w.b.size() > 0 ? w.b.dot(w.sol) : 0.0);

          out.mean(static_cast<Eigen::Index>(i)) = mean;
          out.sd(static_cast<Eigen::Index>(i)) = std::sqrt(std::max(var, 0.0));
          w.ok = true;
          work[i] = std::move(w);
        } catch (const std::exception& e) {
          out.errors[i] = e.what();
        }
      },
      n_threads);

  if (req.joint) {
    out.joint = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n),
                                          static_cast<Eigen::Index>(n), kNaN);
    parallel_for(
        n,
        [&](std::size_t i) {
          if (!work[i].ok) return;
          for (std::size_t j = i; j < n; ++j) {
            if (!work[j].ok) continue;
            const PointWork& a = work[i];
            const PointWork& b = work[j];
            int shared = 0;
            while (shared < M && a.chain[static_cast<std::size_t>(shared)] ==
                                     b.chain[static_cast<std::size_t>(shared)])
              ++shared;
            double acc = 0.0;
            for (int k = 1; k <= std::min(shared, M - 1); ++k)
              acc += a.zeta[static_cast<std::size_t>(k - 1)].dot(
                  b.zeta[static_cast<std::size_t>(k - 1)]);
            if (shared == M) {
              double c_st = kernel_value(a.site, a.par, b.site, b.par, latent);
              double w_st = c_st;
              for (int l = 1; l < M; ++l)
                w_st -= a.xi[static_cast<std::size_t>(l - 1)].dot(
                    b.xi[static_cast<std::size_t>(l - 1)]);
              acc += w_st - (a.b.size() > 0 ? a.b.dot(b.sol) : 0.0);
            }
            out.joint(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
            out.joint(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = acc;
          }
        },
        n_threads);
  }
  return out;
}

}  // namespace mragp
