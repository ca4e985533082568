#include <cmath>
#include <numbers>

#include "mra_internal.hpp"
#include "mragp/errors.hpp"
#include "mragp/parallel.hpp"

namespace mragp {

namespace detail {

Eigen::MatrixXd assemble_psi(const PriorQuantities& prior, const PosteriorState& state,
                             const std::vector<int>& chain, int depth) {
  const RegionPrior& rp =
      prior.at(static_cast<int>(chain.size()), chain.back());
  // offsets along this chain are shared with every region on it
  int q = rp.chain_offset[static_cast<std::size_t>(depth)];
  Eigen::MatrixXd psi = Eigen::MatrixXd::Identity(q, q);
  for (int l = 2; l <= depth; ++l) {
    const RegionPosterior& anc = state.at(l, chain[static_cast<std::size_t>(l - 1)]);
    int off = rp.chain_offset[static_cast<std::size_t>(l - 1)];
    int r_l = rp.chain_offset[static_cast<std::size_t>(l)] - off;
    if (r_l > 0 && anc.Phi.cols() > 0) psi.block(off, 0, r_l, anc.Phi.cols()) = anc.Phi;
  }
  return psi;
}

}  // namespace detail

UpMessage leaf_up_message(const PriorQuantities& prior, int leaf_index,
                          const Eigen::VectorXd& y_leaf, LeafPosterior* out_leaf) {
  const int M = prior.tree.M;
  const RegionPrior& rp = prior.at(M, leaf_index);
  const Eigen::Index n_l = static_cast<Eigen::Index>(rp.knot_sites.size());
  if (y_leaf.size() != n_l)
    throw ValidationError("leaf observation vector length mismatch in region (level " +
                          std::to_string(M) + ", index " + std::to_string(leaf_index) + ")");
  const int q_anc = rp.chain_offset[static_cast<std::size_t>(M - 1)];

  LeafPosterior leaf;
  leaf.Sigma = rp.V.back();  // w_{M-1} at the observations, before jitter
  leaf.Sigma = 0.5 * (leaf.Sigma + leaf.Sigma.transpose());
  for (Eigen::Index i = 0; i < n_l; ++i)
    leaf.Sigma(i, i) += rp.knot_params[static_cast<std::size_t>(i)].tau2;
  leaf.y = y_leaf;
  double jitter = 0.0;
  try {
    leaf.Sigma_llt = detail::robust_llt(
        leaf.Sigma,
        "data covariance of region (level " + std::to_string(M) + ", index " +
            std::to_string(leaf_index) + ")",
        &jitter, &leaf.log_det_Sigma);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string(e.what()) + " at level " + std::to_string(M));
  }
  leaf.alpha = leaf.Sigma_llt.solve(leaf.y);

  UpMessage msg;
  Eigen::MatrixXd X(n_l, q_anc);
  for (int j = 1; j < M; ++j)
    X.middleCols(rp.chain_offset[static_cast<std::size_t>(j - 1)],
                 rp.V[static_cast<std::size_t>(j - 1)].cols()) =
        rp.V[static_cast<std::size_t>(j - 1)];
  Eigen::MatrixXd W = leaf.Sigma_llt.solve(X);
  msg.T.noalias() = X.transpose() * W;
  msg.T = 0.5 * (msg.T + msg.T.transpose()).eval();
  msg.u.noalias() = X.transpose() * leaf.alpha;
  msg.n = n_l;
  msg.loglik = -0.5 * (static_cast<double>(n_l) * std::log(2.0 * std::numbers::pi) +
                       leaf.log_det_Sigma + leaf.y.dot(leaf.alpha));
  if (out_leaf) *out_leaf = std::move(leaf);
  return msg;
}

UpMessage eliminate_up(const PriorQuantities& prior, int level, int index,
                       const UpMessage& children_sum, RegionPosterior* out) {
  const RegionPrior& rp = prior.at(level, index);
  const int q_anc = rp.chain_offset[static_cast<std::size_t>(level - 1)];
  const int r = rp.chain_offset[static_cast<std::size_t>(level)] - q_anc;
  if (children_sum.T.rows() != q_anc + r)
    throw ValidationError("upward message size mismatch in region (level " +
                          std::to_string(level) + ", index " + std::to_string(index) + ")");

  RegionPosterior post;
  post.P = rp.K + children_sum.T.block(q_anc, q_anc, r, r);
  post.P = 0.5 * (post.P + post.P.transpose()).eval();
  post.P_llt = Eigen::LLT<Eigen::MatrixXd>(post.P);
  if (r > 0 && post.P_llt.info() != Eigen::Success)
    throw NumericalError("posterior solve failed in region (level " + std::to_string(level) +
                         ", index " + std::to_string(index) + ")");
  post.log_det_P = detail::llt_log_det(post.P_llt);
  Eigen::MatrixXd S_ab = children_sum.T.block(0, q_anc, q_anc, r);
  Eigen::VectorXd u_b = children_sum.u.segment(q_anc, r);
  post.G = post.P_llt.solve(S_ab.transpose());
  post.c = post.P_llt.solve(u_b);

  UpMessage up;
  up.T = children_sum.T.topLeftCorner(q_anc, q_anc);
  if (r > 0 && q_anc > 0) up.T.noalias() -= S_ab * post.G;
  up.T = 0.5 * (up.T + up.T.transpose()).eval();
  up.u = children_sum.u.head(q_anc);
  if (r > 0 && q_anc > 0) up.u.noalias() -= S_ab * post.c;
  up.n = children_sum.n;
  up.loglik = children_sum.loglik + 0.5 * (rp.log_det_K - post.log_det_P + u_b.dot(post.c));
  if (out) *out = std::move(post);
  return up;
}

void finalize_down(RegionPosterior& self, const Eigen::VectorXd& mu_anc,
                   const Eigen::MatrixXd& Psi_anc) {
  self.mu = self.c;
  if (mu_anc.size() > 0) self.mu.noalias() -= self.G * mu_anc;
  self.Phi = -self.G * Psi_anc;
}

PosteriorState posterior_pass(const PriorQuantities& prior, const Eigen::VectorXd& y_all,
                              bool with_moments, int n_threads) {
  const int M = prior.tree.M;
  PosteriorState state;
  state.with_moments = with_moments;
  const auto& leaf_regions = prior.tree.levels[static_cast<std::size_t>(M - 1)];
  state.leaves.resize(leaf_regions.size());
  state.interior.resize(static_cast<std::size_t>(M - 1));
  for (int m = 1; m < M; ++m)
    state.interior[static_cast<std::size_t>(m - 1)].resize(
        prior.tree.levels[static_cast<std::size_t>(m - 1)].size());

  // leaf step
  std::vector<UpMessage> msgs(leaf_regions.size());
  parallel_for(
      leaf_regions.size(),
      [&](std::size_t i) {
        const Region& leaf = leaf_regions[i];
        Eigen::VectorXd y_leaf(static_cast<Eigen::Index>(leaf.obs.size()));
        for (std::size_t k = 0; k < leaf.obs.size(); ++k) {
          auto oi = leaf.obs[k];
          if (oi < 0 || oi >= y_all.size())
            throw ValidationError("leaf observation index " + std::to_string(oi) +
                                  " outside the data vector");
          y_leaf(static_cast<Eigen::Index>(k)) = y_all(oi);
        }
        msgs[i] = leaf_up_message(prior, static_cast<int>(i), y_leaf, &state.leaves[i]);
      },
      n_threads);

  // upward pass, levels M-1 .. 1; messages are consumed level by level
  for (int m = M - 1; m >= 1; --m) {
    const auto& regions = prior.tree.levels[static_cast<std::size_t>(m - 1)];
    std::vector<UpMessage> next(regions.size());
    parallel_for(
        regions.size(),
        [&](std::size_t i) {
          const Region& reg = regions[i];
          const RegionPrior& rp = prior.at(m, static_cast<int>(i));
          int q = rp.chain_offset[static_cast<std::size_t>(m)];
          UpMessage sum;
          sum.T = Eigen::MatrixXd::Zero(q, q);
          sum.u = Eigen::VectorXd::Zero(q);
          for (int c : reg.children) {  // ascending: schedule-independent reduction
            const UpMessage& cm = msgs[static_cast<std::size_t>(c)];
            sum.T += cm.T;
            sum.u += cm.u;
            sum.loglik += cm.loglik;
            sum.n += cm.n;
          }
          next[i] = eliminate_up(prior, m, static_cast<int>(i), sum,
                                 &state.interior[static_cast<std::size_t>(m - 1)][i]);
        },
        n_threads);
    msgs = std::move(next);
  }
  for (const auto& msg : msgs) {
    state.loglik += msg.loglik;
    state.n_obs += msg.n;
  }

  if (with_moments) {
    for (int m = 1; m < M; ++m) {
      auto& lv = state.interior[static_cast<std::size_t>(m - 1)];
      parallel_for(
          lv.size(),
          [&](std::size_t i) {
            const RegionPrior& rp = prior.at(m, static_cast<int>(i));
            int q_anc = rp.chain_offset[static_cast<std::size_t>(m - 1)];
            Eigen::VectorXd mu_anc(q_anc);
            for (int l = 1; l < m; ++l) {
              const RegionPosterior& anc =
                  state.at(l, rp.chain[static_cast<std::size_t>(l - 1)]);
              mu_anc.segment(rp.chain_offset[static_cast<std::size_t>(l - 1)],
                             anc.mu.size()) = anc.mu;
            }
            Eigen::MatrixXd psi = detail::assemble_psi(prior, state, rp.chain, m - 1);
            finalize_down(lv[i], mu_anc, psi);
          },
          n_threads);
    }
  }
  return state;
}

}  // namespace mragp
