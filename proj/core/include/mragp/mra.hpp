#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "mragp/covariance.hpp"
#include "mragp/obs.hpp"
#include "mragp/partition.hpp"

namespace mragp {

// Multi-resolution approximation of a Gaussian process over a region tree.
//
// The latent covariance recursion starts from w_0 = C (no nugget) and peels
// off one predictive-process layer per level: inside a level-m region A with
// knots Q_A,
//   w_m(s,t) = w_{m-1}(s,t) - w_{m-1}(s,Q_A) K_A^{-1} w_{m-1}(Q_A,t),
// and w_m = 0 across distinct level-m regions. Basis rows are
// b_A(s) = w_{m-1}(s,Q_A) and the weight prior is eta_A ~ N(0, K_A^{-1}).
// Finest-level knots are the observation locations, so the model covariance
// is exact within a leaf and truncated to the shared basis levels across
// leaves; measurement noise tau2(s) enters the data diagonal only.

// Per-region prior quantities. V[j] (0-based j) is the cross-covariance of
// this region's knots against its level-(j+1) ancestor's knots under the
// remainder kernel of order j; V.back() is K_A before jitter.
struct RegionPrior {
  std::vector<Eigen::MatrixXd> V;
  std::vector<Eigen::MatrixXd> Vsol;  // Vsol[j] = K_{anc j+1}^{-1} V[j]', cached solves
  Eigen::MatrixXd K;  // V.back() plus any jitter, the factored matrix
  Eigen::LLT<Eigen::MatrixXd> K_llt;
  Eigen::MatrixXd lambda;  // K^{-1}, the weight-prior covariance block
  double log_det_K = 0.0;
  double jitter = 0.0;
  std::vector<Site> knot_sites;
  std::vector<LocalParams> knot_params;
  std::vector<int> chain;         // ancestor indices at levels 1..m (last = own index)
  std::vector<int> chain_offset;  // prefix sums of ancestor knot counts, size m+1
};

struct PriorQuantities {
  RegionTree tree;
  KernelSpec spec;  // for nonstationary kinds, spec.field must outlive this object
  std::vector<std::vector<RegionPrior>> levels;

  const RegionPrior& at(int level, int index) const {
    return levels[static_cast<std::size_t>(level - 1)][static_cast<std::size_t>(index)];
  }
  RegionPrior& at(int level, int index) {
    return levels[static_cast<std::size_t>(level - 1)][static_cast<std::size_t>(index)];
  }
};

// Root-to-leaf construction of all prior blocks; parallel over regions within
// a level. Throws NumericalError naming the region if a knot matrix stays
// non-PD after jitter escalation.
PriorQuantities build_prior(const RegionTree& tree, const KernelSpec& spec, int n_threads = 0);

// Covariance implied by the multi-resolution model: exact model covariance
// including the finest-level remainder (equals C(s,t) when s and t share a
// leaf). Throws ValidationError if a location is outside every level-1 region.
double implied_cov(const PriorQuantities& prior, const LonLat& s, const LonLat& t);

// The bare basis expansion sum_m b_m(s)' Lambda_m b_m(t) evaluated through
// the stored Lambda blocks, without the leaf remainder. Coincides with
// implied_cov at finest-level knots.
double basis_expansion_cov(const PriorQuantities& prior, const LonLat& s, const LonLat& t);

// Gram matrix of implied_cov over pts, with routing and per-point basis work
// shared across pairs; the n^2 pair loop costs one dot product per shared
// level. This is the kernel the dense oracle should be fed for equivalence
// checks.
Eigen::MatrixXd implied_cov_matrix(const PriorQuantities& prior, const std::vector<LonLat>& pts,
                                   int n_threads = 0);

// Upward (leaf-to-root) message: data precision contributions against the
// receiving region's ancestor chain, packed as one chain-stacked block matrix.
struct UpMessage {
  Eigen::MatrixXd T;  // q x q, q = total knot count along the chain
  Eigen::VectorXd u;  // q
  double loglik = 0.0;
  std::int64_t n = 0;  // observations accounted for
};

// Posterior quantities of one interior (non-leaf) region.
struct RegionPosterior {
  Eigen::MatrixXd P;  // K_A + own-block data precision
  Eigen::LLT<Eigen::MatrixXd> P_llt;
  double log_det_P = 0.0;
  Eigen::MatrixXd G;    // r x q_anc: P^{-1} (cross precision)' against ancestors
  Eigen::VectorXd c;    // P^{-1} u_own
  Eigen::VectorXd mu;   // posterior mean of eta
  Eigen::MatrixXd Phi;  // r x q_anc innovation coefficients (own block is I)
};

// Data-side quantities of one leaf region.
struct LeafPosterior {
  Eigen::MatrixXd Sigma;  // w_{M-1} at the leaf's observations + diag(tau2)
  Eigen::LLT<Eigen::MatrixXd> Sigma_llt;
  double log_det_Sigma = 0.0;
  Eigen::VectorXd y;      // leaf observation values, in leaf.obs order
  Eigen::VectorXd alpha;  // Sigma^{-1} y
};

struct PosteriorState {
  double loglik = 0.0;
  std::int64_t n_obs = 0;
  bool with_moments = true;
  std::vector<std::vector<RegionPosterior>> interior;  // levels 1..M-1
  std::vector<LeafPosterior> leaves;                   // level M, by region index

  const RegionPosterior& at(int level, int index) const {
    return interior[static_cast<std::size_t>(level - 1)][static_cast<std::size_t>(index)];
  }
};

// Per-region steps of the posterior pass, exposed so a distributed executor
// can run them with serialized messages; posterior_pass composes exactly
// these. Child messages are always combined in ascending child order.

// Leaf step: absorb the leaf's observations. `y_leaf` follows leaf.obs order.
// The result message covers the leaf's ancestor chain (levels 1..M-1).
UpMessage leaf_up_message(const PriorQuantities& prior, int leaf_index,
                          const Eigen::VectorXd& y_leaf, LeafPosterior* out_leaf);

// Interior step: given the sum of child messages over the chain including the
// region itself, eliminate the region's weights. Fills `out` and returns the
// message for the parent chain (empty T/u at level 1).
UpMessage eliminate_up(const PriorQuantities& prior, int level, int index,
                       const UpMessage& children_sum, RegionPosterior* out);

// Downward step: fill mu and Phi from the ancestors' finished quantities.
// `mu_anc` and `Phi_anc` stack the chain above this region; Psi_anc maps the
// chain's innovations to the chain's weights (block lower triangular with
// identity diagonal).
void finalize_down(RegionPosterior& self, const Eigen::VectorXd& mu_anc,
                   const Eigen::MatrixXd& Psi_anc);

// Full in-process pass. `y_all` is indexed by the original observation index
// stored in the tree's leaves. with_moments=false skips the downward pass
// (enough for likelihood evaluation).
PosteriorState posterior_pass(const PriorQuantities& prior, const Eigen::VectorXd& y_all,
                              bool with_moments = true, int n_threads = 0);

struct PredictionRequest {
  std::vector<LonLat> locations;
  bool joint = false;  // joint covariance for at most 1000 locations
};

struct PredictionField {
  Eigen::VectorXd mean;  // NaN where errors[i] is nonempty
  Eigen::VectorXd sd;
  std::vector<std::string> errors;  // per-location; empty string = ok
  Eigen::MatrixXd joint;            // 0x0 unless requested
};

PredictionField predict(const PosteriorState& state, const PriorQuantities& prior,
                        const PredictionRequest& req, int n_threads = 0);

// Dense conditional-Gaussian oracle on an arbitrary covariance function;
// guard: at most 5000 observations.
struct DenseGpResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  double loglik = 0.0;
};
DenseGpResult dense_gp_oracle(const std::vector<LonLat>& obs_loc, const Eigen::VectorXd& y,
                              const Eigen::VectorXd& tau2, const std::vector<LonLat>& targets,
                              const std::function<double(const LonLat&, const LonLat&)>& kernel);

// Maximum likelihood for the four stationary parameters under the model
// likelihood of the given tree. Optimizes in log space; nu is fixed when
// fix_nu is set, otherwise it is estimated too.
struct MleOptions {
  bool fix_nu = true;
  int max_iter = 400;
  int n_threads = 0;
};
struct MleResult {
  StationaryMaternParams params;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  int evaluations = 0;
};
MleResult stationary_mle_mra(const ObsList& obs, const RegionTree& tree,
                             const StationaryMaternParams& init, const MleOptions& opts = {});

// Checkpoint serialization (versioned little-endian binary). Factorizations
// are rebuilt on load. Nonstationary priors reattach the caller's field.
void save_prior(const PriorQuantities& prior, const std::string& path);
PriorQuantities load_prior(const std::string& path, const ThetaField* field = nullptr);
void save_posterior(const PosteriorState& state, const std::string& path);
PosteriorState load_posterior(const std::string& path);

}  // namespace mragp
