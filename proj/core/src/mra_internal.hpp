#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <string>
#include <vector>

#include "mragp/mra.hpp"

namespace mragp::detail {

// Cholesky with jitter escalation 0, 1e-10, 1e-8, 1e-6 times the mean
// diagonal. A modifies in place (jitter added to its diagonal). Throws
// NumericalError mentioning `what` when every attempt fails.
Eigen::LLT<Eigen::MatrixXd> robust_llt(Eigen::MatrixXd& A, const std::string& what,
                                       double* jitter_used, double* log_det);

inline double llt_log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return 2.0 * Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

// Basis rows v_j(s)' = w_{j-1}(s, Q_{A_j}) for j = 1..chain length, where
// chain[j-1] is the region index at level j. Valid while s lies inside every
// chain region.
std::vector<Eigen::VectorXd> basis_at(const PriorQuantities& prior, const Site& s,
                                      const LocalParams& ps, const std::vector<int>& chain);

// Stacks the chain's innovation maps into the block lower-triangular matrix
// Psi (identity diagonal) for levels 1..depth of the given chain; Psi maps
// chain innovations to chain weight deviations.
Eigen::MatrixXd assemble_psi(const PriorQuantities& prior, const PosteriorState& state,
                             const std::vector<int>& chain, int depth);

// Membership chain of one location (region index per level 1..M), or empty
// if the location is outside every level-1 region.
std::vector<int> chain_of_point(const RegionTree& tree, const LonLat& p);

// Fills the tree-derived fields of one region's prior block: ancestor chain,
// knot sites and local parameters, and chain knot-count offsets.
void region_meta(const RegionTree& tree, const KernelSpec& spec, int level, int index,
                 RegionPrior& rp);

}  // namespace mragp::detail
