#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mragp/geo.hpp"
#include "mragp/obs.hpp"

namespace mragp {

// One region of the hierarchical domain decomposition. Boundary is either a
// polygon ring (file-specified coarse levels) or a GeoBox (automatic splits).
// Membership tests are closed; assignment resolves shared-boundary ties to
// the lowest region index, so interior shared edges effectively belong to the
// left/bottom sibling.
struct Region {
  int level = 1;  // 1..M
  int index = 0;  // within its level
  GeoBox box;
  std::vector<LonLat> poly;  // when nonempty this is the boundary
  int parent = -1;           // index within level-1
  std::vector<int> children;  // indices within level+1, ascending
  std::vector<LonLat> knots;
  std::vector<std::int64_t> obs;  // observation indices, finest level only
  bool from_file = false;

  bool contains(const LonLat& p) const;
};

struct RegionTree {
  int M = 0;          // number of levels
  int J = 2;          // split fan-out of the automatic levels
  int r = 0;          // knots per automatic non-leaf region
  int threshold = 0;  // leaf size bound used by auto_split (0 = not split yet)
  std::vector<std::vector<Region>> levels;  // levels[m-1]

  Region& at(int level, int index) { return levels[static_cast<std::size_t>(level - 1)]
                                                  [static_cast<std::size_t>(index)]; }
  const Region& at(int level, int index) const {
    return levels[static_cast<std::size_t>(level - 1)][static_cast<std::size_t>(index)];
  }
  int n_levels() const { return M; }
  std::size_t n_regions() const;
};

// Per-point region membership across levels; -1 marks points outside every
// level-1 region (rejected).
struct Membership {
  std::vector<std::vector<int>> region_of;  // [level-1][point]
  std::vector<std::size_t> rejected;
};

// Parses the partition-spec text format (grammar in docs/formats.md) and
// validates nesting, sibling disjointness/cover, and knots against the mask.
RegionTree load_coarse_partition(const std::string& path, const OceanMask& mask);
void save_partition(const RegionTree& tree, const std::string& path);

// Convenience root for fully automatic trees: one level-1 region covering
// `box` with the given knots.
RegionTree make_root_tree(const GeoBox& box, std::vector<LonLat> root_knots);

// Completes the tree below its deepest file-specified level: regions are
// recursively bisected perpendicular to their longer km dimension at the
// observation coordinate mean until every branch holds fewer than `threshold`
// observations; branches that finish early are padded with single-child
// pass-through regions so all leaves land on one final level. Non-leaf
// automatic regions draw up to r knots from their observations, skipping
// locations already used by ancestor knots; leaves take all their
// observation locations as knots.
void auto_split(RegionTree& tree, const ObsList& obs, int threshold, int r, std::uint64_t seed);

// Root-to-leaf routing of arbitrary points through the tree.
Membership assign_points(const RegionTree& tree, const std::vector<LonLat>& pts);
Membership assign_observations(const RegionTree& tree, const ObsList& obs);

struct TreeReport {
  std::vector<std::string> violations;
  std::size_t max_leaf_obs = 0;
  std::size_t total_knots = 0;
  std::size_t n_leaves = 0;
  bool ok() const { return violations.empty(); }
};

// Invariant audit: knots inside their region and in ocean, children cover
// their parent's ocean area without overlap (Monte-Carlo membership check),
// parent/child links consistent, leaf sizes under the split threshold.
TreeReport validate_tree(const RegionTree& tree, const OceanMask& mask);

}  // namespace mragp
