#include "mragp/partition.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "mragp/errors.hpp"
#include "mragp/log.hpp"
#include "mragp/rng.hpp"

namespace mragp {

bool Region::contains(const LonLat& p) const {
  if (!poly.empty()) return point_in_ring(p, poly);
  return box.contains(p);
}

std::size_t RegionTree::n_regions() const {
  std::size_t n = 0;
  for (const auto& lv : levels) n += lv.size();
  return n;
}

namespace {

std::string region_name(int level, int index) {
  return "region (level " + std::to_string(level) + ", index " + std::to_string(index) + ")";
}

GeoBox bounding_box(const std::vector<LonLat>& poly) {
  // polygons are given in plain [-180, 180) coordinates (no wrap support)
  GeoBox b;
  b.lon_min = b.lon_max = poly.front().lon;
  b.lat_min = b.lat_max = poly.front().lat;
  for (const auto& v : poly) {
    b.lon_min = std::min(b.lon_min, v.lon);
    b.lon_max = std::max(b.lon_max, v.lon);
    b.lat_min = std::min(b.lat_min, v.lat);
    b.lat_max = std::max(b.lat_max, v.lat);
  }
  return b;
}

// exact location identity for knot-reuse tracking
struct LocKey {
  std::uint64_t lon_bits;
  std::uint64_t lat_bits;
  bool operator==(const LocKey&) const = default;
};
struct LocKeyHash {
  std::size_t operator()(const LocKey& k) const {
    std::uint64_t h = k.lon_bits * 0x9e3779b97f4a7c15ULL;
    h ^= k.lat_bits + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};
using LocSet = std::unordered_set<LocKey, LocKeyHash>;

LocKey loc_key(const LonLat& p) {
  return {std::bit_cast<std::uint64_t>(p.lon), std::bit_cast<std::uint64_t>(p.lat)};
}

// Monte-Carlo audit that `children` tile the parent's ocean area.
void check_children_partition(const RegionTree& tree, const Region& parent, int n_samples,
                              const OceanMask& mask, std::vector<std::string>& violations) {
  if (parent.children.empty()) return;
  auto rng = substream(0xC0FFEEULL, (static_cast<std::uint64_t>(parent.level) << 40) |
                                        static_cast<std::uint64_t>(parent.index));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double span = parent.box.lon_span();
  int gaps = 0, overlaps = 0;
  std::string example;
  for (int s = 0; s < n_samples; ++s) {
    LonLat p(parent.box.lon_min + u01(rng) * span,
             parent.box.lat_min + u01(rng) * (parent.box.lat_max - parent.box.lat_min));
    if (!parent.contains(p) || !mask.is_ocean(p)) continue;
    int hits = 0;
    std::string hit_ids;
    for (int c : parent.children) {
      if (tree.at(parent.level + 1, c).contains(p)) {
        ++hits;
        hit_ids += " " + std::to_string(c);
      }
    }
    if (hits == 0) {
      ++gaps;
      if (example.empty())
        example = "gap at lon=" + std::to_string(p.lon) + " lat=" + std::to_string(p.lat);
    } else if (hits > 1) {
      ++overlaps;
      if (example.empty())
        example = "overlap among child indices" + hit_ids + " at lon=" + std::to_string(p.lon) +
                  " lat=" + std::to_string(p.lat);
    }
  }
  if (gaps > 0)
    violations.push_back("children of " + region_name(parent.level, parent.index) +
                         " leave a gap (" + std::to_string(gaps) + " of " +
                         std::to_string(n_samples) + " samples): " + example);
  if (overlaps > 0)
    violations.push_back("children of " + region_name(parent.level, parent.index) + " overlap (" +
                         std::to_string(overlaps) + " samples): " + example);
}

}  // namespace

RegionTree make_root_tree(const GeoBox& box, std::vector<LonLat> root_knots) {
  RegionTree tree;
  tree.M = 1;
  tree.levels.resize(1);
  Region root;
  root.level = 1;
  root.index = 0;
  root.box = box;
  root.knots = std::move(root_knots);
  root.from_file = true;
  tree.levels[0].push_back(std::move(root));
  return tree;
}

// ---------------------------------------------------------------------------
// partition-spec text format

namespace {

struct TokenStream {
  std::vector<std::string> tokens;
  std::size_t pos = 0;

  explicit TokenStream(std::istream& in) {
    std::string line;
    while (std::getline(in, line)) {
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      std::string t;
      while (ls >> t) tokens.push_back(t);
    }
  }
  bool done() const { return pos >= tokens.size(); }
  const std::string& peek() const {
    if (done()) throw ValidationError("unexpected end of partition file");
    return tokens[pos];
  }
  std::string next() {
    if (done()) throw ValidationError("unexpected end of partition file");
    return tokens[pos++];
  }
  double num() {
    std::string t = next();
    try {
      std::size_t used = 0;
      double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      return v;
    } catch (const std::exception&) {
      throw ValidationError("expected a number in partition file, got '" + t + "'");
    }
  }
  long long integer() {
    double v = num();
    if (v != std::floor(v)) throw ValidationError("expected an integer in partition file");
    return static_cast<long long>(v);
  }
  void expect(const std::string& kw) {
    std::string t = next();
    if (t != kw)
      throw ValidationError("partition file: expected '" + kw + "', got '" + t + "'");
  }
};

}  // namespace

RegionTree load_coarse_partition(const std::string& path, const OceanMask& mask) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open partition file: " + path);
  TokenStream ts(in);
  ts.expect("partition");
  if (ts.integer() != 1) throw ValidationError("unsupported partition format version");

  RegionTree tree;
  while (!ts.done()) {
    ts.expect("region");
    Region reg;
    reg.from_file = true;
    ts.expect("level");
    reg.level = static_cast<int>(ts.integer());
    ts.expect("id");
    reg.index = static_cast<int>(ts.integer());
    ts.expect("parent");
    reg.parent = static_cast<int>(ts.integer());
    std::string kind = ts.next();
    if (kind == "box") {
      reg.box.lon_min = ts.num();
      reg.box.lon_max = ts.num();
      reg.box.lat_min = ts.num();
      reg.box.lat_max = ts.num();
    } else if (kind == "polygon") {
      auto n = ts.integer();
      if (n < 3) throw ValidationError("polygon with fewer than 3 vertices in " + path);
      for (long long i = 0; i < n; ++i) {
        double lon = ts.num();
        double lat = ts.num();
        reg.poly.emplace_back(lon, lat);
      }
      reg.box = bounding_box(reg.poly);
    } else {
      throw ValidationError("partition file: expected 'box' or 'polygon', got '" + kind + "'");
    }
    if (!ts.done() && ts.peek() == "source") {
      ts.next();
      reg.from_file = ts.next() == "file";
    }
    ts.expect("knots");
    auto nk = ts.integer();
    for (long long i = 0; i < nk; ++i) {
      double lon = ts.num();
      double lat = ts.num();
      reg.knots.emplace_back(lon, lat);
    }
    if (reg.level < 1) throw ValidationError("region level must be >= 1");
    if (static_cast<int>(tree.levels.size()) < reg.level)
      tree.levels.resize(static_cast<std::size_t>(reg.level));
    auto& lv = tree.levels[static_cast<std::size_t>(reg.level - 1)];
    if (reg.index != static_cast<int>(lv.size()))
      throw ValidationError("regions of level " + std::to_string(reg.level) +
                            " must appear with consecutive indices; got " +
                            std::to_string(reg.index));
    lv.push_back(std::move(reg));
  }
  tree.M = static_cast<int>(tree.levels.size());
  if (tree.M == 0) throw ValidationError("partition file has no regions: " + path);

  // wire up children and check parent links
  for (int m = 1; m <= tree.M; ++m) {
    for (auto& reg : tree.levels[static_cast<std::size_t>(m - 1)]) {
      if (m == 1) {
        if (reg.parent != -1)
          throw ValidationError(region_name(1, reg.index) + " must have parent -1");
      } else {
        auto& above = tree.levels[static_cast<std::size_t>(m - 2)];
        if (reg.parent < 0 || reg.parent >= static_cast<int>(above.size()))
          throw ValidationError(region_name(m, reg.index) + " names a missing parent " +
                                std::to_string(reg.parent));
        above[static_cast<std::size_t>(reg.parent)].children.push_back(reg.index);
      }
    }
  }

  // structural validation: knots in ocean and inside their region, children
  // tile their parent
  std::vector<std::string> violations;
  for (int m = 1; m <= tree.M; ++m) {
    for (const auto& reg : tree.levels[static_cast<std::size_t>(m - 1)]) {
      for (const auto& q : reg.knots) {
        if (!reg.contains(q))
          violations.push_back("knot outside " + region_name(m, reg.index) + " at lon=" +
                               std::to_string(q.lon) + " lat=" + std::to_string(q.lat));
        if (!mask.is_ocean(q))
          violations.push_back("knot on land at lon=" + std::to_string(q.lon) +
                               " lat=" + std::to_string(q.lat) + " in " +
                               region_name(m, reg.index));
      }
      check_children_partition(tree, reg, 2000, mask, violations);
    }
  }
  if (!violations.empty()) {
    std::string msg = "partition file failed validation:";
    for (const auto& v : violations) msg += "\n  " + v;
    throw ValidationError(msg);
  }
  return tree;
}

void save_partition(const RegionTree& tree, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write partition file: " + path);
  out.precision(17);
  out << "partition 1\n";
  for (int m = 1; m <= tree.M; ++m) {
    for (const auto& reg : tree.levels[static_cast<std::size_t>(m - 1)]) {
      out << "region\n";
      out << "level " << m << "\n";
      out << "id " << reg.index << "\n";
      out << "parent " << reg.parent << "\n";
      if (!reg.poly.empty()) {
        out << "polygon " << reg.poly.size() << "\n";
        for (const auto& v : reg.poly) out << v.lon << " " << v.lat << "\n";
      } else {
        out << "box " << reg.box.lon_min << " " << reg.box.lon_max << " " << reg.box.lat_min
            << " " << reg.box.lat_max << "\n";
      }
      out << "source " << (reg.from_file ? "file" : "auto") << "\n";
      out << "knots " << reg.knots.size() << "\n";
      for (const auto& q : reg.knots) out << q.lon << " " << q.lat << "\n";
    }
  }
}

// ---------------------------------------------------------------------------
// automatic splitting

namespace {

struct BuildNode {
  GeoBox box;
  std::vector<std::int64_t> obs;
  int left = -1;
  int right = -1;
};

// u-coordinate of a longitude relative to the box start, in [0, 360)
double lon_u(double lon, double lon_min) {
  double d = std::fmod(lon - lon_min, 360.0);
  if (d < 0.0) d += 360.0;
  return d;
}

int split_recursive(std::vector<BuildNode>& pool, int node_id, const ObsList& obs, int threshold,
                    int level_for_errors) {
  auto& node = pool[static_cast<std::size_t>(node_id)];
  if (static_cast<int>(node.obs.size()) < threshold) return 0;

  const GeoBox box = node.box;
  double center_lat = 0.5 * (box.lat_min + box.lat_max);
  double lon_km = deg2rad(box.lon_span()) * kEarthRadiusKm * std::cos(deg2rad(center_lat));
  double lat_km = deg2rad(box.lat_max - box.lat_min) * kEarthRadiusKm;

  // try the longer km axis first; fall back if the observations have no
  // extent along it
  int axis_order[2] = {lon_km >= lat_km ? 0 : 1, lon_km >= lat_km ? 1 : 0};
  int axis = -1;
  double mean_u = 0.0;
  for (int a : axis_order) {
    double lo = 1e300, hi = -1e300, sum = 0.0;
    for (auto i : pool[static_cast<std::size_t>(node_id)].obs) {
      const auto& p = obs[static_cast<std::size_t>(i)].ll;
      double u = a == 0 ? lon_u(p.lon, box.lon_min) : p.lat;
      lo = std::min(lo, u);
      hi = std::max(hi, u);
      sum += u;
    }
    if (hi > lo) {
      axis = a;
      mean_u = sum / static_cast<double>(pool[static_cast<std::size_t>(node_id)].obs.size());
      break;
    }
  }
  if (axis < 0)
    throw ValidationError(
        "cannot split a region at level " + std::to_string(level_for_errors) + " holding " +
        std::to_string(pool[static_cast<std::size_t>(node_id)].obs.size()) +
        " observations at a single coordinate");

  BuildNode lchild, rchild;
  lchild.box = box;
  rchild.box = box;
  if (axis == 0) {
    double split_lon = wrap_lon(box.lon_min + mean_u);
    lchild.box.lon_max = split_lon;
    rchild.box.lon_min = split_lon;
  } else {
    lchild.box.lat_max = mean_u;
    rchild.box.lat_min = mean_u;
  }
  for (auto i : pool[static_cast<std::size_t>(node_id)].obs) {
    const auto& p = obs[static_cast<std::size_t>(i)].ll;
    double u = axis == 0 ? lon_u(p.lon, box.lon_min) : p.lat;
    (u <= mean_u ? lchild : rchild).obs.push_back(i);
  }

  int li = static_cast<int>(pool.size());
  pool.push_back(std::move(lchild));
  int ri = static_cast<int>(pool.size());
  pool.push_back(std::move(rchild));
  pool[static_cast<std::size_t>(node_id)].left = li;
  pool[static_cast<std::size_t>(node_id)].right = ri;
  pool[static_cast<std::size_t>(node_id)].obs.clear();
  pool[static_cast<std::size_t>(node_id)].obs.shrink_to_fit();

  int dl = split_recursive(pool, li, obs, threshold, level_for_errors);
  int dr = split_recursive(pool, ri, obs, threshold, level_for_errors);
  return 1 + std::max(dl, dr);
}

}  // namespace

void auto_split(RegionTree& tree, const ObsList& obs, int threshold, int r, std::uint64_t seed) {
  if (threshold < 1) throw ValidationError("split threshold must be >= 1");
  if (r < 0) throw ValidationError("knot count must be nonnegative");
  if (tree.M < 1) throw ValidationError("tree has no file-specified levels");
  const int f = tree.M;  // frontier: deepest file-specified level

  // route observations to the frontier
  auto membership = assign_observations(tree, obs);
  if (!membership.rejected.empty())
    log_warn("auto_split: " + std::to_string(membership.rejected.size()) +
             " observations fall outside every level-1 region and are ignored");
  const std::size_t n_frontier = tree.levels[static_cast<std::size_t>(f - 1)].size();
  std::vector<std::vector<std::int64_t>> frontier_obs(n_frontier);
  const auto& at_frontier = membership.region_of[static_cast<std::size_t>(f - 1)];
  for (std::size_t i = 0; i < obs.size(); ++i)
    if (at_frontier[i] >= 0)
      frontier_obs[static_cast<std::size_t>(at_frontier[i])].push_back(
          static_cast<std::int64_t>(i));

  // per-frontier-region binary split structure
  std::vector<BuildNode> pool;
  std::vector<int> roots(n_frontier);
  int max_depth = 0;
  for (std::size_t fi = 0; fi < n_frontier; ++fi) {
    const Region& freg = tree.at(f, static_cast<int>(fi));
    BuildNode root;
    root.box = freg.box;
    root.obs = std::move(frontier_obs[fi]);
    roots[fi] = static_cast<int>(pool.size());
    pool.push_back(std::move(root));
    max_depth =
        std::max(max_depth, split_recursive(pool, roots[fi], obs, threshold, freg.level));
  }
  const int depth = std::max(1, max_depth);  // leaves always get their own level
  tree.M = f + depth;
  tree.threshold = threshold;
  tree.r = r;
  tree.levels.resize(static_cast<std::size_t>(tree.M));

  // starting used-knot sets: every file ancestor's knot locations
  std::vector<LocSet> frontier_used(n_frontier);
  for (std::size_t fi = 0; fi < n_frontier; ++fi) {
    int level = f;
    int index = static_cast<int>(fi);
    while (level >= 1) {
      const Region& reg = tree.at(level, index);
      for (const auto& q : reg.knots) frontier_used[fi].insert(loc_key(q));
      index = reg.parent;
      --level;
    }
  }

  // materialize level by level; a pending entry is a build node (or a
  // pass-through copy of one) waiting to become a region
  struct Pending {
    int node = -1;
    int parent_index = 0;
    LocSet used;
  };
  std::vector<Pending> current;
  for (std::size_t fi = 0; fi < n_frontier; ++fi)
    current.push_back({roots[fi], static_cast<int>(fi), std::move(frontier_used[fi])});

  for (int level = f + 1; level <= tree.M; ++level) {
    std::vector<Pending> next_pending;
    auto& lv = tree.levels[static_cast<std::size_t>(level - 1)];
    for (auto& pend : current) {
      const BuildNode& node = pool[static_cast<std::size_t>(pend.node)];
      bool is_split = node.left >= 0;
      // children to create at this level: the two split halves, or the node
      // itself as a pass-through
      std::vector<int> child_nodes =
          is_split ? std::vector<int>{node.left, node.right} : std::vector<int>{pend.node};
      for (int cn : child_nodes) {
        Region reg;
        reg.level = level;
        reg.index = static_cast<int>(lv.size());
        reg.parent = pend.parent_index;
        reg.box = pool[static_cast<std::size_t>(cn)].box;
        tree.at(level - 1, pend.parent_index).children.push_back(reg.index);

        const auto& contained = pool[static_cast<std::size_t>(cn)].obs;
        LocSet used = pend.used;
        if (level == tree.M) {
          // leaf: knots are exactly the observation locations
          reg.obs = contained;
          reg.knots.reserve(contained.size());
          for (auto oi : contained) reg.knots.push_back(obs[static_cast<std::size_t>(oi)].ll);
        } else if (!pool[static_cast<std::size_t>(cn)].obs.empty() ||
                   pool[static_cast<std::size_t>(cn)].left >= 0) {
          // non-leaf: draw up to r knots from contained observations, skipping
          // locations already used by an ancestor
          std::vector<std::int64_t> contained_all;
          if (pool[static_cast<std::size_t>(cn)].left >= 0) {
            // split nodes gave their obs away; recollect from descendants
            std::vector<int> stack = {cn};
            while (!stack.empty()) {
              int nid = stack.back();
              stack.pop_back();
              const auto& bn = pool[static_cast<std::size_t>(nid)];
              if (bn.left >= 0) {
                stack.push_back(bn.right);
                stack.push_back(bn.left);
              } else {
                contained_all.insert(contained_all.end(), bn.obs.begin(), bn.obs.end());
              }
            }
            std::sort(contained_all.begin(), contained_all.end());
          } else {
            contained_all = pool[static_cast<std::size_t>(cn)].obs;
          }
          std::vector<std::int64_t> candidates;
          for (auto oi : contained_all)
            if (!used.contains(loc_key(obs[static_cast<std::size_t>(oi)].ll)))
              candidates.push_back(oi);
          // draw by location, not by index, so observation order cannot
          // change the selected knots
          std::sort(candidates.begin(), candidates.end(), [&](std::int64_t a, std::int64_t b) {
            const auto& pa = obs[static_cast<std::size_t>(a)].ll;
            const auto& pb = obs[static_cast<std::size_t>(b)].ll;
            return pa.lon != pb.lon ? pa.lon < pb.lon : pa.lat < pb.lat;
          });
          candidates.erase(std::unique(candidates.begin(), candidates.end(),
                                       [&](std::int64_t a, std::int64_t b) {
                                         const auto& pa = obs[static_cast<std::size_t>(a)].ll;
                                         const auto& pb = obs[static_cast<std::size_t>(b)].ll;
                                         return pa.lon == pb.lon && pa.lat == pb.lat;
                                       }),
                           candidates.end());
          auto rng = substream(seed, (static_cast<std::uint64_t>(level) << 40) |
                                         static_cast<std::uint64_t>(reg.index));
          int take = std::min<int>(r, static_cast<int>(candidates.size()));
          for (int t = 0; t < take; ++t) {
            std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(t),
                                                            candidates.size() - 1);
            std::swap(candidates[static_cast<std::size_t>(t)], candidates[pick(rng)]);
            const auto& q = obs[static_cast<std::size_t>(candidates[static_cast<std::size_t>(t)])].ll;
            reg.knots.push_back(q);
            used.insert(loc_key(q));
          }
        }
        int my_index = reg.index;
        lv.push_back(std::move(reg));
        if (level < tree.M) next_pending.push_back({cn, my_index, std::move(used)});
      }
    }
    current = std::move(next_pending);
  }
}

Membership assign_points(const RegionTree& tree, const std::vector<LonLat>& pts) {
  Membership out;
  out.region_of.assign(static_cast<std::size_t>(tree.M),
                       std::vector<int>(pts.size(), -1));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const LonLat& p = pts[i];
    int cur = -1;
    for (const auto& root : tree.levels[0]) {
      if (root.contains(p)) {
        cur = root.index;
        break;
      }
    }
    if (cur < 0) {
      out.rejected.push_back(i);
      continue;
    }
    out.region_of[0][i] = cur;
    for (int level = 2; level <= tree.M; ++level) {
      const Region& parent = tree.at(level - 1, cur);
      int next = -1;
      for (int c : parent.children) {
        if (tree.at(level, c).contains(p)) {
          next = c;
          break;
        }
      }
      if (next < 0) {
        // measure-zero geometric corner: keep the point in the nearest child
        double best = 1e300;
        for (int c : parent.children) {
          const auto& cb = tree.at(level, c).box;
          double d = chordal_distance(p, LonLat(cb.lon_min + 0.5 * cb.lon_span(),
                                                0.5 * (cb.lat_min + cb.lat_max)));
          if (d < best) {
            best = d;
            next = c;
          }
        }
        if (next < 0) break;  // childless non-leaf level: leave deeper levels unset
      }
      cur = next;
      out.region_of[static_cast<std::size_t>(level - 1)][i] = cur;
    }
  }
  return out;
}

Membership assign_observations(const RegionTree& tree, const ObsList& obs) {
  std::vector<LonLat> pts;
  pts.reserve(obs.size());
  for (const auto& o : obs) pts.push_back(o.ll);
  return assign_points(tree, pts);
}

TreeReport validate_tree(const RegionTree& tree, const OceanMask& mask) {
  TreeReport rep;
  int mc_samples = tree.n_regions() <= 200 ? 10000 : 2000;
  for (int m = 1; m <= tree.M; ++m) {
    for (const auto& reg : tree.levels[static_cast<std::size_t>(m - 1)]) {
      for (const auto& q : reg.knots) {
        if (!reg.contains(q))
          rep.violations.push_back("knot outside " + region_name(m, reg.index) + " at lon=" +
                                   std::to_string(q.lon) + " lat=" + std::to_string(q.lat));
        if (!mask.is_ocean(q))
          rep.violations.push_back("knot on land at lon=" + std::to_string(q.lon) + " lat=" +
                                   std::to_string(q.lat) + " in " + region_name(m, reg.index));
      }
      rep.total_knots += reg.knots.size();
      if (m < tree.M) {
        if (!reg.obs.empty())
          rep.violations.push_back(region_name(m, reg.index) +
                                   " holds observations above the finest level");
        if (reg.children.empty() && tree.threshold > 0)
          rep.violations.push_back(region_name(m, reg.index) + " is childless above level M");
        for (int c : reg.children) {
          const Region& child = tree.at(m + 1, c);
          if (child.parent != reg.index)
            rep.violations.push_back("parent link of " + region_name(m + 1, c) +
                                     " disagrees with its parent's child list");
        }
        if (!reg.from_file && tree.r > 0 && static_cast<int>(reg.knots.size()) > tree.r)
          rep.violations.push_back(region_name(m, reg.index) + " carries " +
                                   std::to_string(reg.knots.size()) +
                                   " knots, more than the configured " + std::to_string(tree.r));
        check_children_partition(tree, reg, mc_samples, mask, rep.violations);
      } else {
        ++rep.n_leaves;
        rep.max_leaf_obs = std::max(rep.max_leaf_obs, reg.obs.size());
        if (reg.knots.size() != reg.obs.size() && !reg.from_file)
          rep.violations.push_back(region_name(m, reg.index) +
                                   " knot count differs from its observation count");
        if (tree.threshold > 0 && static_cast<int>(reg.obs.size()) >= tree.threshold)
          rep.violations.push_back(region_name(m, reg.index) + " holds " +
                                   std::to_string(reg.obs.size()) +
                                   " observations, at or above the threshold " +
                                   std::to_string(tree.threshold));
      }
    }
  }
  return rep;
}

}  // namespace mragp
