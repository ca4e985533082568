#pragma once

#include <string>
#include <vector>

namespace mragp {

// All distances in km; Earth modeled as a sphere of mean radius 6371 km.
inline constexpr double kEarthRadiusKm = 6371.0;

double deg2rad(double deg);
double rad2deg(double rad);

// Wraps a longitude in degrees into [-180, 180).
double wrap_lon(double lon_deg);

struct LonLat {
  double lon = 0.0;  // degrees in [-180, 180)
  double lat = 0.0;  // degrees in [-90, 90]

  LonLat() = default;
  // Normalizes lon; latitude outside [-90, 90] is an error, not a clamp.
  LonLat(double lon_deg, double lat_deg);
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

Point3 to_point3(const LonLat& p, double radius_km = kEarthRadiusKm);

// Euclidean distance between the sphere embeddings of a and b (straight line
// through the sphere, not along the surface).
double chordal_distance(const LonLat& a, const LonLat& b, double radius_km = kEarthRadiusKm);
double distance3(const Point3& a, const Point3& b);

// A location with its embedding precomputed; assembly loops use the Point3.
struct Site {
  LonLat ll;
  Point3 p;
};
Site make_site(const LonLat& ll, double radius_km = kEarthRadiusKm);

// Longitude-latitude rectangle. The box wraps through the antimeridian when
// lon_min > lon_max; the longitudinal extent never exceeds 360 degrees.
// Membership is inclusive on every edge.
struct GeoBox {
  double lon_min = -180.0;
  double lon_max = 180.0;
  double lat_min = -90.0;
  double lat_max = 90.0;

  // Wrapped longitudinal extent in degrees, in (0, 360].
  double lon_span() const;
  bool contains(const LonLat& p) const;
  LonLat center() const;
};

// Ocean/land classifier. Backed either by polygon rings in the lon/lat plane
// or by a rasterized bitmap. Points exactly on a ring edge count as land.
//
// Ring convention (fixed by the first ring of a polygon file): a
// counterclockwise first ring means the rings enclose ocean and everything
// outside is land; a clockwise first ring means the rings enclose land and
// everything outside is ocean. Interiors combine by even-odd parity.
class OceanMask {
 public:
  using Ring = std::vector<LonLat>;

  OceanMask();  // everything is ocean
  static OceanMask all_ocean();
  static OceanMask all_land();
  static OceanMask from_rings(std::vector<Ring> rings, bool rings_enclose_ocean);
  // Text file: one ring per blank-line-separated block, "lon lat" per line,
  // '#' starts a comment. Orientation of the first ring picks the convention.
  static OceanMask from_polygon_file(const std::string& path);

  bool is_ocean(const LonLat& p) const;

  // Returns a bitmap-backed copy sampled at cell centers. Queries against the
  // copy are cell lookups; repeated rasterization at the same resolution is
  // bit-identical.
  OceanMask rasterized(double resolution_deg) const;

  bool is_rasterized() const { return !bitmap_.empty(); }
  const std::vector<unsigned char>& bitmap() const { return bitmap_; }

 private:
  enum class Kind { kAllOcean, kAllLand, kPolygons };
  Kind kind_ = Kind::kAllOcean;
  std::vector<Ring> rings_;
  bool rings_enclose_ocean_ = true;

  // Raster state; empty when not rasterized.
  double res_deg_ = 0.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<unsigned char> bitmap_;

  bool polygon_query_is_ocean(const LonLat& p) const;
};

// Even-odd membership in a single lon/lat ring; points on the ring edge
// count as inside.
bool point_in_ring(const LonLat& p, const std::vector<LonLat>& ring);

// Regular grid over `box` aligned to its lower-left corner, land removed.
// Latitude endpoints are inclusive on both ends; longitude endpoints are
// inclusive unless the box spans the full 360 degrees, in which case the
// wrapped duplicate of the first column is dropped.
std::vector<LonLat> make_grid(const GeoBox& box, double step_deg, const OceanMask& mask);

// Near-uniform center points from a subdivided icosahedron, restricted to the
// domain box and the open ocean. The subdivision level is the power of two
// whose mesh spacing is nearest to target_spacing_km on a log scale, so the
// realized nearest-neighbor spacing stays within a factor of two of the
// target. A domain too small to catch any mesh vertex falls back to the box
// center; a mask that excludes everything yields an empty list with a warning.
std::vector<LonLat> icosahedral_centers(const GeoBox& domain, double target_spacing_km,
                                        const OceanMask& mask,
                                        double radius_km = kEarthRadiusKm);

}  // namespace mragp
