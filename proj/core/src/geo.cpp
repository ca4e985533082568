#include "mragp/geo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "mragp/errors.hpp"
#include "mragp/log.hpp"

namespace mragp {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

double wrap_lon(double lon_deg) {
  double x = std::fmod(lon_deg + 180.0, 360.0);
  if (x < 0.0) x += 360.0;
  return x - 180.0;
}

LonLat::LonLat(double lon_deg, double lat_deg) {
  if (!(lat_deg >= -90.0 && lat_deg <= 90.0))
    throw ValidationError("latitude " + std::to_string(lat_deg) + " outside [-90, 90]");
  if (!std::isfinite(lon_deg)) throw ValidationError("longitude is not finite");
  lon = wrap_lon(lon_deg);
  lat = lat_deg;
}

Point3 to_point3(const LonLat& p, double radius_km) {
  if (!(radius_km > 0.0)) throw ValidationError("radius must be positive");
  double lon = deg2rad(p.lon);
  double lat = deg2rad(p.lat);
  double c = std::cos(lat);
  return {radius_km * c * std::cos(lon), radius_km * c * std::sin(lon),
          radius_km * std::sin(lat)};
}

double distance3(const Point3& a, const Point3& b) {
  double dx = a.x - b.x;
  double dy = a.y - b.y;
  double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

double chordal_distance(const LonLat& a, const LonLat& b, double radius_km) {
  return distance3(to_point3(a, radius_km), to_point3(b, radius_km));
}

Site make_site(const LonLat& ll, double radius_km) { return {ll, to_point3(ll, radius_km)}; }

double GeoBox::lon_span() const {
  double span = lon_max - lon_min;
  if (span <= 0.0) span += 360.0;
  if (span > 360.0) span = 360.0;
  return span;
}

bool GeoBox::contains(const LonLat& p) const {
  if (p.lat < lat_min || p.lat > lat_max) return false;
  double span = lon_span();
  if (span >= 360.0) return true;
  double d = std::fmod(p.lon - lon_min, 360.0);
  if (d < 0.0) d += 360.0;
  return d <= span + 1e-12;
}

LonLat GeoBox::center() const {
  return LonLat(lon_min + 0.5 * lon_span(), 0.5 * (lat_min + lat_max));
}

namespace {

// Shoelace area in the lon/lat plane; positive for counterclockwise rings.
double ring_signed_area(const OceanMask::Ring& ring) {
  double a = 0.0;
  std::size_t n = ring.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    a += ring[j].lon * ring[i].lat - ring[i].lon * ring[j].lat;
  }
  return 0.5 * a;
}

bool point_on_segment(const LonLat& p, const LonLat& a, const LonLat& b) {
  double cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
  double scale = std::max({1.0, std::abs(b.lon - a.lon), std::abs(b.lat - a.lat)});
  if (std::abs(cross) > 1e-12 * scale) return false;
  double dot = (p.lon - a.lon) * (b.lon - a.lon) + (p.lat - a.lat) * (b.lat - a.lat);
  double len2 = (b.lon - a.lon) * (b.lon - a.lon) + (b.lat - a.lat) * (b.lat - a.lat);
  return dot >= -1e-12 && dot <= len2 + 1e-12;
}

// Even-odd ray cast. Returns +1 inside, 0 on the boundary, -1 outside.
int ring_classify(const LonLat& p, const OceanMask::Ring& ring) {
  std::size_t n = ring.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if (point_on_segment(p, ring[j], ring[i])) return 0;
    bool cross = (ring[i].lat > p.lat) != (ring[j].lat > p.lat);
    if (cross) {
      double x = ring[j].lon + (p.lat - ring[j].lat) / (ring[i].lat - ring[j].lat) *
                                   (ring[i].lon - ring[j].lon);
      if (p.lon < x) inside = !inside;
    }
  }
  return inside ? 1 : -1;
}

}  // namespace

bool point_in_ring(const LonLat& p, const std::vector<LonLat>& ring) {
  if (ring.size() < 3) throw ValidationError("ring needs at least 3 vertices");
  return ring_classify(p, ring) >= 0;
}

OceanMask::OceanMask() = default;

OceanMask OceanMask::all_ocean() { return OceanMask(); }

OceanMask OceanMask::all_land() {
  OceanMask m;
  m.kind_ = Kind::kAllLand;
  return m;
}

OceanMask OceanMask::from_rings(std::vector<Ring> rings, bool rings_enclose_ocean) {
  for (const auto& r : rings)
    if (r.size() < 3) throw ValidationError("polygon ring needs at least 3 vertices");
  OceanMask m;
  m.kind_ = Kind::kPolygons;
  m.rings_ = std::move(rings);
  m.rings_enclose_ocean_ = rings_enclose_ocean;
  return m;
}

OceanMask OceanMask::from_polygon_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mask file: " + path);
  std::vector<Ring> rings;
  Ring current;
  std::string line;
  auto flush = [&]() {
    if (!current.empty()) {
      if (current.size() < 3)
        throw ValidationError("mask ring with fewer than 3 vertices in " + path);
      rings.push_back(std::move(current));
      current.clear();
    }
  };
  while (std::getline(in, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double lon, lat;
    if (ls >> lon >> lat) {
      current.emplace_back(lon, lat);
    } else {
      flush();
    }
  }
  flush();
  if (rings.empty()) throw ValidationError("mask file has no rings: " + path);
  bool first_ccw = ring_signed_area(rings.front()) > 0.0;
  return from_rings(std::move(rings), /*rings_enclose_ocean=*/first_ccw);
}

bool OceanMask::polygon_query_is_ocean(const LonLat& p) const {
  bool inside_any = false;
  int parity = 0;
  for (const auto& ring : rings_) {
    int c = ring_classify(p, ring);
    if (c == 0) return false;  // boundary resolves to land
    if (c > 0) parity ^= 1;
  }
  inside_any = parity != 0;
  return rings_enclose_ocean_ ? inside_any : !inside_any;
}

bool OceanMask::is_ocean(const LonLat& p) const {
  if (!bitmap_.empty()) {
    int ix = static_cast<int>(std::floor((p.lon + 180.0) / res_deg_));
    int iy = static_cast<int>(std::floor((p.lat + 90.0) / res_deg_));
    ix = std::clamp(ix, 0, nx_ - 1);
    iy = std::clamp(iy, 0, ny_ - 1);
    return bitmap_[static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx_) +
                   static_cast<std::size_t>(ix)] != 0;
  }
  switch (kind_) {
    case Kind::kAllOcean:
      return true;
    case Kind::kAllLand:
      return false;
    case Kind::kPolygons:
      return polygon_query_is_ocean(p);
  }
  return true;
}

OceanMask OceanMask::rasterized(double resolution_deg) const {
  if (!(resolution_deg > 0.0)) throw ValidationError("raster resolution must be positive");
  OceanMask out = *this;
  out.res_deg_ = resolution_deg;
  out.nx_ = static_cast<int>(std::ceil(360.0 / resolution_deg));
  out.ny_ = static_cast<int>(std::ceil(180.0 / resolution_deg));
  out.bitmap_.assign(static_cast<std::size_t>(out.nx_) * static_cast<std::size_t>(out.ny_), 0);
  for (int iy = 0; iy < out.ny_; ++iy) {
    double lat = std::min(-90.0 + (iy + 0.5) * resolution_deg, 90.0);
    for (int ix = 0; ix < out.nx_; ++ix) {
      double lon = wrap_lon(-180.0 + (ix + 0.5) * resolution_deg);
      bool ocean = this->bitmap_.empty()
                       ? (kind_ == Kind::kAllOcean ||
                          (kind_ == Kind::kPolygons && polygon_query_is_ocean(LonLat(lon, lat))))
                       : this->is_ocean(LonLat(lon, lat));
      out.bitmap_[static_cast<std::size_t>(iy) * static_cast<std::size_t>(out.nx_) +
                  static_cast<std::size_t>(ix)] = ocean ? 1 : 0;
    }
  }
  return out;
}

std::vector<LonLat> make_grid(const GeoBox& box, double step_deg, const OceanMask& mask) {
  if (!(step_deg > 0.0)) throw ValidationError("grid step must be positive");
  if (!(box.lat_min < box.lat_max)) throw ValidationError("box needs lat_min < lat_max");
  double span = box.lon_span();
  int n_lat = static_cast<int>(std::floor((box.lat_max - box.lat_min) / step_deg + 1e-9)) + 1;
  int n_lon = static_cast<int>(std::floor(span / step_deg + 1e-9)) + 1;
  // Drop the wrapped duplicate of the first column on a full circle.
  if ((n_lon - 1) * step_deg >= 360.0 - 1e-9) --n_lon;
  std::vector<LonLat> out;
  out.reserve(static_cast<std::size_t>(n_lat) * static_cast<std::size_t>(n_lon));
  for (int i = 0; i < n_lat; ++i) {
    double lat = box.lat_min + i * step_deg;
    for (int j = 0; j < n_lon; ++j) {
      LonLat p(box.lon_min + j * step_deg, lat);
      if (mask.is_ocean(p)) out.push_back(p);
    }
  }
  return out;
}

namespace {

struct IcoMesh {
  std::vector<Point3> verts;
  std::vector<std::array<int, 3>> faces;
};

Point3 scaled_to_radius(double x, double y, double z, double r) {
  double n = std::sqrt(x * x + y * y + z * z);
  return {x * r / n, y * r / n, z * r / n};
}

IcoMesh base_icosahedron(double r) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  IcoMesh m;
  const double raw[12][3] = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                             {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                             {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
  for (const auto& v : raw) m.verts.push_back(scaled_to_radius(v[0], v[1], v[2], r));
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  return m;
}

void subdivide(IcoMesh& m, double r) {
  std::unordered_map<std::uint64_t, int> midpoint;
  auto mid = [&](int a, int b) {
    std::uint64_t key = (static_cast<std::uint64_t>(std::min(a, b)) << 32) |
                        static_cast<std::uint64_t>(std::max(a, b));
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Point3& pa = m.verts[static_cast<std::size_t>(a)];
    const Point3& pb = m.verts[static_cast<std::size_t>(b)];
    int idx = static_cast<int>(m.verts.size());
    m.verts.push_back(
        scaled_to_radius(pa.x + pb.x, pa.y + pb.y, pa.z + pb.z, r));
    midpoint.emplace(key, idx);
    return idx;
  };
  std::vector<std::array<int, 3>> next;
  next.reserve(m.faces.size() * 4);
  for (const auto& f : m.faces) {
    int ab = mid(f[0], f[1]);
    int bc = mid(f[1], f[2]);
    int ca = mid(f[2], f[0]);
    next.push_back({f[0], ab, ca});
    next.push_back({f[1], bc, ab});
    next.push_back({f[2], ca, bc});
    next.push_back({ab, bc, ca});
  }
  m.faces = std::move(next);
}

LonLat point3_to_lonlat(const Point3& p) {
  double lat = rad2deg(std::asin(std::clamp(p.z / std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z),
                                            -1.0, 1.0)));
  double lon = rad2deg(std::atan2(p.y, p.x));
  return LonLat(lon, lat);
}

}  // namespace

std::vector<LonLat> icosahedral_centers(const GeoBox& domain, double target_spacing_km,
                                        const OceanMask& mask, double radius_km) {
  if (!(target_spacing_km > 0.0)) throw ValidationError("target spacing must be positive");
  // Edge arc of the base icosahedron; each subdivision halves the spacing.
  double arc0 = radius_km * std::acos(1.0 / std::sqrt(5.0));
  int level = static_cast<int>(std::llround(std::log2(std::max(arc0 / target_spacing_km, 1.0))));
  level = std::clamp(level, 0, 8);
  IcoMesh mesh = base_icosahedron(radius_km);
  for (int k = 0; k < level; ++k) subdivide(mesh, radius_km);

  std::vector<LonLat> in_box;
  for (const auto& v : mesh.verts) {
    LonLat ll = point3_to_lonlat(v);
    if (domain.contains(ll)) in_box.push_back(ll);
  }
  if (in_box.empty()) in_box.push_back(domain.center());  // spacing too coarse for the box

  std::vector<LonLat> out;
  for (const auto& ll : in_box)
    if (mask.is_ocean(ll)) out.push_back(ll);
  if (out.empty()) log_warn("icosahedral_centers: mask excludes every candidate center");
  return out;
}

}  // namespace mragp
