#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace staykit::geo {

struct XY {
  double x = 0.0;
  double y = 0.0;
};

struct UtmZone {
  int zone = 50;
  bool north = true;
};

// Zone whose 6-degree band contains the longitude.
int zone_from_lon(double lon_deg);

double central_meridian_deg(int zone);

// WGS84 UTM forward projection (Gauss-Krueger series in conformal latitude,
// terms through n^6; sub-millimetre inside the zone). Throws input_error on
// out-of-range coordinates or an invalid zone.
XY project(double lat_deg, double lon_deg, UtmZone zone);

// Inverse projection; recovers lat/lon from the series plus a Newton solve
// for the geodetic latitude.
void unproject(XY p, UtmZone zone, double& lat_deg, double& lon_deg);

struct BBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

  bool contains(XY p) const {
    return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
  }
  bool intersects(const BBox& o) const {
    return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
  }
  void expand(double d) {
    min_x -= d;
    min_y -= d;
    max_x += d;
    max_y += d;
  }
};

BBox bbox_of(std::span<const XY> pts);

// Boundary-inclusive even-odd point-in-polygon test. `ring` is closed
// (first vertex repeated last) or treated as implicitly closed.
bool point_in_ring(XY p, std::span<const XY> ring, double boundary_eps = 1e-9);

// abs(shoelace)/2 on projected coordinates.
double ring_area(std::span<const XY> ring);

double point_segment_distance(XY p, XY a, XY b);

// True iff segment ab intersects the axis-aligned square of side 2*half
// centered at c (Liang-Barsky clip). Touching the boundary counts.
bool segment_intersects_box(XY a, XY b, XY c, double half);

// Uniform-grid index over item bounding boxes. Queries return candidate id
// supersets (never miss a true intersection); exact tests are the caller's.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  explicit SpatialGrid(const std::vector<BBox>& boxes);

  // Ids of all boxes whose covering cells contain p, sorted, deduplicated.
  void query_point(XY p, std::vector<std::uint32_t>& out) const;
  // Ids of all boxes whose covering cells intersect `box`.
  void query_box(const BBox& box, std::vector<std::uint32_t>& out) const;

  std::size_t size() const { return n_items_; }

 private:
  void cell_range(const BBox& box, std::size_t& cx0, std::size_t& cy0, std::size_t& cx1,
                  std::size_t& cy1) const;

  BBox extent_{};
  double cell_w_ = 1.0, cell_h_ = 1.0;
  std::size_t nx_ = 0, ny_ = 0;
  std::size_t n_items_ = 0;
  std::vector<std::vector<std::uint32_t>> cells_;
};

}  // namespace staykit::geo
