#include <algorithm>
#include <cmath>

#include "staykit/geo.hpp"

namespace staykit::geo {

BBox bbox_of(std::span<const XY> pts) {
  BBox b;
  if (pts.empty()) return b;
  b.min_x = b.max_x = pts[0].x;
  b.min_y = b.max_y = pts[0].y;
  for (const XY& p : pts) {
    b.min_x = std::min(b.min_x, p.x);
    b.max_x = std::max(b.max_x, p.x);
    b.min_y = std::min(b.min_y, p.y);
    b.max_y = std::max(b.max_y, p.y);
  }
  return b;
}

double point_segment_distance(XY p, XY a, XY b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) {
    t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
  }
  const double cx = a.x + t * dx, cy = a.y + t * dy;
  return std::hypot(p.x - cx, p.y - cy);
}

bool point_in_ring(XY p, std::span<const XY> ring, double boundary_eps) {
  std::size_t n = ring.size();
  if (n >= 2 && ring[0].x == ring[n - 1].x && ring[0].y == ring[n - 1].y) --n;
  if (n < 3) return false;

  // Boundary counts as inside.
  for (std::size_t i = 0; i < n; ++i) {
    const XY& a = ring[i];
    const XY& b = ring[(i + 1) % n];
    if (point_segment_distance(p, a, b) <= boundary_eps) return true;
  }

  // Even-odd ray cast toward +x.
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const XY& a = ring[i];
    const XY& b = ring[j];
    const bool crosses = (a.y > p.y) != (b.y > p.y);
    if (crosses && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) inside = !inside;
  }
  return inside;
}

double ring_area(std::span<const XY> ring) {
  std::size_t n = ring.size();
  if (n >= 2 && ring[0].x == ring[n - 1].x && ring[0].y == ring[n - 1].y) --n;
  if (n < 3) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    acc += ring[j].x * ring[i].y - ring[i].x * ring[j].y;
  }
  return std::abs(acc) * 0.5;
}

bool segment_intersects_box(XY a, XY b, XY c, double half) {
  // Liang-Barsky clip of the segment against the square.
  const double min_x = c.x - half, max_x = c.x + half;
  const double min_y = c.y - half, max_y = c.y + half;
  const double dx = b.x - a.x, dy = b.y - a.y;
  double t0 = 0.0, t1 = 1.0;

  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - min_x, max_x - a.x, a.y - min_y, max_y - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;  // parallel and outside this edge
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      if (r > t1) return false;
      t0 = std::max(t0, r);
    } else {
      if (r < t0) return false;
      t1 = std::min(t1, r);
    }
  }
  return t0 <= t1;
}

SpatialGrid::SpatialGrid(const std::vector<BBox>& boxes) : n_items_(boxes.size()) {
  if (boxes.empty()) return;
  extent_ = boxes[0];
  for (const BBox& b : boxes) {
    extent_.min_x = std::min(extent_.min_x, b.min_x);
    extent_.min_y = std::min(extent_.min_y, b.min_y);
    extent_.max_x = std::max(extent_.max_x, b.max_x);
    extent_.max_y = std::max(extent_.max_y, b.max_y);
  }
  const double w = std::max(extent_.max_x - extent_.min_x, 1e-9);
  const double h = std::max(extent_.max_y - extent_.min_y, 1e-9);
  const std::size_t target = static_cast<std::size_t>(std::ceil(std::sqrt(
      static_cast<double>(boxes.size()))));
  nx_ = std::clamp<std::size_t>(target, 1, 1024);
  ny_ = std::clamp<std::size_t>(target, 1, 1024);
  cell_w_ = w / static_cast<double>(nx_);
  cell_h_ = h / static_cast<double>(ny_);
  cells_.assign(nx_ * ny_, {});
  for (std::size_t id = 0; id < boxes.size(); ++id) {
    std::size_t cx0, cy0, cx1, cy1;
    cell_range(boxes[id], cx0, cy0, cx1, cy1);
    for (std::size_t cy = cy0; cy <= cy1; ++cy)
      for (std::size_t cx = cx0; cx <= cx1; ++cx)
        cells_[cy * nx_ + cx].push_back(static_cast<std::uint32_t>(id));
  }
}

void SpatialGrid::cell_range(const BBox& box, std::size_t& cx0, std::size_t& cy0,
                             std::size_t& cx1, std::size_t& cy1) const {
  auto clamp_cell = [](double v, std::size_t n) {
    if (v < 0.0) return std::size_t(0);
    const std::size_t c = static_cast<std::size_t>(v);
    return std::min(c, n - 1);
  };
  cx0 = clamp_cell((box.min_x - extent_.min_x) / cell_w_, nx_);
  cx1 = clamp_cell((box.max_x - extent_.min_x) / cell_w_, nx_);
  cy0 = clamp_cell((box.min_y - extent_.min_y) / cell_h_, ny_);
  cy1 = clamp_cell((box.max_y - extent_.min_y) / cell_h_, ny_);
}

void SpatialGrid::query_point(XY p, std::vector<std::uint32_t>& out) const {
  query_box(BBox{p.x, p.y, p.x, p.y}, out);
}

void SpatialGrid::query_box(const BBox& box, std::vector<std::uint32_t>& out) const {
  out.clear();
  if (n_items_ == 0 || !box.intersects(extent_)) return;
  std::size_t cx0, cy0, cx1, cy1;
  cell_range(box, cx0, cy0, cx1, cy1);
  for (std::size_t cy = cy0; cy <= cy1; ++cy)
    for (std::size_t cx = cx0; cx <= cx1; ++cx)
      out.insert(out.end(), cells_[cy * nx_ + cx].begin(), cells_[cy * nx_ + cx].end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

}  // namespace staykit::geo
