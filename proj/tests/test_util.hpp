#pragma once

// Shared oracles and generators for the test and acceptance suites. These
// deliberately re-derive results through independent formulations; they must
// never call the code paths they check.

#include <cmath>
#include <span>
#include <vector>

#include "staykit/common.hpp"
#include "staykit/geo.hpp"
#include "staykit/traj.hpp"

namespace testutil {

// --- UTM forward oracle: Snyder / USGS Professional Paper 1395 -------------
// Entirely separate series from the production Gauss-Krueger implementation;
// agreement is sub-millimetre inside a zone.
inline staykit::geo::XY snyder_utm_forward(double lat_deg, double lon_deg, int zone) {
  const double a = 6378137.0;
  const double f = 1.0 / 298.257223563;
  const double k0 = 0.9996;
  const double deg = 3.14159265358979323846 / 180.0;
  const double e2 = f * (2.0 - f);
  const double e4 = e2 * e2;
  const double e6 = e4 * e2;
  const double ep2 = e2 / (1.0 - e2);

  const double phi = lat_deg * deg;
  const double lam0 = ((zone - 1) * 6.0 - 180.0 + 3.0) * deg;
  const double dlam = lon_deg * deg - lam0;

  const double sin_phi = std::sin(phi);
  const double cos_phi = std::cos(phi);
  const double tan_phi = std::tan(phi);

  const double nu = a / std::sqrt(1.0 - e2 * sin_phi * sin_phi);
  const double t = tan_phi * tan_phi;
  const double c = ep2 * cos_phi * cos_phi;
  const double big_a = dlam * cos_phi;

  const double m =
      a * ((1.0 - e2 / 4.0 - 3.0 * e4 / 64.0 - 5.0 * e6 / 256.0) * phi -
           (3.0 * e2 / 8.0 + 3.0 * e4 / 32.0 + 45.0 * e6 / 1024.0) * std::sin(2.0 * phi) +
           (15.0 * e4 / 256.0 + 45.0 * e6 / 1024.0) * std::sin(4.0 * phi) -
           (35.0 * e6 / 3072.0) * std::sin(6.0 * phi));

  const double a2 = big_a * big_a;
  const double a3 = a2 * big_a;
  const double a4 = a3 * big_a;
  const double a5 = a4 * big_a;
  const double a6 = a5 * big_a;

  staykit::geo::XY out;
  out.x = 500000.0 +
          k0 * nu *
              (big_a + (1.0 - t + c) * a3 / 6.0 +
               (5.0 - 18.0 * t + t * t + 72.0 * c - 58.0 * ep2) * a5 / 120.0);
  out.y = k0 * (m + nu * tan_phi *
                        (a2 / 2.0 + (5.0 - t + 9.0 * c + 4.0 * c * c) * a4 / 24.0 +
                         (61.0 - 58.0 * t + t * t + 600.0 * c - 330.0 * ep2) * a6 / 720.0));
  return out;
}

// --- point-in-polygon oracle: even-odd ray cast along a random direction ---
// Brute-force segment-segment crossing counts; the ray is re-drawn whenever a
// vertex sits too close to it, so every counted crossing is proper.
inline double cross(staykit::geo::XY o, staykit::geo::XY a, staykit::geo::XY b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool oracle_point_in_ring(staykit::geo::XY p, std::span<const staykit::geo::XY> ring,
                                 staykit::Rng& rng) {
  std::size_t n = ring.size();
  if (n >= 2 && ring[0].x == ring[n - 1].x && ring[0].y == ring[n - 1].y) --n;
  if (n < 3) return false;

  // Boundary convention: on any edge counts as inside.
  for (std::size_t i = 0; i < n; ++i) {
    if (staykit::geo::point_segment_distance(p, ring[i], ring[(i + 1) % n]) <= 1e-9)
      return true;
  }

  double extent = 1.0;
  for (std::size_t i = 0; i < n; ++i)
    extent = std::max({extent, std::abs(ring[i].x - p.x), std::abs(ring[i].y - p.y)});

  for (int attempt = 0; attempt < 64; ++attempt) {
    const double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
    const staykit::geo::XY far{p.x + 4.0 * extent * std::cos(angle),
                               p.y + 4.0 * extent * std::sin(angle)};
    bool degenerate = false;
    for (std::size_t i = 0; i < n && !degenerate; ++i)
      if (staykit::geo::point_segment_distance(ring[i], p, far) < 1e-7) degenerate = true;
    if (degenerate) continue;

    std::size_t crossings = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = ring[i];
      const auto b = ring[(i + 1) % n];
      const double d1 = cross(p, far, a);
      const double d2 = cross(p, far, b);
      const double d3 = cross(a, b, p);
      const double d4 = cross(a, b, far);
      if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0))) ++crossings;
    }
    return crossings % 2 == 1;
  }
  return false;  // unreachable for sane geometry
}

// --- segment-box oracle: separating axis test -------------------------------
inline bool oracle_segment_box(staykit::geo::XY a, staykit::geo::XY b, staykit::geo::XY c,
                               double half) {
  // Axes: box x, box y, segment normal. Both shapes are convex.
  const double seg_min_x = std::min(a.x, b.x), seg_max_x = std::max(a.x, b.x);
  const double seg_min_y = std::min(a.y, b.y), seg_max_y = std::max(a.y, b.y);
  if (seg_max_x < c.x - half || seg_min_x > c.x + half) return false;
  if (seg_max_y < c.y - half || seg_min_y > c.y + half) return false;

  const double nx = -(b.y - a.y);
  const double ny = b.x - a.x;
  if (nx == 0.0 && ny == 0.0) return true;  // degenerate segment inside box
  const double seg_proj = nx * a.x + ny * a.y;
  const double center_proj = nx * c.x + ny * c.y;
  const double radius = half * (std::abs(nx) + std::abs(ny));
  return std::abs(center_proj - seg_proj) <= radius;
}

// --- kang oracle: maximal centroid-feasible windows, centroid recomputed ----
inline std::vector<int> oracle_kang_labels(const staykit::traj::Trajectory& traj, double d_max,
                                           double t_min) {
  const auto& pts = traj.points;
  std::vector<int> labels(pts.size(), 0);
  std::size_t s = 0;
  while (s < pts.size()) {
    std::size_t e = s;
    while (e + 1 < pts.size()) {
      long double cx = 0.0L, cy = 0.0L;
      for (std::size_t i = s; i <= e; ++i) {
        cx += pts[i].x;
        cy += pts[i].y;
      }
      cx /= static_cast<long double>(e - s + 1);
      cy /= static_cast<long double>(e - s + 1);
      const double dx = pts[e + 1].x - static_cast<double>(cx);
      const double dy = pts[e + 1].y - static_cast<double>(cy);
      if (std::sqrt(dx * dx + dy * dy) <= d_max) ++e;
      else break;
    }
    if (pts[e].t - pts[s].t >= t_min)
      for (std::size_t i = s; i <= e; ++i) labels[i] = 1;
    s = e + 1;
  }
  return labels;
}

// --- segmentation invariant checker -----------------------------------------
// Verifies every segmentation constraint: start at t1, open end, positive
// span, contiguity, class alternation.
inline void check_segmentation(const staykit::traj::SegmentationResult& result,
                               const std::vector<double>& timestamps, bool* ok,
                               std::string* why) {
  *ok = true;
  auto fail = [&](const std::string& msg) {
    *ok = false;
    if (why && why->empty()) *why = msg;
  };
  if (timestamps.empty()) {
    if (!result.segments.empty()) fail("empty input must give empty segmentation");
    return;
  }
  if (result.segments.empty()) {
    fail("non-empty input gave empty segmentation");
    return;
  }
  if (result.segments.front().t_start != timestamps.front())
    fail("first segment must start at t1");
  if (!std::isinf(result.segments.back().t_end)) fail("last segment must be open-ended");
  for (std::size_t i = 0; i < result.segments.size(); ++i) {
    const auto& s = result.segments[i];
    if (!(s.t_start < s.t_end)) fail("segment start must precede its end");
    if (i > 0) {
      if (result.segments[i - 1].t_end != s.t_start) fail("segments must be contiguous");
      if (result.segments[i - 1].class_id == s.class_id)
        fail("consecutive segments must alternate classes");
    }
  }
}

// --- random generators -------------------------------------------------------
inline staykit::traj::Trajectory random_trajectory(staykit::Rng& rng, std::size_t max_points,
                                                   double step_scale = 40.0) {
  staykit::traj::Trajectory t;
  t.user_id = "u" + std::to_string(rng.next_below(1000));
  const std::size_t n = 1 + rng.next_below(max_points);
  double time = rng.uniform(0.0, 1000.0);
  double x = rng.uniform(-500.0, 500.0);
  double y = rng.uniform(-500.0, 500.0);
  for (std::size_t i = 0; i < n; ++i) {
    staykit::traj::LocationPoint p;
    p.t = time;
    p.x = x;
    p.y = y;
    t.points.push_back(p);
    time += rng.uniform(1.0, 120.0);
    x += rng.uniform(-step_scale, step_scale);
    y += rng.uniform(-step_scale, step_scale);
  }
  return t;
}

// Star-shaped simple polygon around a center (closed ring).
inline std::vector<staykit::geo::XY> random_simple_ring(staykit::Rng& rng,
                                                        staykit::geo::XY center,
                                                        double max_radius,
                                                        std::size_t vertices = 8) {
  std::vector<staykit::geo::XY> ring;
  const double base = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
  for (std::size_t i = 0; i < vertices; ++i) {
    const double angle =
        base + 2.0 * 3.14159265358979323846 * static_cast<double>(i) /
                   static_cast<double>(vertices);
    const double r = rng.uniform(0.2 * max_radius, max_radius);
    ring.push_back({center.x + r * std::cos(angle), center.y + r * std::sin(angle)});
  }
  ring.push_back(ring.front());
  return ring;
}

}  // namespace testutil
