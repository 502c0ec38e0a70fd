#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>

#include "staykit/common.hpp"
#include "staykit/traj.hpp"

namespace staykit::traj {

std::size_t SequenceWindow::masked_in_count() const {
  std::size_t c = 0;
  for (bool m : mask) c += m ? 1 : 0;
  return c;
}

void StandardizationStats::validate() const {
  if (!(std_dt > 0.0) || !(std_v > 0.0) || !(std_xy > 0.0))
    throw input_error("standardization stats: all std values must be strictly positive");
}

std::vector<Trajectory> clean_and_split(const Trajectory& traj, const CleaningConfig& cfg,
                                        CleaningReport* report) {
  CleaningReport local;
  local.points_in = traj.points.size();

  // Pass 1: drop duplicate-timestamp points and speed outliers, measuring
  // speed against the previous kept point.
  std::vector<LocationPoint> kept;
  kept.reserve(traj.points.size());
  for (const LocationPoint& p : traj.points) {
    if (kept.empty()) {
      kept.push_back(p);
      continue;
    }
    const LocationPoint& prev = kept.back();
    const double dt = p.t - prev.t;
    if (dt <= 0.0) {
      ++local.dropped_duplicate_ts;
      continue;
    }
    const double v = std::hypot(p.x - prev.x, p.y - prev.y) / dt;
    if (v > cfg.max_speed_mps) {
      ++local.dropped_speed;
      continue;
    }
    kept.push_back(p);
  }

  // Pass 2: split at gaps.
  std::vector<Trajectory> out;
  Trajectory current;
  current.user_id = traj.user_id;
  for (const LocationPoint& p : kept) {
    if (!current.points.empty() && p.t - current.points.back().t > cfg.max_gap_s) {
      out.push_back(std::move(current));
      current = Trajectory{traj.user_id, {}};
      ++local.splits;
    }
    current.points.push_back(p);
  }
  if (!current.points.empty()) out.push_back(std::move(current));

  if (report) *report = local;
  return out;
}

std::vector<FeatureRow> compute_features(const Trajectory& traj) {
  const auto& pts = traj.points;
  if (pts.size() < 2) throw input_error("compute_features: trajectory needs >= 2 points");

  std::vector<double> dts;
  dts.reserve(pts.size() - 1);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dt = pts[i].t - pts[i - 1].t;
    if (dt <= 0.0) throw input_error("compute_features: duplicate or descending timestamps");
    dts.push_back(dt);
  }
  std::vector<double> sorted = dts;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t h = sorted.size() / 2;
  const double median_dt =
      sorted.size() % 2 == 1 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);

  std::vector<FeatureRow> rows(pts.size());
  rows[0] = {pts[0].x, pts[0].y, median_dt, 0.0};
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dt = dts[i - 1];
    const double dist = std::hypot(pts[i].x - pts[i - 1].x, pts[i].y - pts[i - 1].y);
    rows[i] = {pts[i].x, pts[i].y, dt, dist / dt};
  }
  return rows;
}

std::vector<SequenceWindow> chunk(const std::vector<FeatureRow>& features,
                                  const std::vector<double>& labels,
                                  const std::vector<double>& weights, std::size_t n,
                                  const WindowOrigin& base) {
  if (n == 0) throw input_error("chunk: window length must be positive");
  if (labels.size() != features.size() || weights.size() != features.size())
    throw input_error("chunk: feature/label/weight lengths differ");

  std::vector<SequenceWindow> out;
  for (std::size_t start = 0; start < features.size(); start += n) {
    const std::size_t count = std::min(n, features.size() - start);
    SequenceWindow w;
    w.rows.assign(n, FeatureRow{});
    w.labels.assign(n, 0.0);
    w.weights.assign(n, 0.0);
    w.mask.assign(n, false);
    w.origin = {base.user_id, base.first_point + start};
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      w.rows[i] = features[start + i];
      w.labels[i] = labels[start + i];
      w.weights[i] = weights[start + i];
      w.mask[i] = true;
      mx += w.rows[i].x;
      my += w.rows[i].y;
    }
    mx /= static_cast<double>(count);
    my /= static_cast<double>(count);
    for (std::size_t i = 0; i < count; ++i) {
      w.rows[i].x -= mx;
      w.rows[i].y -= my;
    }
    out.push_back(std::move(w));
  }
  return out;
}

StandardizationStats compute_standardization_stats(const std::vector<SequenceWindow>& windows) {
  double sum_dt = 0.0, sum_v = 0.0;
  std::size_t count = 0;
  for (const auto& w : windows)
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w.mask[i]) {
        sum_dt += w.rows[i].dt;
        sum_v += w.rows[i].v;
        ++count;
      }
  if (count == 0) throw input_error("standardization stats: no masked-in points");
  const double n = static_cast<double>(count);

  StandardizationStats s;
  s.mean_dt = sum_dt / n;
  s.mean_v = sum_v / n;
  double var_dt = 0.0, var_v = 0.0, sq_xy = 0.0;
  for (const auto& w : windows)
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w.mask[i]) {
        var_dt += (w.rows[i].dt - s.mean_dt) * (w.rows[i].dt - s.mean_dt);
        var_v += (w.rows[i].v - s.mean_v) * (w.rows[i].v - s.mean_v);
        sq_xy += w.rows[i].x * w.rows[i].x + w.rows[i].y * w.rows[i].y;
      }
  s.std_dt = std::sqrt(var_dt / n);
  s.std_v = std::sqrt(var_v / n);
  // Windows are centered, so the joint mean of x,y is exactly zero.
  s.std_xy = std::sqrt(sq_xy / (2.0 * n));
  if (s.std_dt <= 0.0) s.std_dt = 1.0;
  if (s.std_v <= 0.0) s.std_v = 1.0;
  if (s.std_xy <= 0.0) s.std_xy = 1.0;
  return s;
}

void standardize(std::vector<SequenceWindow>& windows, const StandardizationStats& stats) {
  stats.validate();
  for (auto& w : windows)
    for (auto& r : w.rows) {
      r.dt = (r.dt - stats.mean_dt) / stats.std_dt;
      r.v = (r.v - stats.mean_v) / stats.std_v;
      r.x /= stats.std_xy;
      r.y /= stats.std_xy;
    }
}

void unstandardize(std::vector<SequenceWindow>& windows, const StandardizationStats& stats) {
  stats.validate();
  for (auto& w : windows)
    for (auto& r : w.rows) {
      r.dt = r.dt * stats.std_dt + stats.mean_dt;
      r.v = r.v * stats.std_v + stats.mean_v;
      r.x *= stats.std_xy;
      r.y *= stats.std_xy;
    }
}

void rotate_window(SequenceWindow& window, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  for (auto& r : window.rows) {
    const double x = r.x, y = r.y;
    r.x = c * x - s * y;
    r.y = s * x + c * y;
  }
}

double random_rotate(SequenceWindow& window, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  const double angle = rng.next_double() * 2.0 * 3.14159265358979323846;
  rotate_window(window, angle);
  return angle;
}

SegmentationResult group_labels(const std::vector<double>& timestamps,
                                const std::vector<int>& class_ids) {
  if (timestamps.size() != class_ids.size())
    throw input_error("group_labels: timestamp/class length mismatch");
  SegmentationResult result;
  if (timestamps.empty()) return result;
  for (std::size_t i = 1; i < timestamps.size(); ++i)
    if (!(timestamps[i] > timestamps[i - 1]))
      throw input_error("group_labels: timestamps must be strictly ascending");

  std::size_t run_start = 0;
  for (std::size_t i = 1; i <= timestamps.size(); ++i) {
    if (i == timestamps.size() || class_ids[i] != class_ids[run_start]) {
      Segment seg;
      seg.t_start = timestamps[run_start];
      seg.t_end = i == timestamps.size() ? kSegmentEndOpen : timestamps[i];
      seg.class_id = class_ids[run_start];
      result.segments.push_back(seg);
      run_start = i;
    }
  }
  return result;
}

SegmentationResult group_segments(const std::vector<double>& timestamps,
                                  const std::vector<double>& probs, double threshold) {
  if (timestamps.size() != probs.size())
    throw input_error("group_segments: timestamp/prob length mismatch");
  std::vector<int> classes(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) classes[i] = probs[i] >= threshold ? 1 : 0;
  return group_labels(timestamps, classes);
}

std::vector<int> segments_to_labels(const SegmentationResult& seg,
                                    const std::vector<double>& timestamps) {
  std::vector<int> out(timestamps.size(), 0);
  std::size_t si = 0;
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    while (si + 1 < seg.segments.size() && timestamps[i] >= seg.segments[si].t_end) ++si;
    if (si < seg.segments.size()) out[i] = seg.segments[si].class_id;
  }
  return out;
}

void write_trajectories_tsv(std::ostream& out, const std::vector<Trajectory>& trajectories) {
  char buf[256];
  for (const auto& traj : trajectories) {
    for (const auto& p : traj.points) {
      std::snprintf(buf, sizeof(buf), "%s\t%.3f\t%.7f\t%.7f\t%.3f\t%.3f\n",
                    traj.user_id.c_str(), p.t, p.raw_lat, p.raw_lon, p.x, p.y);
      out << buf;
    }
  }
}

std::vector<Trajectory> read_trajectories_tsv(std::istream& in, double max_gap_s) {
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 6) throw input_error("trajectory tsv: expected 6 fields per line");
    LocationPoint p;
    std::string user(fields[0]);
    p.t = std::stod(std::string(fields[1]));
    p.raw_lat = std::stod(std::string(fields[2]));
    p.raw_lon = std::stod(std::string(fields[3]));
    p.x = std::stod(std::string(fields[4]));
    p.y = std::stod(std::string(fields[5]));
    const bool start_new = out.empty() || out.back().user_id != user ||
                           out.back().points.empty() ||
                           p.t - out.back().points.back().t > max_gap_s ||
                           p.t <= out.back().points.back().t;
    if (start_new) out.push_back(Trajectory{user, {}});
    out.back().points.push_back(p);
  }
  return out;
}

}  // namespace staykit::traj
