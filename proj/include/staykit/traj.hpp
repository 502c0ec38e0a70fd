#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "staykit/geo.hpp"

namespace staykit::traj {

struct LocationPoint {
  double t = 0.0;        // seconds since epoch
  double x = 0.0;        // meters east (projected)
  double y = 0.0;        // meters north (projected)
  double raw_lat = 0.0;  // degrees, retained for OSM queries
  double raw_lon = 0.0;
};

struct Trajectory {
  std::string user_id;
  std::vector<LocationPoint> points;
};

struct FeatureRow {
  double x = 0.0;
  double y = 0.0;
  double dt = 0.0;
  double v = 0.0;
};

struct WindowOrigin {
  std::string user_id;
  std::size_t first_point = 0;
};

// Fixed-length model input: n feature rows plus aligned label/weight/mask
// channels. Padded tail rows have mask=false and weight 0.
struct SequenceWindow {
  std::vector<FeatureRow> rows;
  std::vector<double> labels;
  std::vector<double> weights;
  std::vector<bool> mask;
  WindowOrigin origin;

  std::size_t size() const { return rows.size(); }
  std::size_t masked_in_count() const;
};

struct StandardizationStats {
  double mean_dt = 0.0, std_dt = 1.0;  // seconds
  double mean_v = 0.0, std_v = 1.0;    // m/s
  double std_xy = 1.0;                 // joint std of centered x and y, meters

  void validate() const;
};

constexpr double kSegmentEndOpen = std::numeric_limits<double>::infinity();

struct Segment {
  double t_start = 0.0;
  double t_end = kSegmentEndOpen;
  int class_id = 0;  // 0 = non-stay, 1 = stay; 0..M-1 for mode segmentation
};

struct SegmentationResult {
  std::vector<Segment> segments;

  bool empty() const { return segments.empty(); }
};

// --- operations ---------------------------------------------------------

struct CleaningConfig {
  double max_gap_s = 1200.0;    // split when consecutive gap exceeds this
  double max_speed_mps = 350.0; // drop points implying a faster jump
};

struct CleaningReport {
  std::size_t points_in = 0;
  std::size_t dropped_speed = 0;
  std::size_t dropped_duplicate_ts = 0;
  std::size_t splits = 0;
};

// Removes speed outliers and duplicate timestamps, then splits at gaps
// larger than max_gap. Order preserved; no point appears twice.
std::vector<Trajectory> clean_and_split(const Trajectory& traj, const CleaningConfig& cfg,
                                        CleaningReport* report = nullptr);

// Raw per-point features. First point: dt = median trajectory dt, v = 0.
// Throws input_error on duplicate timestamps.
std::vector<FeatureRow> compute_features(const Trajectory& traj);

// Consecutive non-overlapping windows of length n; the final partial window
// is zero-padded with mask=false / weight 0. x,y are centered per window on
// the masked-in mean.
std::vector<SequenceWindow> chunk(const std::vector<FeatureRow>& features,
                                  const std::vector<double>& labels,
                                  const std::vector<double>& weights, std::size_t n,
                                  const WindowOrigin& base);

StandardizationStats compute_standardization_stats(const std::vector<SequenceWindow>& windows);

// dt,v -> (value-mean)/std; x,y jointly divided by std_xy.
void standardize(std::vector<SequenceWindow>& windows, const StandardizationStats& stats);
void unstandardize(std::vector<SequenceWindow>& windows, const StandardizationStats& stats);

// Rotates the (already centered) x,y rows by an angle drawn uniformly from
// [0, 2*pi) using the given seed. Returns the angle used.
double random_rotate(SequenceWindow& window, std::uint64_t rng_seed);
void rotate_window(SequenceWindow& window, double angle);

// Maximal same-class runs of pointwise labels become contiguous segments.
// First segment starts at timestamps[0]; the last is open-ended.
SegmentationResult group_labels(const std::vector<double>& timestamps,
                                const std::vector<int>& class_ids);

// Stay/non-stay grouping from stay probabilities; probability >= threshold
// classifies as stay.
SegmentationResult group_segments(const std::vector<double>& timestamps,
                                  const std::vector<double>& probs, double threshold = 0.5);

// Pointwise class at each timestamp according to a segmentation.
std::vector<int> segments_to_labels(const SegmentationResult& seg,
                                    const std::vector<double>& timestamps);

// --- persistence (cleaned-trajectory TSV) --------------------------------
// One record per line: user_id, t (3 decimals), lat, lon, x, y.

void write_trajectories_tsv(std::ostream& out, const std::vector<Trajectory>& trajectories);

// Rows regroup into trajectories at user change or gap > max_gap.
std::vector<Trajectory> read_trajectories_tsv(std::istream& in, double max_gap_s = 1200.0);

}  // namespace staykit::traj
