#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "staykit/traj.hpp"

namespace staykit::ingest {

// --- GeoLife ---------------------------------------------------------------

struct GeoLifeTrajectory {
  traj::Trajectory trajectory;  // raw lat/lon populated; x,y left at 0
  std::vector<std::optional<std::string>> modes;  // per point, from labels.txt
};

struct GeoLifeReport {
  std::size_t users = 0;
  std::size_t files = 0;
  std::size_t points = 0;
  std::size_t skipped_lines = 0;
  std::size_t dropped_non_ascending = 0;
  std::size_t annotated_points = 0;
  double min_dt = 0.0, max_dt = 0.0;  // observed sample-rate range, seconds
};

// Reads Data/<user>/Trajectory/*.plt (6 header lines, then lat,lon,flag,
// alt,days,date,time) plus optional Data/<user>/labels.txt mode ranges.
// One trajectory per PLT file; files and users in lexicographic order.
std::vector<GeoLifeTrajectory> parse_geolife(const std::string& root,
                                             GeoLifeReport* report = nullptr);

// Epoch seconds for "yyyy-mm-dd" + "hh:mm:ss" (or "yyyy/mm/dd"), UTC.
double parse_datetime(const std::string& date, const std::string& time);

// Normalizes a labels.txt mode to the canonical vocabulary (e.g. "walk" ->
// "walking"); returns the input unchanged when unknown.
std::string normalize_mode(const std::string& mode);

// --- ExtraSensory ------------------------------------------------------------

struct EsRecord {
  std::string user_id;
  double t = 0.0;
  double lat = 0.0, lon = 0.0;
  std::set<std::string> activities;
};

struct EsReport {
  std::size_t users = 0;
  std::size_t records = 0;
  std::size_t skipped_lines = 0;
};

// Per-user CSV (optionally .csv.gz when zlib is available) with columns
// timestamp, latitude, longitude and any number of label:NAME columns whose
// value 1 marks an active self-report.
std::vector<EsRecord> parse_extrasensory(const std::string& root, EsReport* report = nullptr);

enum class SrClass { stay, non_stay, ignore };

// Activity -> class mapping; unknown activities are ignored.
struct ActivityMap {
  std::map<std::string, SrClass> rules;

  static ActivityMap defaults();
  // One rule per line: "activity<TAB>stay|non-stay|ignore".
  static ActivityMap from_file(const std::string& path);
  SrClass classify(const std::string& activity) const;
};

struct LabeledPoint {
  std::string user_id;
  double t = 0.0;
  double lat = 0.0, lon = 0.0;
  std::optional<int> label;  // 1 stay, 0 non-stay; empty = unlabeled
};

// Unanimity rule: a record is labeled only when every mapped (non-ignored)
// activity agrees on a class.
std::vector<LabeledPoint> derive_es_labels(const std::vector<EsRecord>& records,
                                           const ActivityMap& mapping);

// Removes the stay label from points faster than the mean velocity of
// non-stay points (threshold computed once, before any removal). Returns the
// number of labels removed.
std::size_t remove_suspicious_stays(std::vector<LabeledPoint>& points,
                                    const std::vector<double>& velocities);

// --- interpolation ----------------------------------------------------------

struct InterpolationResult {
  traj::Trajectory dense;
  std::vector<std::size_t> index_map;  // original point index -> dense index
};

// Linear interpolation at fixed ticks (default 0.5 Hz) between consecutive
// points; originals are retained exactly.
InterpolationResult interpolate(const traj::Trajectory& trajectory, double rate_hz = 0.5);

}  // namespace staykit::ingest
