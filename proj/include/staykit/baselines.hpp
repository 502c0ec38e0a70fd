#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "staykit/traj.hpp"

namespace staykit::baselines {

struct KangParams {
  double d_max = 50.0;   // meters, centroid acceptance radius
  double t_min = 300.0;  // seconds, minimum stay duration
};

struct CbSmotParams {
  double area_radius = 50.0;  // meters
  double min_time = 300.0;    // seconds
};

struct DStarParams {
  double radius = 50.0;          // meters, centroid acceptance radius
  double min_time = 300.0;       // seconds, minimum stay duration
  std::size_t outlier_tolerance = 1;  // consecutive out-of-radius points skipped
  double merge_gap = 120.0;      // seconds, stays closer than this merge
};

// Threshold clustering: grow a cluster while each new point stays within
// d_max of the running centroid; a broken cluster becomes a stay iff its
// duration reaches t_min.
traj::SegmentationResult kang_extract(const traj::Trajectory& traj, const KangParams& params);

// Pointwise stay flags behind kang_extract (1 = stay); used by the oracle
// equivalence tests.
std::vector<int> kang_point_labels(const traj::Trajectory& traj, const KangParams& params);

// Speed-based density clustering: a point is core when its consecutive
// neighborhood within area_radius spans at least min_time; runs of
// core/reachable points with enough total duration become stays.
traj::SegmentationResult cbsmot_extract(const traj::Trajectory& traj,
                                        const CbSmotParams& params);
std::vector<int> cbsmot_point_labels(const traj::Trajectory& traj, const CbSmotParams& params);

// Along-trajectory density clustering that skips up to outlier_tolerance
// consecutive out-of-radius points; enclosed outliers are absorbed into the
// stay, and stays separated by less than merge_gap merge.
traj::SegmentationResult dstar_extract(const traj::Trajectory& traj, const DStarParams& params);
std::vector<int> dstar_point_labels(const traj::Trajectory& traj, const DStarParams& params);

// --- hyperparameter search ------------------------------------------------

enum class Algorithm { kang, cbsmot, dstar };

const char* algorithm_name(Algorithm algo);

// One candidate constellation, algorithm-dependent.
struct ParamSet {
  Algorithm algo = Algorithm::kang;
  KangParams kang;
  CbSmotParams cbsmot;
  DStarParams dstar;

  std::string text() const;  // canonical display form
};

// 3x3 grid for the threshold methods.
std::vector<ParamSet> kang_grid(const std::vector<double>& d_max = {25.0, 50.0, 100.0},
                                const std::vector<double>& t_min = {180.0, 300.0, 600.0});
std::vector<ParamSet> cbsmot_grid(const std::vector<double>& radius = {25.0, 50.0, 100.0},
                                  const std::vector<double>& min_time = {180.0, 300.0, 600.0});
// Ten seeded random constellations.
std::vector<ParamSet> dstar_random(std::uint64_t seed, std::size_t count = 10);

struct LabeledTrajectory {
  traj::Trajectory trajectory;
  std::vector<int> labels;  // per point: 1 stay, 0 non-stay, -1 unlabeled
};

struct FoldOutcome {
  std::size_t fold = 0;
  ParamSet chosen;
  double f1 = 0.0;        // on the fold's test split
  double accuracy = 0.0;
  double precision = 0.0;
  bool has_precision = false;
  double recall = 0.0;
};

struct SearchResult {
  std::vector<FoldOutcome> folds;
  // Test predictions pooled over all folds, aligned with pooled labels.
  std::vector<int> pooled_predictions;
  std::vector<int> pooled_labels;
};

// Participant-based cross-validated search: per fold, the candidate with the
// best F1 (non-stay positive) on the training participants is applied to the
// held-out participants. Throws when there are fewer participants than folds.
SearchResult hyperparameter_search(const std::vector<LabeledTrajectory>& dataset,
                                   const std::vector<ParamSet>& candidates,
                                   std::size_t folds = 5, std::uint64_t seed = 42);

std::vector<int> extract_point_labels(Algorithm algo, const traj::Trajectory& trajectory,
                                      const ParamSet& params);

}  // namespace staykit::baselines
