#include "staykit/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "staykit/common.hpp"
#include "staykit/eval.hpp"

namespace staykit::baselines {

namespace {

double dist(const traj::LocationPoint& a, const traj::LocationPoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

std::vector<double> timestamps_of(const traj::Trajectory& t) {
  std::vector<double> ts(t.points.size());
  for (std::size_t i = 0; i < t.points.size(); ++i) ts[i] = t.points[i].t;
  return ts;
}

traj::SegmentationResult labels_to_segments(const traj::Trajectory& t,
                                            const std::vector<int>& labels) {
  return traj::group_labels(timestamps_of(t), labels);
}

}  // namespace

std::vector<int> kang_point_labels(const traj::Trajectory& trajectory,
                                   const KangParams& params) {
  const auto& pts = trajectory.points;
  std::vector<int> labels(pts.size(), 0);
  if (pts.empty()) return labels;

  std::size_t start = 0;
  double sum_x = pts[0].x, sum_y = pts[0].y;
  std::size_t count = 1;

  auto finalize = [&](std::size_t end) {
    // [start, end) collected; stay iff the duration criterion holds.
    if (pts[end - 1].t - pts[start].t >= params.t_min)
      for (std::size_t i = start; i < end; ++i) labels[i] = 1;
  };

  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double cx = sum_x / static_cast<double>(count);
    const double cy = sum_y / static_cast<double>(count);
    if (std::hypot(pts[i].x - cx, pts[i].y - cy) <= params.d_max) {
      sum_x += pts[i].x;
      sum_y += pts[i].y;
      ++count;
    } else {
      finalize(i);
      start = i;
      sum_x = pts[i].x;
      sum_y = pts[i].y;
      count = 1;
    }
  }
  finalize(pts.size());
  return labels;
}

traj::SegmentationResult kang_extract(const traj::Trajectory& trajectory,
                                      const KangParams& params) {
  return labels_to_segments(trajectory, kang_point_labels(trajectory, params));
}

std::vector<int> cbsmot_point_labels(const traj::Trajectory& trajectory,
                                     const CbSmotParams& params) {
  const auto& pts = trajectory.points;
  const std::size_t n = pts.size();
  std::vector<int> in_cluster(n, 0);
  if (n == 0) return in_cluster;

  // Consecutive neighborhood of i: expand both ways while points remain
  // within area_radius of p_i.
  std::vector<std::size_t> nb_lo(n), nb_hi(n);
  std::vector<bool> core(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t lo = i, hi = i;
    while (lo > 0 && dist(pts[lo - 1], pts[i]) <= params.area_radius) --lo;
    while (hi + 1 < n && dist(pts[hi + 1], pts[i]) <= params.area_radius) ++hi;
    nb_lo[i] = lo;
    nb_hi[i] = hi;
    core[i] = pts[hi].t - pts[lo].t >= params.min_time;
  }
  for (std::size_t i = 0; i < n; ++i)
    if (core[i])
      for (std::size_t j = nb_lo[i]; j <= nb_hi[i]; ++j) in_cluster[j] = 1;

  // Keep only runs long enough in time.
  std::vector<int> labels(n, 0);
  std::size_t run_start = 0;
  while (run_start < n) {
    if (!in_cluster[run_start]) {
      ++run_start;
      continue;
    }
    std::size_t run_end = run_start;
    while (run_end + 1 < n && in_cluster[run_end + 1]) ++run_end;
    if (pts[run_end].t - pts[run_start].t >= params.min_time)
      for (std::size_t j = run_start; j <= run_end; ++j) labels[j] = 1;
    run_start = run_end + 1;
  }
  return labels;
}

traj::SegmentationResult cbsmot_extract(const traj::Trajectory& trajectory,
                                        const CbSmotParams& params) {
  return labels_to_segments(trajectory, cbsmot_point_labels(trajectory, params));
}

std::vector<int> dstar_point_labels(const traj::Trajectory& trajectory,
                                    const DStarParams& params) {
  const auto& pts = trajectory.points;
  const std::size_t n = pts.size();
  std::vector<int> labels(n, 0);
  if (n == 0) return labels;

  struct Cluster {
    std::size_t first = 0, last = 0;  // member index range, outliers enclosed
    bool stay = false;
  };
  std::vector<Cluster> clusters;

  std::size_t i = 0;
  while (i < n) {
    double sum_x = pts[i].x, sum_y = pts[i].y;
    std::size_t count = 1;
    std::size_t last_member = i;
    std::size_t pending = 0;
    std::size_t j = i + 1;
    while (j < n) {
      const double cx = sum_x / static_cast<double>(count);
      const double cy = sum_y / static_cast<double>(count);
      if (std::hypot(pts[j].x - cx, pts[j].y - cy) <= params.radius) {
        // Enclosed outliers are absorbed into the cluster.
        sum_x += pts[j].x;
        sum_y += pts[j].y;
        ++count;
        last_member = j;
        pending = 0;
      } else {
        ++pending;
        if (pending > params.outlier_tolerance) break;
      }
      ++j;
    }
    Cluster c;
    c.first = i;
    c.last = last_member;
    c.stay = pts[last_member].t - pts[i].t >= params.min_time;
    clusters.push_back(c);
    i = last_member + 1;
  }

  // Merge stays whose time gap is below merge_gap.
  for (std::size_t k = 0; k + 1 < clusters.size(); ++k) {
    if (!clusters[k].stay) continue;
    std::size_t next = k + 1;
    while (next < clusters.size()) {
      if (!clusters[next].stay) {
        ++next;
        continue;
      }
      if (pts[clusters[next].first].t - pts[clusters[k].last].t <= params.merge_gap) {
        clusters[k].last = clusters[next].last;
        clusters[next].stay = false;
        clusters[next].first = clusters[next].last = clusters[k].last;
        ++next;
      } else {
        break;
      }
    }
  }

  for (const Cluster& c : clusters)
    if (c.stay)
      for (std::size_t idx = c.first; idx <= c.last; ++idx) labels[idx] = 1;
  return labels;
}

traj::SegmentationResult dstar_extract(const traj::Trajectory& trajectory,
                                       const DStarParams& params) {
  return labels_to_segments(trajectory, dstar_point_labels(trajectory, params));
}

const char* algorithm_name(Algorithm algo) {
  switch (algo) {
    case Algorithm::kang: return "kang";
    case Algorithm::cbsmot: return "cbsmot";
    case Algorithm::dstar: return "dstar";
  }
  return "?";
}

std::string ParamSet::text() const {
  char buf[160];
  switch (algo) {
    case Algorithm::kang:
      std::snprintf(buf, sizeof(buf), "d_max=%.0f,t_min=%.0f", kang.d_max, kang.t_min);
      break;
    case Algorithm::cbsmot:
      std::snprintf(buf, sizeof(buf), "radius=%.0f,min_time=%.0f", cbsmot.area_radius,
                    cbsmot.min_time);
      break;
    case Algorithm::dstar:
      std::snprintf(buf, sizeof(buf), "radius=%.1f,min_time=%.0f,tolerance=%zu,merge_gap=%.0f",
                    dstar.radius, dstar.min_time, dstar.outlier_tolerance, dstar.merge_gap);
      break;
  }
  return buf;
}

std::vector<ParamSet> kang_grid(const std::vector<double>& d_max,
                                const std::vector<double>& t_min) {
  std::vector<ParamSet> out;
  for (double d : d_max)
    for (double t : t_min) {
      ParamSet p;
      p.algo = Algorithm::kang;
      p.kang = {d, t};
      out.push_back(p);
    }
  return out;
}

std::vector<ParamSet> cbsmot_grid(const std::vector<double>& radius,
                                  const std::vector<double>& min_time) {
  std::vector<ParamSet> out;
  for (double r : radius)
    for (double t : min_time) {
      ParamSet p;
      p.algo = Algorithm::cbsmot;
      p.cbsmot = {r, t};
      out.push_back(p);
    }
  return out;
}

std::vector<ParamSet> dstar_random(std::uint64_t seed, std::size_t count) {
  Rng rng(mix_seed(seed, fnv1a64("dstar-search")));
  std::vector<ParamSet> out;
  for (std::size_t i = 0; i < count; ++i) {
    ParamSet p;
    p.algo = Algorithm::dstar;
    p.dstar.radius = rng.uniform(20.0, 120.0);
    p.dstar.min_time = rng.uniform(120.0, 900.0);
    p.dstar.outlier_tolerance = static_cast<std::size_t>(rng.next_below(4));
    p.dstar.merge_gap = rng.uniform(0.0, 600.0);
    out.push_back(p);
  }
  return out;
}

std::vector<int> extract_point_labels(Algorithm algo, const traj::Trajectory& trajectory,
                                      const ParamSet& params) {
  switch (algo) {
    case Algorithm::kang: return kang_point_labels(trajectory, params.kang);
    case Algorithm::cbsmot: return cbsmot_point_labels(trajectory, params.cbsmot);
    case Algorithm::dstar: return dstar_point_labels(trajectory, params.dstar);
  }
  throw input_error("unknown baseline algorithm");
}

SearchResult hyperparameter_search(const std::vector<LabeledTrajectory>& dataset,
                                   const std::vector<ParamSet>& candidates,
                                   std::size_t folds, std::uint64_t seed) {
  if (candidates.empty()) throw input_error("hyperparameter_search: no candidates");

  std::map<std::string, std::size_t> participant_points;
  for (const auto& lt : dataset)
    participant_points[lt.trajectory.user_id] += lt.trajectory.points.size();
  std::vector<std::pair<std::string, std::size_t>> participants(participant_points.begin(),
                                                                participant_points.end());
  const auto fold_of = eval::split_by_participant(participants, folds, seed);

  // Predictions per trajectory per candidate, computed once.
  std::vector<std::vector<std::vector<int>>> preds(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    preds[c].resize(dataset.size());
    for (std::size_t ti = 0; ti < dataset.size(); ++ti)
      preds[c][ti] =
          extract_point_labels(candidates[c].algo, dataset[ti].trajectory, candidates[c]);
  }

  auto f1_over = [&](std::size_t c, std::size_t fold, bool test_side) {
    std::vector<int> y_pred, y_true;
    for (std::size_t ti = 0; ti < dataset.size(); ++ti) {
      const bool in_test = fold_of.at(dataset[ti].trajectory.user_id) == fold;
      if (in_test != test_side) continue;
      for (std::size_t i = 0; i < dataset[ti].labels.size(); ++i) {
        if (dataset[ti].labels[i] < 0) continue;
        y_pred.push_back(preds[c][ti][i]);
        y_true.push_back(dataset[ti].labels[i]);
      }
    }
    if (y_true.empty()) return std::pair<double, eval::PointwiseMetrics>{0.0, {}};
    const auto m = eval::binary_metrics_from_classes(y_pred, y_true);
    return std::pair<double, eval::PointwiseMetrics>{m.f1, m};
  };

  SearchResult result;
  for (std::size_t fold = 0; fold < folds; ++fold) {
    std::size_t best_c = 0;
    double best_f1 = -1.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const double f1 = f1_over(c, fold, false).first;
      if (f1 > best_f1) {
        best_f1 = f1;
        best_c = c;
      }
    }
    const auto [test_f1, m] = f1_over(best_c, fold, true);
    FoldOutcome outcome;
    outcome.fold = fold;
    outcome.chosen = candidates[best_c];
    outcome.f1 = test_f1;
    outcome.accuracy = m.accuracy;
    outcome.precision = m.has_precision ? m.precision : 0.0;
    outcome.has_precision = m.has_precision;
    outcome.recall = m.recall;
    result.folds.push_back(outcome);

    for (std::size_t ti = 0; ti < dataset.size(); ++ti) {
      if (fold_of.at(dataset[ti].trajectory.user_id) != fold) continue;
      for (std::size_t i = 0; i < dataset[ti].labels.size(); ++i) {
        if (dataset[ti].labels[i] < 0) continue;
        result.pooled_predictions.push_back(preds[best_c][ti][i]);
        result.pooled_labels.push_back(dataset[ti].labels[i]);
      }
    }
  }
  return result;
}

}  // namespace staykit::baselines
