#include "staykit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "staykit/common.hpp"

namespace staykit::eval {

namespace {

PointwiseMetrics from_counts(const ConfusionCounts& c) {
  PointwiseMetrics m;
  m.counts = c;
  const double total = static_cast<double>(c.total());
  m.accuracy = total > 0.0 ? static_cast<double>(c.tp + c.tn) / total : 0.0;
  const std::size_t pred_pos = c.tp + c.fp;
  const std::size_t actual_pos = c.tp + c.fn;
  m.has_precision = pred_pos > 0;
  if (m.has_precision) m.precision = static_cast<double>(c.tp) / static_cast<double>(pred_pos);
  m.recall = actual_pos > 0 ? static_cast<double>(c.tp) / static_cast<double>(actual_pos) : 0.0;
  if (m.has_precision && m.precision + m.recall > 0.0)
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  else
    m.f1 = 0.0;
  return m;
}

}  // namespace

PointwiseMetrics pointwise_metrics(const std::vector<double>& probs,
                                   const std::vector<int>& labels, double threshold) {
  if (probs.empty() || probs.size() != labels.size())
    throw input_error("pointwise_metrics: empty or misaligned inputs");
  ConfusionCounts c;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const bool pred_pos = probs[i] < threshold;  // ties classify as stay
    const bool actual_pos = labels[i] == 0;
    if (pred_pos && actual_pos) ++c.tp;
    else if (pred_pos && !actual_pos) ++c.fp;
    else if (!pred_pos && actual_pos) ++c.fn;
    else ++c.tn;
  }
  return from_counts(c);
}

PointwiseMetrics binary_metrics_from_classes(const std::vector<int>& predicted,
                                             const std::vector<int>& labels) {
  if (predicted.empty() || predicted.size() != labels.size())
    throw input_error("binary_metrics_from_classes: empty or misaligned inputs");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool pred_pos = predicted[i] == 0;
    const bool actual_pos = labels[i] == 0;
    if (pred_pos && actual_pos) ++c.tp;
    else if (pred_pos && !actual_pos) ++c.fp;
    else if (!pred_pos && actual_pos) ++c.fn;
    else ++c.tn;
  }
  return from_counts(c);
}

double pr_auc(const std::vector<double>& probs, const std::vector<int>& labels) {
  if (probs.empty() || probs.size() != labels.size())
    throw input_error("pr_auc: empty or misaligned inputs");
  std::size_t positives = 0;
  for (int l : labels) positives += l == 0 ? 1 : 0;
  if (positives == 0 || positives == labels.size())
    throw input_error("pr_auc: both classes must be present");

  // Positive score: descending confidence in non-stay.
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return probs[a] < probs[b];  // lowest stay probability first
  });

  double auc = 0.0;
  double prev_recall = 0.0;
  std::size_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    // Consume all points sharing one score before emitting a curve point.
    std::size_t j = i;
    while (j < order.size() && probs[order[j]] == probs[order[i]]) {
      if (labels[order[j]] == 0) ++tp;
      else ++fp;
      ++j;
    }
    const double recall = static_cast<double>(tp) / static_cast<double>(positives);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    auc += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return auc;
}

double weighted_f1(const std::vector<int>& predicted, const std::vector<int>& labels,
                   std::size_t num_classes) {
  if (predicted.empty() || predicted.size() != labels.size())
    throw input_error("weighted_f1: empty or misaligned inputs");
  double out = 0.0;
  const double total = static_cast<double>(labels.size());
  for (std::size_t m = 0; m < num_classes; ++m) {
    std::size_t tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool is_m = labels[i] == static_cast<int>(m);
      const bool pred_m = predicted[i] == static_cast<int>(m);
      support += is_m ? 1 : 0;
      if (pred_m && is_m) ++tp;
      else if (pred_m && !is_m) ++fp;
      else if (!pred_m && is_m) ++fn;
    }
    if (support == 0) continue;  // absent class contributes zero weight
    const double denom = static_cast<double>(2 * tp + fp + fn);
    const double f1 = denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
    out += (static_cast<double>(support) / total) * f1;
  }
  return out;
}

double multiclass_accuracy(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.empty() || predicted.size() != labels.size())
    throw input_error("multiclass_accuracy: empty or misaligned inputs");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predicted[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::map<std::string, std::size_t> split_by_participant(
    const std::vector<std::pair<std::string, std::size_t>>& participant_points,
    std::size_t folds, std::uint64_t seed) {
  if (folds == 0) throw input_error("split_by_participant: folds must be positive");
  if (participant_points.size() < folds)
    throw input_error("split_by_participant: fewer participants than folds");

  // Heaviest-first greedy into the lightest fold; seeded hash breaks ties so
  // equal-sized participants do not always land together.
  std::vector<std::pair<std::string, std::size_t>> order = participant_points;
  std::sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return fnv1a64(a.first, seed) < fnv1a64(b.first, seed);
  });

  std::vector<std::size_t> fold_load(folds, 0);
  std::vector<std::size_t> fold_members(folds, 0);
  std::map<std::string, std::size_t> assignment;
  for (const auto& [user, points] : order) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < folds; ++f) {
      if (fold_load[f] < fold_load[best] ||
          (fold_load[f] == fold_load[best] && fold_members[f] < fold_members[best]))
        best = f;
    }
    assignment[user] = best;
    fold_load[best] += points;
    ++fold_members[best];
  }
  return assignment;
}

std::vector<std::size_t> split_by_sequence(std::size_t count, std::size_t folds,
                                           std::uint64_t seed) {
  if (folds == 0) throw input_error("split_by_sequence: folds must be positive");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, fnv1a64("sequence-split")));
  shuffle(order, rng);
  std::vector<std::size_t> fold(count, 0);
  for (std::size_t i = 0; i < count; ++i) fold[order[i]] = i % folds;
  return fold;
}

namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", *v);
  return buf;
}

}  // namespace

std::string format_metrics_table(const std::vector<MetricsRow>& rows) {
  const std::vector<std::string> header = {"method", "fold",      "F1",    "accuracy",
                                           "PR-AUC", "precision", "recall"};
  std::vector<std::vector<std::string>> grid;
  grid.push_back(header);
  for (const auto& r : rows)
    grid.push_back({r.method, r.fold, cell(r.f1), cell(r.accuracy), cell(r.pr_auc),
                    cell(r.precision), cell(r.recall)});

  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& row : grid)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

  std::ostringstream out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      out << grid[r][c] << std::string(width[c] - grid[r][c].size() + 2, ' ');
    }
    out << "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : width) total += w + 2;
      out << std::string(total, '-') << "\n";
    }
  }
  return out.str();
}

void write_metrics_tsv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << "method\tfold\tf1\taccuracy\tpr_auc\tprecision\trecall\n";
  for (const auto& r : rows) {
    out << r.method << '\t' << r.fold << '\t' << cell(r.f1) << '\t' << cell(r.accuracy) << '\t'
        << cell(r.pr_auc) << '\t' << cell(r.precision) << '\t' << cell(r.recall) << "\n";
  }
}

}  // namespace staykit::eval
