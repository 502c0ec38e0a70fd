#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace staykit::eval {

// Non-stay is the positive class throughout.
struct ConfusionCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
};

struct PointwiseMetrics {
  double accuracy = 0.0;
  double precision = 0.0;     // valid only when has_precision
  bool has_precision = false; // false when there are no positive predictions
  double recall = 0.0;
  double f1 = 0.0;
  ConfusionCounts counts;
};

// probs are stay probabilities; the prediction is positive (non-stay) iff
// prob < threshold. labels: 1 = stay, 0 = non-stay. Throws on empty input.
PointwiseMetrics pointwise_metrics(const std::vector<double>& probs,
                                   const std::vector<int>& labels, double threshold = 0.5);

// Same metrics from hard class predictions (1 = stay, 0 = non-stay).
PointwiseMetrics binary_metrics_from_classes(const std::vector<int>& predicted,
                                             const std::vector<int>& labels);

// Area under the precision-recall curve by right-step summation,
// sum_k (R_k - R_{k-1}) * P_k, positive = non-stay. Throws unless both
// classes are present.
double pr_auc(const std::vector<double>& probs, const std::vector<int>& labels);

// Per-class one-vs-rest F1 averaged with label-count weights.
double weighted_f1(const std::vector<int>& predicted, const std::vector<int>& labels,
                   std::size_t num_classes);
double multiclass_accuracy(const std::vector<int>& predicted, const std::vector<int>& labels);

// Greedy balanced assignment: every participant lands in exactly one fold;
// the heaviest unassigned participant goes to the lightest fold. Ties and
// visit order are seeded. Throws when participants < folds.
std::map<std::string, std::size_t> split_by_participant(
    const std::vector<std::pair<std::string, std::size_t>>& participant_points,
    std::size_t folds, std::uint64_t seed);

// Uniform random partition of window indices into folds (sizes differ by at
// most one); deterministic per seed.
std::vector<std::size_t> split_by_sequence(std::size_t count, std::size_t folds,
                                           std::uint64_t seed);

// --- result tables ---------------------------------------------------------

struct MetricsRow {
  std::string method;
  std::string fold;  // fold id or "all"
  std::optional<double> f1, accuracy, pr_auc, precision, recall;
};

// Aligned plain-text table (precision "-" when undefined).
std::string format_metrics_table(const std::vector<MetricsRow>& rows);
// Machine-readable TSV: method, fold, F1, accuracy, PR-AUC, precision, recall.
void write_metrics_tsv(std::ostream& out, const std::vector<MetricsRow>& rows);

}  // namespace staykit::eval
