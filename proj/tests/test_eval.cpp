#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "staykit/eval.hpp"
#include "test_util.hpp"

using namespace staykit;
using namespace staykit::eval;

namespace {

// Labels with the ExtraSensory balance: 223k stays, 28k non-stays (scaled).
std::vector<int> es_balance_labels(std::size_t scale = 100) {
  std::vector<int> labels;
  for (std::size_t i = 0; i < 2230 * scale / 100; ++i) labels.push_back(1);
  for (std::size_t i = 0; i < 280 * scale / 100; ++i) labels.push_back(0);
  return labels;
}

}  // namespace

TEST_CASE("constant stay predictor: accuracy = stay prevalence, F1 = 0, no precision") {
  const auto labels = es_balance_labels();
  const std::vector<double> probs(labels.size(), 1.0);
  const auto m = pointwise_metrics(probs, labels);
  CHECK(m.accuracy == doctest::Approx(2230.0 / 2510.0));
  CHECK(m.accuracy == doctest::Approx(0.887).epsilon(0.01));
  CHECK(m.f1 == 0.0);
  CHECK_FALSE(m.has_precision);
  CHECK(m.recall == 0.0);
}

TEST_CASE("constant non-stay predictor: recall 1, F1 = 2p/(1+p)") {
  const auto labels = es_balance_labels();
  const std::vector<double> probs(labels.size(), 0.0);
  const auto m = pointwise_metrics(probs, labels);
  CHECK(m.recall == 1.0);
  const double p = 280.0 / 2510.0;
  CHECK(m.f1 == doctest::Approx(2.0 * p / (1.0 + p)).epsilon(1e-12));
  CHECK(m.f1 == doctest::Approx(0.203).epsilon(0.02));
  CHECK(m.accuracy == doctest::Approx(p));
}

TEST_CASE("constant-predictor closed forms hold on random label vectors") {
  Rng rng(17);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 10 + rng.next_below(500);
    std::vector<int> labels(n);
    std::size_t stays = 0;
    for (int& l : labels) {
      l = rng.next_double() < 0.8 ? 1 : 0;
      stays += l;
    }
    if (stays == 0 || stays == n) continue;
    const double p_stay = static_cast<double>(stays) / static_cast<double>(n);

    const auto stay_pred = pointwise_metrics(std::vector<double>(n, 1.0), labels);
    CHECK(stay_pred.accuracy == doctest::Approx(p_stay).epsilon(1e-12));
    CHECK(stay_pred.f1 == 0.0);

    const auto move_pred = pointwise_metrics(std::vector<double>(n, 0.0), labels);
    const double p = 1.0 - p_stay;
    CHECK(move_pred.recall == 1.0);
    CHECK(move_pred.f1 == doctest::Approx(2.0 * p / (1.0 + p)).epsilon(1e-12));
  }
}

TEST_CASE("F1 harmonic identity holds whenever precision and recall exist") {
  Rng rng(23);
  for (int round = 0; round < 200; ++round) {
    const std::size_t n = 5 + rng.next_below(100);
    std::vector<int> labels(n);
    std::vector<double> probs(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = rng.next_double() < 0.5 ? 1 : 0;
      probs[i] = rng.next_double();
    }
    const auto m = pointwise_metrics(probs, labels);
    CHECK(m.counts.total() == n);
    if (m.has_precision && m.precision + m.recall > 0.0) {
      CHECK(m.f1 == doctest::Approx(2.0 * m.precision * m.recall /
                                    (m.precision + m.recall)).epsilon(1e-12));
    }
    CHECK(m.accuracy ==
          doctest::Approx(static_cast<double>(m.counts.tp + m.counts.tn) /
                          static_cast<double>(n)));
  }
}

TEST_CASE("pr_auc: perfect separation and permutation baseline") {
  // Perfectly separating scores.
  std::vector<double> probs;
  std::vector<int> labels;
  Rng rng(29);
  for (int i = 0; i < 500; ++i) {
    const bool stay = rng.next_double() < 0.7;
    labels.push_back(stay ? 1 : 0);
    probs.push_back(stay ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4));
  }
  CHECK(pr_auc(probs, labels) == doctest::Approx(1.0));

  // Scores independent of labels: AUC ~ positive prevalence.
  const std::size_t n = 100000;
  std::vector<double> random_probs(n);
  std::vector<int> random_labels(n);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    random_probs[i] = rng.next_double();
    random_labels[i] = rng.next_double() < 0.7 ? 1 : 0;
    positives += random_labels[i] == 0 ? 1 : 0;
  }
  const double prevalence = static_cast<double>(positives) / static_cast<double>(n);
  CHECK(std::abs(pr_auc(random_probs, random_labels) - prevalence) < 0.02);
}

TEST_CASE("pr_auc: invariant under strictly monotone score transforms") {
  Rng rng(31);
  std::vector<double> probs(300);
  std::vector<int> labels(300);
  for (std::size_t i = 0; i < 300; ++i) {
    probs[i] = rng.next_double();
    labels[i] = rng.next_double() < 0.6 ? 1 : 0;
  }
  const double base = pr_auc(probs, labels);
  auto squashed = probs;
  for (double& p : squashed) p = 1.0 / (1.0 + std::exp(-6.0 * (p - 0.5)));  // monotone
  CHECK(pr_auc(squashed, labels) == doctest::Approx(base).epsilon(1e-12));

  CHECK_THROWS_AS(pr_auc({0.3, 0.4}, {1, 1}), input_error);
  CHECK_THROWS_AS(pr_auc({}, {}), input_error);
}

TEST_CASE("weighted_f1: perfect, single-class, and a hand confusion matrix") {
  CHECK(weighted_f1({0, 1, 2, 1}, {0, 1, 2, 1}, 3) == doctest::Approx(1.0));
  CHECK(weighted_f1({1, 1, 1}, {1, 1, 1}, 3) == doctest::Approx(1.0));

  // Two classes: labels 3x0, 1x1; predictions give class0 tp=2 fp=0 fn=1,
  // class1 tp=1 fp=1 fn=0.
  const std::vector<int> pred = {0, 0, 1, 1};
  const std::vector<int> truth = {0, 0, 0, 1};
  const double f1_0 = 2.0 * 2.0 / (2.0 * 2.0 + 0.0 + 1.0);
  const double f1_1 = 2.0 * 1.0 / (2.0 * 1.0 + 1.0 + 0.0);
  CHECK(weighted_f1(pred, truth, 2) ==
        doctest::Approx(0.75 * f1_0 + 0.25 * f1_1).epsilon(1e-12));

  CHECK(multiclass_accuracy(pred, truth) == doctest::Approx(0.75));
}

TEST_CASE("split_by_participant: exact partition and greedy balance") {
  std::vector<std::pair<std::string, std::size_t>> five = {
      {"a", 10}, {"b", 10}, {"c", 10}, {"d", 10}, {"e", 10}};
  const auto assign = split_by_participant(five, 5, 1);
  std::set<std::size_t> used;
  for (const auto& [user, fold] : assign) used.insert(fold);
  CHECK(used.size() == 5);

  // Skewed sizes still balance within a factor of two.
  std::vector<std::pair<std::string, std::size_t>> skewed;
  Rng rng(37);
  for (int i = 0; i < 40; ++i)
    skewed.emplace_back("u" + std::to_string(i), 50 + rng.next_below(500));
  const auto folds = split_by_participant(skewed, 5, 2);
  std::vector<std::size_t> load(5, 0);
  for (const auto& [user, points] : skewed) load[folds.at(user)] += points;
  const auto [lo, hi] = std::minmax_element(load.begin(), load.end());
  CHECK(static_cast<double>(*hi) / static_cast<double>(std::max<std::size_t>(1, *lo)) <= 2.0);

  // No participant appears in two folds by construction; the map is total.
  CHECK(folds.size() == skewed.size());

  CHECK_THROWS_AS(split_by_participant(five, 6, 1), input_error);
}

TEST_CASE("split_by_sequence: even deal, partition, determinism") {
  const auto folds = split_by_sequence(10, 5, 3);
  std::vector<std::size_t> counts(5, 0);
  for (std::size_t f : folds) ++counts[f];
  for (std::size_t c : counts) CHECK(c == 2);

  CHECK(split_by_sequence(1000, 7, 42) == split_by_sequence(1000, 7, 42));
  CHECK(split_by_sequence(1000, 7, 42) != split_by_sequence(1000, 7, 43));
}

TEST_CASE("metric tables: aligned text and TSV with '-' for absent precision") {
  std::vector<MetricsRow> rows;
  MetricsRow r;
  r.method = "constant stay";
  r.fold = "all";
  r.f1 = 0.0;
  r.accuracy = 0.887;
  r.recall = 0.0;
  rows.push_back(r);

  const std::string table = format_metrics_table(rows);
  CHECK(table.find("constant stay") != std::string::npos);
  CHECK(table.find('-') != std::string::npos);
  CHECK(table.find("0.887") != std::string::npos);

  std::stringstream ss;
  write_metrics_tsv(ss, rows);
  CHECK(ss.str().find("constant stay\tall\t0.000\t0.887\t-\t-\t0.000") != std::string::npos);
}
