#include <array>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "staykit/traj.hpp"
#include "test_util.hpp"

using namespace staykit;
using traj::LocationPoint;
using traj::Trajectory;

namespace {

Trajectory make_traj(std::vector<std::array<double, 3>> txy, const std::string& user = "u0") {
  Trajectory t;
  t.user_id = user;
  for (const auto& p : txy) t.points.push_back({p[0], p[1], p[2], 0.0, 0.0});
  return t;
}

}  // namespace

TEST_CASE("clean_and_split: gap over 20 minutes splits into two trajectories") {
  auto t = make_traj({{0, 0, 0}, {1201, 10, 0}});
  auto out = traj::clean_and_split(t, {});
  REQUIRE(out.size() == 2);
  CHECK(out[0].points.size() == 1);
  CHECK(out[1].points.size() == 1);
}

TEST_CASE("clean_and_split: compliant trajectory passes through unchanged") {
  auto t = make_traj({{0, 0, 0}, {60, 10, 0}, {120, 30, 5}, {1320, 40, 5}});
  auto out = traj::clean_and_split(t, {});
  REQUIRE(out.size() == 1);
  CHECK(out[0].points.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(out[0].points[i].t == t.points[i].t);
}

TEST_CASE("clean_and_split: a 500 m jump in one second is dropped and neighbors re-link") {
  auto t = make_traj({{0, 0, 0}, {1, 500, 0}, {2, 2, 0}});
  traj::CleaningReport report;
  auto out = traj::clean_and_split(t, {}, &report);
  REQUIRE(out.size() == 1);
  REQUIRE(out[0].points.size() == 2);
  CHECK(out[0].points[0].t == 0.0);
  CHECK(out[0].points[1].t == 2.0);
  CHECK(report.dropped_speed == 1);
}

TEST_CASE("clean_and_split: duplicate timestamps dropped, empty input allowed") {
  auto t = make_traj({{5, 0, 0}, {5, 1, 0}, {10, 2, 0}});
  traj::CleaningReport report;
  auto out = traj::clean_and_split(t, {}, &report);
  REQUIRE(out.size() == 1);
  CHECK(out[0].points.size() == 2);
  CHECK(report.dropped_duplicate_ts == 1);

  CHECK(traj::clean_and_split(Trajectory{}, {}).empty());
}

TEST_CASE("clean_and_split property: output never violates gap or speed bounds") {
  Rng rng(11);
  traj::CleaningConfig cfg;
  cfg.max_gap_s = 100.0;
  cfg.max_speed_mps = 30.0;
  for (int round = 0; round < 200; ++round) {
    Trajectory t;
    t.user_id = "r";
    double time = 0.0;
    for (std::size_t i = 0; i < 40; ++i) {
      time += rng.uniform(0.5, 200.0);
      t.points.push_back(
          {time, rng.uniform(-2000.0, 2000.0), rng.uniform(-2000.0, 2000.0), 0, 0});
    }
    std::size_t total = 0;
    for (const auto& piece : traj::clean_and_split(t, cfg)) {
      total += piece.points.size();
      for (std::size_t i = 1; i < piece.points.size(); ++i) {
        const auto& a = piece.points[i - 1];
        const auto& b = piece.points[i];
        const double dt = b.t - a.t;
        CHECK(dt > 0.0);
        CHECK(dt <= cfg.max_gap_s);
        CHECK(std::hypot(b.x - a.x, b.y - a.y) / dt <= cfg.max_speed_mps + 1e-12);
      }
    }
    CHECK(total <= t.points.size());  // no duplication across pieces
  }
}

TEST_CASE("compute_features: 3-4-5 velocity, stationary pair, and hand case") {
  auto t = make_traj({{0, 0, 0}, {1, 3, 4}});
  auto rows = traj::compute_features(t);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].dt == doctest::Approx(1.0));
  CHECK(rows[1].v == doctest::Approx(5.0));
  CHECK(rows[0].v == 0.0);

  auto stationary = make_traj({{0, 7, 9}, {60, 7, 9}});
  CHECK(traj::compute_features(stationary)[1].v == doctest::Approx(0.0));

  auto hand = make_traj({{0, 0, 0}, {2, 10, 0}});
  auto hrows = traj::compute_features(hand);
  CHECK(hrows[1].dt == doctest::Approx(2.0));
  CHECK(hrows[1].v == doctest::Approx(5.0));
}

TEST_CASE("compute_features: first point carries the median dt") {
  auto t = make_traj({{0, 0, 0}, {1, 0, 0}, {4, 0, 0}, {9, 0, 0}});  // dts 1,3,5
  auto rows = traj::compute_features(t);
  CHECK(rows[0].dt == doctest::Approx(3.0));

  auto even = make_traj({{0, 0, 0}, {1, 0, 0}, {4, 0, 0}});  // dts 1,3
  CHECK(traj::compute_features(even)[0].dt == doctest::Approx(2.0));
}

TEST_CASE("compute_features: duplicate timestamps rejected") {
  auto t = make_traj({{0, 0, 0}, {0, 1, 0}});
  CHECK_THROWS_AS(traj::compute_features(t), input_error);
  CHECK_THROWS_AS(traj::compute_features(make_traj({{0, 0, 0}})), input_error);
}

TEST_CASE("chunk: exact division, padding arithmetic, and centering") {
  std::vector<traj::FeatureRow> rows(512);
  Rng rng(5);
  for (auto& r : rows) r = {rng.uniform(-10, 10), rng.uniform(-10, 10), 1.0, 0.5};
  std::vector<double> labels(512, 1.0), weights(512, 1.0);

  auto windows = traj::chunk(rows, labels, weights, 256, {"u", 0});
  REQUIRE(windows.size() == 2);
  CHECK(windows[0].masked_in_count() == 256);
  CHECK(windows[1].masked_in_count() == 256);
  CHECK(windows[1].origin.first_point == 256);

  auto partial = traj::chunk({rows.begin(), rows.begin() + 300},
                             {labels.begin(), labels.begin() + 300},
                             {weights.begin(), weights.begin() + 300}, 256, {"u", 0});
  REQUIRE(partial.size() == 2);
  CHECK(partial[1].masked_in_count() == 44);
  std::size_t padded = 0;
  for (std::size_t i = 0; i < 256; ++i)
    if (!partial[1].mask[i]) {
      ++padded;
      CHECK(partial[1].weights[i] == 0.0);
    }
  CHECK(padded == 212);

  for (const auto& w : windows) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w.mask[i]) {
        mx += w.rows[i].x;
        my += w.rows[i].y;
      }
    CHECK(std::abs(mx / 256.0) < 1e-12);
    CHECK(std::abs(my / 256.0) < 1e-12);
  }
}

TEST_CASE("chunk then concatenating masked-in rows recovers the centered features") {
  Rng rng(17);
  std::vector<traj::FeatureRow> rows(300);
  for (auto& r : rows)
    r = {rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(0.5, 5), rng.uniform(0, 3)};
  std::vector<double> labels(300), weights(300, 1.0);
  for (std::size_t i = 0; i < 300; ++i) labels[i] = rng.next_double();

  auto windows = traj::chunk(rows, labels, weights, 128, {"u", 7});
  std::size_t idx = 0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    // Re-derive this window's centering offset, then compare.
    const std::size_t start = w * 128;
    const std::size_t count = std::min<std::size_t>(128, 300 - start);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
      mx += rows[start + i].x;
      my += rows[start + i].y;
    }
    mx /= static_cast<double>(count);
    my /= static_cast<double>(count);
    for (std::size_t i = 0; i < windows[w].size(); ++i) {
      if (!windows[w].mask[i]) continue;
      CHECK(windows[w].rows[i].x == doctest::Approx(rows[idx].x - mx).epsilon(1e-12));
      CHECK(windows[w].rows[i].y == doctest::Approx(rows[idx].y - my).epsilon(1e-12));
      CHECK(windows[w].rows[i].dt == rows[idx].dt);
      CHECK(windows[w].rows[i].v == rows[idx].v);
      CHECK(windows[w].labels[i] == labels[idx]);
      ++idx;
    }
  }
  CHECK(idx == 300);
}

TEST_CASE("standardize: training distribution lands on mean 0, std 1") {
  Rng rng(23);
  std::vector<traj::FeatureRow> rows(600);
  for (auto& r : rows)
    r = {rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(1, 9), rng.uniform(0, 7)};
  std::vector<double> labels(600, 0.0), weights(600, 1.0);
  auto windows = traj::chunk(rows, labels, weights, 128, {"u", 0});
  const auto stats = traj::compute_standardization_stats(windows);
  traj::standardize(windows, stats);

  double sum_dt = 0.0, sum_sq_dt = 0.0, sum_v = 0.0, sum_sq_v = 0.0;
  std::size_t n = 0;
  for (const auto& w : windows)
    for (std::size_t i = 0; i < w.size(); ++i)
      if (w.mask[i]) {
        sum_dt += w.rows[i].dt;
        sum_sq_dt += w.rows[i].dt * w.rows[i].dt;
        sum_v += w.rows[i].v;
        sum_sq_v += w.rows[i].v * w.rows[i].v;
        ++n;
      }
  const double nd = static_cast<double>(n);
  CHECK(std::abs(sum_dt / nd) < 1e-6);
  CHECK(std::abs(sum_sq_dt / nd - 1.0) < 1e-6);
  CHECK(std::abs(sum_v / nd) < 1e-6);
  CHECK(std::abs(sum_sq_v / nd - 1.0) < 1e-6);
}

TEST_CASE("standardize: (10 - 2) / 4 = 2 and scaling preserves direction") {
  traj::SequenceWindow w;
  w.rows = {{3.0, 4.0, 10.0, 1.0}};
  w.labels = {0.0};
  w.weights = {1.0};
  w.mask = {true};
  std::vector<traj::SequenceWindow> windows = {w};

  traj::StandardizationStats stats;
  stats.mean_dt = 2.0;
  stats.std_dt = 4.0;
  stats.mean_v = 0.0;
  stats.std_v = 1.0;
  stats.std_xy = 2.0;
  traj::standardize(windows, stats);
  CHECK(windows[0].rows[0].dt == doctest::Approx(2.0));
  // Parallel direction: (3,4)/2 = (1.5,2) is a positive multiple of (3,4).
  CHECK(windows[0].rows[0].x * 4.0 == doctest::Approx(windows[0].rows[0].y * 3.0));
}

TEST_CASE("standardize: round trip is identity and zero std rejected") {
  Rng rng(29);
  std::vector<traj::FeatureRow> rows(100);
  for (auto& r : rows)
    r = {rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(1, 9), rng.uniform(0, 7)};
  auto windows =
      traj::chunk(rows, std::vector<double>(100, 0.0), std::vector<double>(100, 1.0), 64,
                  {"u", 0});
  auto stats = traj::compute_standardization_stats(windows);
  auto copy = windows;
  traj::standardize(copy, stats);
  traj::unstandardize(copy, stats);
  for (std::size_t w = 0; w < windows.size(); ++w)
    for (std::size_t i = 0; i < windows[w].size(); ++i) {
      CHECK(std::abs(copy[w].rows[i].x - windows[w].rows[i].x) < 1e-9);
      CHECK(std::abs(copy[w].rows[i].dt - windows[w].rows[i].dt) < 1e-9);
      CHECK(std::abs(copy[w].rows[i].v - windows[w].rows[i].v) < 1e-9);
    }

  stats.std_v = 0.0;
  CHECK_THROWS_AS(traj::standardize(windows, stats), input_error);
}

TEST_CASE("rotate_window: angle 0 is identity, pi negates coordinates") {
  traj::SequenceWindow w;
  w.rows = {{1.0, 2.0, 3.0, 4.0}};
  w.labels = {0.7};
  w.weights = {1.0};
  w.mask = {true};

  auto a = w;
  traj::rotate_window(a, 0.0);
  CHECK(a.rows[0].x == doctest::Approx(1.0));
  CHECK(a.rows[0].y == doctest::Approx(2.0));

  auto b = w;
  traj::rotate_window(b, 3.14159265358979323846);
  CHECK(b.rows[0].x == doctest::Approx(-1.0));
  CHECK(b.rows[0].y == doctest::Approx(-2.0));
  CHECK(b.rows[0].dt == 3.0);
  CHECK(b.rows[0].v == 4.0);
  CHECK(b.labels[0] == 0.7);
}

TEST_CASE("random_rotate: isometry, untouched channels, determinism") {
  Rng rng(41);
  traj::SequenceWindow w;
  for (int i = 0; i < 32; ++i) {
    w.rows.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5), 1.0, 2.0});
    w.labels.push_back(rng.next_double());
    w.weights.push_back(1.0);
    w.mask.push_back(true);
  }

  auto r1 = w;
  const double angle1 = traj::random_rotate(r1, 12345);
  auto r2 = w;
  const double angle2 = traj::random_rotate(r2, 12345);
  CHECK(angle1 == angle2);
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(r1.rows[i].x == r2.rows[i].x);
    CHECK(r1.rows[i].v == w.rows[i].v);
    CHECK(r1.labels[i] == w.labels[i]);
  }
  // Pairwise distances preserved to 1e-9.
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j) {
      const double before =
          std::hypot(w.rows[i].x - w.rows[j].x, w.rows[i].y - w.rows[j].y);
      const double after =
          std::hypot(r1.rows[i].x - r1.rows[j].x, r1.rows[i].y - r1.rows[j].y);
      CHECK(std::abs(before - after) < 1e-9);
    }
  // A different seed gives a different angle.
  auto r3 = w;
  CHECK(traj::random_rotate(r3, 54321) != angle1);
}

TEST_CASE("rotation composition equals rotation by the summed angle") {
  Rng rng(43);
  for (int round = 0; round < 100; ++round) {
    traj::SequenceWindow w;
    for (int i = 0; i < 8; ++i) {
      w.rows.push_back({rng.uniform(-5, 5), rng.uniform(-5, 5), 1.0, 1.0});
      w.labels.push_back(0.0);
      w.weights.push_back(1.0);
      w.mask.push_back(true);
    }
    const double a = rng.uniform(0.0, 6.28), b = rng.uniform(0.0, 6.28);
    auto twice = w;
    traj::rotate_window(twice, a);
    traj::rotate_window(twice, b);
    auto once = w;
    traj::rotate_window(once, a + b);
    for (std::size_t i = 0; i < w.size(); ++i) {
      CHECK(twice.rows[i].x == doctest::Approx(once.rows[i].x).epsilon(1e-9));
      CHECK(twice.rows[i].y == doctest::Approx(once.rows[i].y).epsilon(1e-9));
    }
  }
}

TEST_CASE("group_segments: worked example from the grouping rule") {
  const std::vector<double> ts = {0, 1, 2, 3, 4};
  const std::vector<double> probs = {0.9, 0.8, 0.2, 0.1, 0.7};
  const auto result = traj::group_segments(ts, probs);
  REQUIRE(result.segments.size() == 3);
  CHECK(result.segments[0].t_start == 0.0);
  CHECK(result.segments[0].t_end == 2.0);
  CHECK(result.segments[0].class_id == 1);
  CHECK(result.segments[1].t_start == 2.0);
  CHECK(result.segments[1].t_end == 4.0);
  CHECK(result.segments[1].class_id == 0);
  CHECK(result.segments[2].t_start == 4.0);
  CHECK(std::isinf(result.segments[2].t_end));
  CHECK(result.segments[2].class_id == 1);
}

TEST_CASE("group_segments: single run, alternating runs, tie goes to stay, empty") {
  const auto one = traj::group_segments({0, 1, 2}, {0.9, 0.9, 0.9});
  REQUIRE(one.segments.size() == 1);
  CHECK(one.segments[0].class_id == 1);
  CHECK(std::isinf(one.segments[0].t_end));

  const auto alt = traj::group_segments({0, 1, 2, 3}, {0.9, 0.1, 0.9, 0.1});
  CHECK(alt.segments.size() == 4);

  const auto tie = traj::group_segments({0}, {0.5});
  CHECK(tie.segments[0].class_id == 1);  // exact threshold classifies as stay

  CHECK(traj::group_segments({}, {}).empty());
}

TEST_CASE("group_segments satisfies every segmentation invariant on random input") {
  Rng rng(4242);
  for (int round = 0; round < 2000; ++round) {
    const std::size_t n = rng.next_below(40);
    std::vector<double> ts(n), probs(n);
    double t = rng.uniform(0.0, 10.0);
    for (std::size_t i = 0; i < n; ++i) {
      ts[i] = t;
      t += rng.uniform(0.001, 50.0);
      probs[i] = rng.next_double();
    }
    const auto result = traj::group_segments(ts, probs);
    bool ok = true;
    std::string why;
    testutil::check_segmentation(result, ts, &ok, &why);
    CHECK_MESSAGE(ok, why);
  }
}

TEST_CASE("segments_to_labels inverts group_labels") {
  const std::vector<double> ts = {0, 2, 5, 9, 14};
  const std::vector<int> classes = {1, 1, 0, 1, 1};
  const auto seg = traj::group_labels(ts, classes);
  CHECK(traj::segments_to_labels(seg, ts) == classes);
}

TEST_CASE("trajectory tsv round trip") {
  Trajectory a = make_traj({{0, 1.25, 2.5}, {10, 3.125, 4.75}}, "alice");
  a.points[0].raw_lat = 39.9;
  a.points[0].raw_lon = 116.3;
  Trajectory b = make_traj({{5000, 7.0, 8.0}}, "bob");

  std::stringstream ss;
  traj::write_trajectories_tsv(ss, {a, b});
  const auto back = traj::read_trajectories_tsv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[0].user_id == "alice");
  CHECK(back[0].points.size() == 2);
  CHECK(back[0].points[0].raw_lat == doctest::Approx(39.9));
  CHECK(back[0].points[1].x == doctest::Approx(3.125));
  CHECK(back[1].user_id == "bob");
}
