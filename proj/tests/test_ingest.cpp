#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "staykit/ingest.hpp"
#include "test_util.hpp"

#if defined(STAYKIT_HAVE_ZLIB)
#include <zlib.h>
#endif

using namespace staykit;
using namespace staykit::ingest;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / name;
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << content;
}

const char* kPltHeader =
    "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n"
    "0,2,255,My Track,0,0,2,255\n0\n";

}  // namespace

TEST_CASE("parse_datetime matches the GeoLife days column") {
  // "39.906,116.391,0,92,39448.0,2008-01-01,00:00:00": days-from-1899-12-30
  // 39448 is exactly 2008-01-01T00:00:00.
  const double epoch = parse_datetime("2008-01-01", "00:00:00");
  CHECK(epoch == doctest::Approx((39448.0 - 25569.0) * 86400.0));
  CHECK(parse_datetime("2008/04/02", "11:24:21") ==
        doctest::Approx(parse_datetime("2008-04-02", "11:24:21")));
  CHECK_THROWS_AS(parse_datetime("nonsense", "00:00:00"), input_error);
}

TEST_CASE("parse_geolife: header skipping, labels join, malformed-line counter") {
  TempDir dir("staykit-gl-test");
  const std::string plt =
      std::string(kPltHeader) +
      "39.906,116.391,0,92,39448.0,2008-01-01,00:00:00\n"
      "39.907,116.392,0,92,39448.000694,2008-01-01,00:01:00\n"
      "garbage line\n"
      "39.908,116.393,0,92,39448.001389,2008-01-01,00:02:00\n";
  write_file(dir.path / "Data/000/Trajectory/20080101000000.plt", plt);
  write_file(dir.path / "Data/000/labels.txt",
             "Start Time\tEnd Time\tTransportation Mode\n"
             "2008/01/01 00:00:30\t2008/01/01 00:01:30\tbus\n");
  // A second user without labels.
  write_file(dir.path / "Data/001/Trajectory/t.plt",
             std::string(kPltHeader) + "40.0,116.40,0,92,39448.0,2008-01-01,00:00:00\n");

  GeoLifeReport report;
  const auto trajectories = parse_geolife(dir.path.string(), &report);
  REQUIRE(trajectories.size() == 2);
  CHECK(report.users == 2);
  CHECK(report.files == 2);
  CHECK(report.points == 4);
  CHECK(report.skipped_lines == 1);

  const auto& first = trajectories[0];
  CHECK(first.trajectory.user_id == "000");
  REQUIRE(first.trajectory.points.size() == 3);
  CHECK(first.trajectory.points[0].t == doctest::Approx((39448.0 - 25569.0) * 86400.0));
  // Point at 00:01:00 falls inside the bus range; the others do not.
  CHECK_FALSE(first.modes[0].has_value());
  REQUIRE(first.modes[1].has_value());
  CHECK(*first.modes[1] == "bus");
  CHECK_FALSE(first.modes[2].has_value());

  CHECK(trajectories[1].trajectory.user_id == "001");
  CHECK_FALSE(trajectories[1].modes[0].has_value());
}

TEST_CASE("parse_geolife: non-ascending timestamps are dropped and counted") {
  TempDir dir("staykit-gl-order");
  write_file(dir.path / "Data/u/Trajectory/a.plt",
             std::string(kPltHeader) +
                 "39.9,116.39,0,92,39448.000694,2008-01-01,00:01:00\n"
                 "39.9,116.39,0,92,39448.0,2008-01-01,00:00:00\n"
                 "39.9,116.39,0,92,39448.001389,2008-01-01,00:02:00\n");
  GeoLifeReport report;
  const auto trajectories = parse_geolife(dir.path.string(), &report);
  REQUIRE(trajectories.size() == 1);
  CHECK(trajectories[0].trajectory.points.size() == 2);
  CHECK(report.dropped_non_ascending == 1);
  for (std::size_t i = 1; i < trajectories[0].trajectory.points.size(); ++i)
    CHECK(trajectories[0].trajectory.points[i].t > trajectories[0].trajectory.points[i - 1].t);
}

TEST_CASE("normalize_mode maps the labels.txt short forms") {
  CHECK(normalize_mode("walk") == "walking");
  CHECK(normalize_mode("run") == "running");
  CHECK(normalize_mode("bike") == "biking");
  CHECK(normalize_mode("Bus") == "bus");
  CHECK(normalize_mode("taxi") == "taxi");
}

TEST_CASE("parse_extrasensory: flexible columns and activity flags") {
  TempDir dir("staykit-es-test");
  write_file(dir.path / "alice.csv",
             "timestamp,latitude,longitude,label:SITTING,label:WALKING\n"
             "1000,32.88,-117.23,1,0\n"
             "1060,32.881,-117.231,0,1\n"
             "1120,32.882,-117.232,,\n"
             "bad,row,here,x\n");
  write_file(dir.path / "bob.csv",
             "timestamp,latitude,longitude,label:SLEEPING\n"
             "500,32.7,-117.1,1\n"
             "560,nan,nan,1\n");

  EsReport report;
  const auto records = parse_extrasensory(dir.path.string(), &report);
  REQUIRE(records.size() == 4);
  CHECK(report.users == 2);
  CHECK(report.skipped_lines == 2);  // malformed row + nan location
  CHECK(records[0].user_id == "alice");
  CHECK(records[0].activities.count("SITTING") == 1);
  CHECK(records[1].activities.count("WALKING") == 1);
  CHECK(records[2].activities.empty());
  CHECK(records[3].user_id == "bob");
}

#if defined(STAYKIT_HAVE_ZLIB)
TEST_CASE("parse_extrasensory reads gzip-compressed tables") {
  TempDir dir("staykit-es-gz");
  const std::string csv =
      "timestamp,latitude,longitude,label:SITTING\n"
      "1000,32.88,-117.23,1\n";
  const fs::path gz = dir.path / "carol.csv.gz";
  gzFile f = gzopen(gz.string().c_str(), "wb");
  REQUIRE(f != nullptr);
  gzwrite(f, csv.data(), static_cast<unsigned>(csv.size()));
  gzclose(f);

  const auto records = parse_extrasensory(dir.path.string());
  REQUIRE(records.size() == 1);
  CHECK(records[0].user_id == "carol");
  CHECK(records[0].activities.count("SITTING") == 1);
}
#endif

TEST_CASE("derive_es_labels: unanimity rule") {
  ActivityMap map = ActivityMap::defaults();
  EsRecord tv{"u", 0, 0, 0, {"WATCHING_TV"}};
  EsRecord bike{"u", 1, 0, 0, {"BICYCLING"}};
  EsRecord conflict{"u", 2, 0, 0, {"SITTING", "IN_A_CAR"}};
  EsRecord unknown{"u", 3, 0, 0, {"UNRECOGNIZED_THING"}};
  EsRecord empty{"u", 4, 0, 0, {}};

  const auto labeled = derive_es_labels({tv, bike, conflict, unknown, empty}, map);
  REQUIRE(labeled.size() == 5);
  CHECK(labeled[0].label == 1);
  CHECK(labeled[1].label == 0);
  CHECK_FALSE(labeled[2].label.has_value());
  CHECK_FALSE(labeled[3].label.has_value());
  CHECK_FALSE(labeled[4].label.has_value());
}

TEST_CASE("activity map file parsing") {
  TempDir dir("staykit-map-test");
  write_file(dir.path / "map.tsv",
             "# comment\nWATCHING_TV\tstay\nBICYCLING\tnon-stay\nODDBALL\tignore\n");
  const auto map = ActivityMap::from_file((dir.path / "map.tsv").string());
  CHECK(map.classify("WATCHING_TV") == SrClass::stay);
  CHECK(map.classify("BICYCLING") == SrClass::non_stay);
  CHECK(map.classify("ODDBALL") == SrClass::ignore);
  CHECK(map.classify("NEVER_SEEN") == SrClass::ignore);

  write_file(dir.path / "bad.tsv", "JUST_ONE_FIELD\n");
  CHECK_THROWS_AS(ActivityMap::from_file((dir.path / "bad.tsv").string()), input_error);
}

TEST_CASE("remove_suspicious_stays: threshold rule and idempotence") {
  std::vector<LabeledPoint> points;
  std::vector<double> velocities;
  // Non-stays with mean velocity 2.0.
  for (int i = 0; i < 4; ++i) {
    points.push_back({"u", static_cast<double>(i), 0, 0, 0});
    velocities.push_back(2.0);
  }
  points.push_back({"u", 10, 0, 0, 1});  // fast "stay": removed
  velocities.push_back(20.0);
  points.push_back({"u", 11, 0, 0, 1});  // stationary stay: kept
  velocities.push_back(0.0);

  const std::size_t removed = remove_suspicious_stays(points, velocities);
  CHECK(removed == 1);
  CHECK_FALSE(points[4].label.has_value());
  CHECK(points[5].label == 1);

  // Running again removes nothing: the non-stay mean is unchanged and every
  // surviving stay already passed it.
  CHECK(remove_suspicious_stays(points, velocities) == 0);

  // Without non-stay points the pass is a no-op.
  std::vector<LabeledPoint> only_stays = {{"u", 0, 0, 0, 1}};
  std::vector<double> v = {50.0};
  CHECK(remove_suspicious_stays(only_stays, v) == 0);
  CHECK(only_stays[0].label == 1);
}

TEST_CASE("interpolate: tick arithmetic, collinearity, identity mapping") {
  traj::Trajectory t;
  t.user_id = "u";
  t.points.push_back({0.0, 0.0, 0.0, 10.0, 20.0});
  t.points.push_back({60.0, 120.0, 60.0, 10.001, 20.001});

  const auto result = interpolate(t, 0.5);
  // 60 s at 2 s spacing: 29 interior ticks plus the two originals.
  CHECK(result.dense.points.size() == 31);
  REQUIRE(result.index_map.size() == 2);
  CHECK(result.index_map[0] == 0);
  CHECK(result.index_map[1] == 30);
  // Originals preserved exactly.
  CHECK(result.dense.points[0].x == 0.0);
  CHECK(result.dense.points[30].x == 120.0);
  // Interior ticks lie on the segment between the neighbors.
  for (std::size_t i = 1; i < 30; ++i) {
    const auto& p = result.dense.points[i];
    CHECK(p.t == doctest::Approx(2.0 * static_cast<double>(i)));
    CHECK(p.x == doctest::Approx(2.0 * p.t));  // slope 120/60
    CHECK(p.y == doctest::Approx(p.t));
  }
}

TEST_CASE("interpolate: non-divisible gaps keep originals off-grid") {
  traj::Trajectory t;
  t.user_id = "u";
  t.points.push_back({0.0, 0.0, 0.0, 0, 0});
  t.points.push_back({5.0, 10.0, 0.0, 0, 0});
  t.points.push_back({8.0, 16.0, 0.0, 0, 0});
  const auto result = interpolate(t, 0.5);
  // Gap 1: ticks at 2,4 (5 is an original). Gap 2: tick at 7.
  REQUIRE(result.dense.points.size() == 6);
  CHECK(result.dense.points[result.index_map[1]].t == 5.0);
  CHECK(result.dense.points[result.index_map[2]].t == 8.0);
  for (std::size_t i = 1; i < result.dense.points.size(); ++i)
    CHECK(result.dense.points[i].t > result.dense.points[i - 1].t);
}
