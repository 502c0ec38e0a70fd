#pragma once

// Writes a miniature GeoLife-format tree, an OSM GeoJSON extract covering it,
// and an ExtraSensory-style CSV directory into a temp directory. The
// geometry mirrors the synthetic corpus: stays inside buildings, moves along
// streets, with transportation-mode ranges over the moves.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "staykit/common.hpp"

namespace testutil {

namespace fs = std::filesystem;

// 2008-01-01T00:00:00 UTC; the GeoLife days column counts from 1899-12-30.
constexpr double kFixtureEpoch = (39448.0 - 25569.0) * 86400.0;

inline std::string time_of_day(double epoch) {
  const long sec = static_cast<long>(epoch - kFixtureEpoch);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%02ld:%02ld:%02ld", sec / 3600, (sec / 60) % 60, sec % 60);
  return buf;
}

struct FixtureGeometry {
  std::vector<std::array<double, 2>> building_centers;  // lat, lon
  std::vector<std::vector<std::array<double, 2>>> street_paths;
};

// Local meter offsets around a Beijing-area anchor.
inline std::array<double, 2> offset_latlon(double lat0, double lon0, double dx_m, double dy_m) {
  const double lat = lat0 + dy_m / 111320.0;
  const double lon = lon0 + dx_m / (111320.0 * std::cos(lat0 * 3.14159265358979 / 180.0));
  return {lat, lon};
}

struct GeoLifeFixture {
  fs::path root;
  FixtureGeometry geometry;
  std::size_t points = 0;
};

// Two users; each trajectory alternates stays (inside buildings) and moves
// (along streets) with mode ranges cycling through the five TMD classes.
inline GeoLifeFixture write_geolife_fixture(const fs::path& dir, std::uint64_t seed,
                                            std::size_t phases_per_user = 10,
                                            bool inject_corrupt_line = true) {
  GeoLifeFixture fixture;
  fixture.root = dir;
  staykit::Rng rng(seed);
  const double lat0 = 39.95, lon0 = 116.35;
  const char* modes[] = {"walk", "bike", "bus", "car", "train"};

  for (int user = 0; user < 2; ++user) {
    const std::string user_id = user == 0 ? "000" : "001";
    std::ostringstream plt;
    plt << "Geolife trajectory\nWGS 84\nAltitude is in Feet\nReserved 3\n"
        << "0,2,255,My Track,0,0,2,255\n0\n";
    std::ostringstream labels;
    labels << "Start Time\tEnd Time\tTransportation Mode\n";

    double t = kFixtureEpoch + user * 50.0;
    double x = rng.uniform(-600.0, 600.0);
    double y = rng.uniform(-600.0, 600.0);
    int mode_cycle = 0;

    auto emit = [&](double px, double py) {
      const auto ll = offset_latlon(lat0, lon0, px, py);
      const double days = t / 86400.0 + 25569.0;
      char line[160];
      std::snprintf(line, sizeof(line), "%.7f,%.7f,0,92,%.7f,2008-01-01,%s\n", ll[0], ll[1],
                    days, time_of_day(t).c_str());
      plt << line;
      ++fixture.points;
    };

    for (std::size_t phase = 0; phase < phases_per_user; ++phase) {
      if (phase % 2 == 0) {
        // Stay: 12 points jittering inside a 44 m building.
        fixture.geometry.building_centers.push_back(offset_latlon(lat0, lon0, x, y));
        for (int i = 0; i < 12; ++i) {
          emit(x + rng.uniform(-3.0, 3.0), y + rng.uniform(-3.0, 3.0));
          t += 30.0;
        }
      } else {
        // Move: 12 points along a straight street with a cycling mode range.
        const double move_start = t;
        double heading = rng.uniform(0.0, 6.283185307179586);
        std::vector<std::array<double, 2>> path;
        path.push_back(offset_latlon(lat0, lon0, x, y));
        for (int i = 0; i < 12; ++i) {
          const double speed = rng.uniform(4.0, 10.0);
          const double dt = 15.0;
          x += speed * dt * std::cos(heading);
          y += speed * dt * std::sin(heading);
          t += dt;
          emit(x, y);
        }
        path.push_back(offset_latlon(lat0, lon0, x, y));
        fixture.geometry.street_paths.push_back(path);
        labels << "2008/01/01 " << time_of_day(move_start) << "\t2008/01/01 "
               << time_of_day(t) << "\t" << modes[mode_cycle % 5] << "\n";
        ++mode_cycle;
      }
    }
    if (inject_corrupt_line && user == 0) plt << "this,line,is,junk\n";

    const fs::path traj_dir = dir / "Data" / user_id / "Trajectory";
    fs::create_directories(traj_dir);
    std::ofstream(traj_dir / "20080101000000.plt") << plt.str();
    std::ofstream(dir / "Data" / user_id / "labels.txt") << labels.str();
  }
  return fixture;
}

inline void write_geojson_fixture(const fs::path& path, const FixtureGeometry& geometry) {
  std::ostringstream out;
  out << "{\"type\":\"FeatureCollection\",\"features\":[";
  bool first = true;
  auto sep = [&]() {
    if (!first) out << ",";
    first = false;
  };
  int id = 0;
  for (const auto& center : geometry.building_centers) {
    sep();
    const double half = 22.0;
    const auto sw = offset_latlon(center[0], center[1], -half, -half);
    const auto se = offset_latlon(center[0], center[1], half, -half);
    const auto ne = offset_latlon(center[0], center[1], half, half);
    const auto nw = offset_latlon(center[0], center[1], -half, half);
    out << "{\"type\":\"Feature\",\"id\":\"way/" << ++id
        << "\",\"properties\":{\"building\":\"yes\"},\"geometry\":{\"type\":\"Polygon\","
        << "\"coordinates\":[[";
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "[%.7f,%.7f],[%.7f,%.7f],[%.7f,%.7f],[%.7f,%.7f],[%.7f,%.7f]", sw[1], sw[0],
                  se[1], se[0], ne[1], ne[0], nw[1], nw[0], sw[1], sw[0]);
    out << buf << "]]}}";
  }
  for (const auto& path_ll : geometry.street_paths) {
    sep();
    out << "{\"type\":\"Feature\",\"id\":\"way/" << ++id
        << "\",\"properties\":{\"highway\":\"residential\"},\"geometry\":{\"type\":"
        << "\"LineString\",\"coordinates\":[";
    for (std::size_t i = 0; i < path_ll.size(); ++i) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%s[%.7f,%.7f]", i ? "," : "", path_ll[i][1],
                    path_ll[i][0]);
      out << buf;
    }
    out << "]}}";
  }
  out << "]}";
  std::ofstream(path) << out.str();
}

// ExtraSensory-style directory: per-user CSVs with SITTING/WALKING flags.
// Stays sit still; walks move at ~1.5 m/s. Every user contributes both.
inline void write_es_fixture(const fs::path& dir, std::size_t users, std::uint64_t seed) {
  staykit::Rng rng(seed);
  fs::create_directories(dir);
  const double lat0 = 32.88, lon0 = -117.23;
  for (std::size_t u = 0; u < users; ++u) {
    std::ostringstream csv;
    csv << "timestamp,latitude,longitude,label:SITTING,label:WALKING\n";
    double t = 1000.0 + static_cast<double>(u);
    double x = rng.uniform(-500.0, 500.0), y = rng.uniform(-500.0, 500.0);
    for (int phase = 0; phase < 6; ++phase) {
      const bool stay = phase % 2 == 0;
      for (int i = 0; i < 20; ++i) {
        if (stay) {
          x += rng.uniform(-1.0, 1.0);
          y += rng.uniform(-1.0, 1.0);
        } else {
          x += rng.uniform(40.0, 90.0);
          y += rng.uniform(-20.0, 20.0);
        }
        t += 60.0;
        const auto ll = offset_latlon(lat0, lon0, x, y);
        char line[160];
        std::snprintf(line, sizeof(line), "%.0f,%.7f,%.7f,%d,%d\n", t, ll[0], ll[1],
                      stay ? 1 : 0, stay ? 0 : 1);
        csv << line;
      }
    }
    std::ofstream(dir / ("user" + std::to_string(u) + ".csv")) << csv.str();
  }
}

// Runs the CLI binary; returns the exit code.
inline int run_cli(const std::string& args) {
#ifndef STAYKIT_BIN
#error "STAYKIT_BIN must point at the staykit executable"
#endif
  const std::string cmd = std::string(STAYKIT_BIN) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

inline int run_cli_loud(const std::string& args) {
  const std::string cmd = std::string(STAYKIT_BIN) + " " + args;
  const int status = std::system(cmd.c_str());
  if (status < 0) return -1;
  return WEXITSTATUS(status);
}

inline std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace testutil
