#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "staykit/common.hpp"
#include "staykit/ingest.hpp"

namespace staykit::ingest {

namespace fs = std::filesystem;

namespace {

// Days-from-civil (proleptic Gregorian); avoids timezone machinery.
long long days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const long long era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<long long>(doe) - 719468;
}

struct ModeRange {
  double start = 0.0, end = 0.0;
  std::string mode;
};

std::vector<ModeRange> parse_labels_file(const std::string& path, std::size_t* skipped) {
  std::vector<ModeRange> ranges;
  std::ifstream in(path);
  if (!in) return ranges;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.find("Start") != std::string::npos) continue;  // header
    }
    // start-date start-time end-date end-time mode, tab or space separated
    std::vector<std::string> tokens;
    std::string tok;
    for (char ch : line) {
      if (ch == '\t' || ch == ' ') {
        if (!tok.empty()) tokens.push_back(std::move(tok));
        tok.clear();
      } else {
        tok.push_back(ch);
      }
    }
    if (!tok.empty()) tokens.push_back(std::move(tok));
    if (tokens.size() != 5) {
      if (skipped) ++*skipped;
      continue;
    }
    try {
      ModeRange r;
      r.start = parse_datetime(tokens[0], tokens[1]);
      r.end = parse_datetime(tokens[2], tokens[3]);
      r.mode = normalize_mode(tokens[4]);
      ranges.push_back(std::move(r));
    } catch (const input_error&) {
      if (skipped) ++*skipped;
    }
  }
  std::sort(ranges.begin(), ranges.end(),
            [](const ModeRange& a, const ModeRange& b) { return a.start < b.start; });
  return ranges;
}

std::optional<std::string> mode_at(const std::vector<ModeRange>& ranges, double t) {
  for (const auto& r : ranges)
    if (t >= r.start && t <= r.end) return r.mode;
  return std::nullopt;
}

}  // namespace

double parse_datetime(const std::string& date, const std::string& time) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char sep = date.find('/') != std::string::npos ? '/' : '-';
  char fmt_date[16];
  std::snprintf(fmt_date, sizeof(fmt_date), "%%d%c%%d%c%%d", sep, sep);
  if (std::sscanf(date.c_str(), fmt_date, &y, &mo, &d) != 3)
    throw input_error("geolife: bad date '" + date + "'");
  if (std::sscanf(time.c_str(), "%d:%d:%d", &h, &mi, &s) != 3)
    throw input_error("geolife: bad time '" + time + "'");
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 ||
      s > 60)
    throw input_error("geolife: datetime out of range '" + date + " " + time + "'");
  return static_cast<double>(days_from_civil(y, mo, d)) * 86400.0 + h * 3600.0 + mi * 60.0 + s;
}

std::string normalize_mode(const std::string& mode) {
  std::string m = mode;
  std::transform(m.begin(), m.end(), m.begin(), [](unsigned char c) { return std::tolower(c); });
  if (m == "walk") return "walking";
  if (m == "run") return "running";
  if (m == "bike") return "biking";
  return m;
}

std::vector<GeoLifeTrajectory> parse_geolife(const std::string& root, GeoLifeReport* report) {
  GeoLifeReport local;
  local.min_dt = std::numeric_limits<double>::infinity();
  local.max_dt = 0.0;

  const fs::path data_dir = fs::path(root) / "Data";
  if (!fs::is_directory(data_dir))
    throw input_error("geolife: no Data/ directory under " + root);

  std::vector<fs::path> users;
  for (const auto& entry : fs::directory_iterator(data_dir))
    if (entry.is_directory()) users.push_back(entry.path());
  std::sort(users.begin(), users.end());

  std::vector<GeoLifeTrajectory> out;
  for (const fs::path& user_dir : users) {
    const std::string user_id = user_dir.filename().string();
    const auto ranges =
        parse_labels_file((user_dir / "labels.txt").string(), &local.skipped_lines);

    const fs::path traj_dir = user_dir / "Trajectory";
    if (!fs::is_directory(traj_dir)) continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(traj_dir))
      if (entry.is_regular_file() && entry.path().extension() == ".plt")
        files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) continue;
    ++local.users;

    for (const fs::path& file : files) {
      ++local.files;
      std::ifstream in(file);
      if (!in) {
        ++local.skipped_lines;
        continue;
      }
      GeoLifeTrajectory gt;
      gt.trajectory.user_id = user_id;
      std::string line;
      std::size_t line_no = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line_no <= 6) continue;  // fixed PLT preamble
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != 7) {
          ++local.skipped_lines;
          continue;
        }
        try {
          traj::LocationPoint p;
          p.raw_lat = std::stod(std::string(fields[0]));
          p.raw_lon = std::stod(std::string(fields[1]));
          const double days = std::stod(std::string(fields[4]));
          p.t = parse_datetime(std::string(fields[5]), std::string(fields[6]));
          // Days field counts from 1899-12-30; used as a consistency check
          // only, since the text columns carry full precision.
          const double days_epoch = (days - 25569.0) * 86400.0;
          if (std::abs(days_epoch - p.t) > 2.0) {
            ++local.skipped_lines;
            continue;
          }
          if (p.raw_lat < -90.0 || p.raw_lat > 90.0 || p.raw_lon < -180.0 || p.raw_lon > 180.0) {
            ++local.skipped_lines;
            continue;
          }
          if (!gt.trajectory.points.empty() && p.t <= gt.trajectory.points.back().t) {
            ++local.dropped_non_ascending;
            continue;
          }
          if (!gt.trajectory.points.empty()) {
            const double dt = p.t - gt.trajectory.points.back().t;
            local.min_dt = std::min(local.min_dt, dt);
            local.max_dt = std::max(local.max_dt, dt);
          }
          gt.trajectory.points.push_back(p);
        } catch (const std::exception&) {
          ++local.skipped_lines;
        }
      }
      if (gt.trajectory.points.empty()) continue;
      local.points += gt.trajectory.points.size();
      gt.modes.reserve(gt.trajectory.points.size());
      for (const auto& p : gt.trajectory.points) {
        auto m = mode_at(ranges, p.t);
        if (m) ++local.annotated_points;
        gt.modes.push_back(std::move(m));
      }
      out.push_back(std::move(gt));
    }
  }

  if (!std::isfinite(local.min_dt)) local.min_dt = 0.0;
  if (report) *report = local;
  return out;
}

}  // namespace staykit::ingest
