#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "staykit/common.hpp"
#include "staykit/ingest.hpp"

#if defined(STAYKIT_HAVE_ZLIB)
#include <zlib.h>
#endif

namespace staykit::ingest {

namespace fs = std::filesystem;

namespace {

std::string read_text_file(const fs::path& path) {
#if defined(STAYKIT_HAVE_ZLIB)
  if (path.extension() == ".gz") {
    gzFile f = gzopen(path.string().c_str(), "rb");
    if (!f) throw input_error("extrasensory: cannot open " + path.string());
    std::string out;
    char buf[1 << 16];
    int got = 0;
    while ((got = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, static_cast<size_t>(got));
    gzclose(f);
    return out;
  }
#endif
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("extrasensory: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool parse_user_file(const fs::path& path, const std::string& user_id,
                     std::vector<EsRecord>& out, EsReport& report) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split(line, ',');
  long ts_col = -1, lat_col = -1, lon_col = -1;
  std::vector<std::pair<std::size_t, std::string>> label_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = lower(std::string(header[c]));
    if (name == "timestamp") ts_col = static_cast<long>(c);
    else if (name == "latitude" || name == "lat") lat_col = static_cast<long>(c);
    else if (name == "longitude" || name == "lon" || name == "long")
      lon_col = static_cast<long>(c);
    else if (name.rfind("label:", 0) == 0)
      label_cols.emplace_back(c, std::string(header[c]).substr(6));
  }
  if (ts_col < 0 || lat_col < 0 || lon_col < 0)
    throw input_error("extrasensory: " + path.string() +
                      " lacks timestamp/latitude/longitude columns");

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != header.size()) {
      ++report.skipped_lines;
      continue;
    }
    try {
      EsRecord rec;
      rec.user_id = user_id;
      rec.t = std::stod(std::string(fields[ts_col]));
      const std::string lat_s(fields[lat_col]);
      const std::string lon_s(fields[lon_col]);
      if (lat_s.empty() || lon_s.empty() || lat_s == "nan" || lon_s == "nan") {
        ++report.skipped_lines;  // no usable location
        continue;
      }
      rec.lat = std::stod(lat_s);
      rec.lon = std::stod(lon_s);
      for (const auto& [col, name] : label_cols) {
        const std::string v(fields[col]);
        if (v == "1" || v == "1.0") rec.activities.insert(name);
      }
      out.push_back(std::move(rec));
      ++report.records;
    } catch (const std::exception&) {
      ++report.skipped_lines;
    }
  }
  return true;
}

}  // namespace

std::vector<EsRecord> parse_extrasensory(const std::string& root, EsReport* report) {
  EsReport local;
  if (!fs::is_directory(root)) throw input_error("extrasensory: not a directory: " + root);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.find(".csv") != std::string::npos) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<EsRecord> out;
  for (const fs::path& file : files) {
    std::string user = file.filename().string();
    user = user.substr(0, user.find('.'));
    if (parse_user_file(file, user, out, local)) ++local.users;
  }

  std::stable_sort(out.begin(), out.end(), [](const EsRecord& a, const EsRecord& b) {
    if (a.user_id != b.user_id) return a.user_id < b.user_id;
    return a.t < b.t;
  });
  if (report) *report = local;
  return out;
}

ActivityMap ActivityMap::defaults() {
  ActivityMap map;
  const char* stays[] = {"OR_indoors",     "SITTING",        "SLEEPING",
                         "LYING_DOWN",     "WATCHING_TV",    "EATING",
                         "COOKING",        "COMPUTER_WORK",  "IN_CLASS",
                         "IN_A_MEETING",   "AT_HOME",        "AT_WORK",
                         "AT_SCHOOL",      "LOC_home",       "LOC_main_workplace",
                         "WASHING_DISHES", "CLEANING",       "BATHING_-_SHOWER",
                         "TOILET",         "GROOMING",       "DRESSING",
                         "LAB_WORK",       "SURFING_THE_INTERNET"};
  const char* moves[] = {"WALKING",
                         "RUNNING",
                         "BICYCLING",
                         "IN_A_CAR",
                         "ON_A_BUS",
                         "DRIVE_-_I_M_THE_DRIVER",
                         "DRIVE_-_I_M_A_PASSENGER",
                         "IN_A_VEHICLE",
                         "MOTORBIKE",
                         "ON_A_TRAIN",
                         "SUBWAY",
                         "STROLLING",
                         "STAIRS_-_GOING_UP",
                         "STAIRS_-_GOING_DOWN",
                         "OR_exercise",
                         "OR_outside"};
  for (const char* a : stays) map.rules[a] = SrClass::stay;
  for (const char* a : moves) map.rules[a] = SrClass::non_stay;
  return map;
}

ActivityMap ActivityMap::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("activity map: cannot open " + path);
  ActivityMap map;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split(line, '\t');
    if (fields.size() != 2)
      throw input_error("activity map: line " + std::to_string(line_no) +
                        ": expected 'activity<TAB>class'");
    const std::string cls(fields[1]);
    SrClass sr;
    if (cls == "stay") sr = SrClass::stay;
    else if (cls == "non-stay") sr = SrClass::non_stay;
    else if (cls == "ignore") sr = SrClass::ignore;
    else
      throw input_error("activity map: line " + std::to_string(line_no) +
                        ": class must be stay, non-stay, or ignore");
    map.rules[std::string(fields[0])] = sr;
  }
  return map;
}

SrClass ActivityMap::classify(const std::string& activity) const {
  auto it = rules.find(activity);
  return it == rules.end() ? SrClass::ignore : it->second;
}

std::vector<LabeledPoint> derive_es_labels(const std::vector<EsRecord>& records,
                                           const ActivityMap& mapping) {
  std::vector<LabeledPoint> out;
  out.reserve(records.size());
  for (const EsRecord& rec : records) {
    LabeledPoint p;
    p.user_id = rec.user_id;
    p.t = rec.t;
    p.lat = rec.lat;
    p.lon = rec.lon;
    bool saw_stay = false, saw_non_stay = false;
    for (const std::string& a : rec.activities) {
      switch (mapping.classify(a)) {
        case SrClass::stay: saw_stay = true; break;
        case SrClass::non_stay: saw_non_stay = true; break;
        case SrClass::ignore: break;
      }
    }
    if (saw_stay != saw_non_stay) p.label = saw_stay ? 1 : 0;
    out.push_back(std::move(p));
  }
  return out;
}

std::size_t remove_suspicious_stays(std::vector<LabeledPoint>& points,
                                    const std::vector<double>& velocities) {
  if (velocities.size() != points.size())
    throw input_error("remove_suspicious_stays: velocity channel misaligned");
  double non_stay_sum = 0.0;
  std::size_t non_stay_count = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].label && *points[i].label == 0) {
      non_stay_sum += velocities[i];
      ++non_stay_count;
    }
  if (non_stay_count == 0) return 0;  // nothing to compare against
  const double threshold = non_stay_sum / static_cast<double>(non_stay_count);

  std::size_t removed = 0;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (points[i].label && *points[i].label == 1 && velocities[i] > threshold) {
      points[i].label.reset();
      ++removed;
    }
  return removed;
}

InterpolationResult interpolate(const traj::Trajectory& trajectory, double rate_hz) {
  if (rate_hz <= 0.0) throw input_error("interpolate: rate must be positive");
  const double tick = 1.0 / rate_hz;
  InterpolationResult result;
  result.dense.user_id = trajectory.user_id;
  auto& dense = result.dense.points;

  for (std::size_t i = 0; i < trajectory.points.size(); ++i) {
    const auto& p = trajectory.points[i];
    result.index_map.push_back(dense.size());
    dense.push_back(p);
    if (i + 1 == trajectory.points.size()) break;
    const auto& q = trajectory.points[i + 1];
    const double gap = q.t - p.t;
    // Strictly interior ticks anchored at the left point.
    for (double t = p.t + tick; t < q.t - 1e-9; t += tick) {
      const double f = (t - p.t) / gap;
      traj::LocationPoint m;
      m.t = t;
      m.x = p.x + f * (q.x - p.x);
      m.y = p.y + f * (q.y - p.y);
      m.raw_lat = p.raw_lat + f * (q.raw_lat - p.raw_lat);
      m.raw_lon = p.raw_lon + f * (q.raw_lon - p.raw_lon);
      dense.push_back(m);
    }
  }
  return result;
}

}  // namespace staykit::ingest
