#include "staykit/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "staykit/baselines.hpp"
#include "staykit/eval.hpp"
#include "staykit/ingest.hpp"
#include "staykit/nn/losses.hpp"
#include "staykit/nn/train.hpp"
#include "staykit/overpass.hpp"
#include "staykit/weak.hpp"

namespace staykit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path.string());
  out << content;
}

std::string point_key(const std::string& user, double t) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s\t%.3f", user.c_str(), t);
  return buf;
}

void record_run_config(const PipelineConfig& cfg, const std::string& command) {
  json doc = json::parse(cfg.to_json_text());
  doc["command"] = command;
  write_file(fs::path(cfg.output_dir) / ("run-config-" + command + ".json"), doc.dump(2));
}

std::size_t effective_threads(const PipelineConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// --- cleaned dataset + sidecar channels ------------------------------------

struct CleanedData {
  std::vector<traj::Trajectory> trajectories;
  std::vector<std::vector<std::optional<std::string>>> modes;  // empty when absent
  std::vector<std::vector<int>> labels;                        // -1 = unlabeled
  std::vector<std::vector<weak::WeakLabel>> weak_labels;       // empty when absent
  bool has_modes = false;
  bool has_labels = false;
  bool has_weak = false;
};

CleanedData load_cleaned(const PipelineConfig& cfg, bool want_modes, bool want_labels,
                         bool want_weak) {
  const fs::path dir(cfg.output_dir);
  const fs::path cleaned = dir / "cleaned.tsv";
  if (!fs::exists(cleaned))
    throw input_error("no cleaned trajectories at " + cleaned.string() + "; run ingest first");

  CleanedData data;
  {
    std::ifstream in(cleaned);
    data.trajectories = traj::read_trajectories_tsv(in, cfg.cleaning.max_gap_s);
  }

  std::unordered_map<std::string, std::string> mode_by_key;
  if (want_modes && fs::exists(dir / "modes.tsv")) {
    data.has_modes = true;
    std::ifstream in(dir / "modes.tsv");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto fields = split(line, '\t');
      if (fields.size() != 3) throw input_error("modes.tsv: expected 3 fields per line");
      mode_by_key[std::string(fields[0]) + "\t" + std::string(fields[1])] =
          std::string(fields[2]);
    }
  }

  std::unordered_map<std::string, int> label_by_key;
  if (want_labels && fs::exists(dir / "labels.tsv")) {
    data.has_labels = true;
    std::ifstream in(dir / "labels.tsv");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto fields = split(line, '\t');
      if (fields.size() != 3) throw input_error("labels.tsv: expected 3 fields per line");
      label_by_key[std::string(fields[0]) + "\t" + std::string(fields[1])] =
          std::stoi(std::string(fields[2]));
    }
  }

  std::unordered_map<std::string, weak::WeakLabel> weak_by_key;
  if (want_weak) {
    const fs::path weak_path = dir / "weak.tsv";
    if (!fs::exists(weak_path))
      throw input_error("no weak labels at " + weak_path.string() + "; run weaklabel first");
    data.has_weak = true;
    std::ifstream in(weak_path);
    for (const auto& row : weak::read_weak_labels_tsv(in))
      weak_by_key[point_key(row.user_id, row.t)] = row.label;
  }

  for (const auto& trajectory : data.trajectories) {
    std::vector<std::optional<std::string>> modes;
    std::vector<int> labels;
    std::vector<weak::WeakLabel> weak_labels;
    for (const auto& p : trajectory.points) {
      const std::string key = point_key(trajectory.user_id, p.t);
      if (data.has_modes) {
        auto it = mode_by_key.find(key);
        modes.push_back(it == mode_by_key.end() ? std::nullopt
                                                : std::optional<std::string>(it->second));
      }
      if (data.has_labels) {
        auto it = label_by_key.find(key);
        labels.push_back(it == label_by_key.end() ? -1 : it->second);
      }
      if (data.has_weak) {
        auto it = weak_by_key.find(key);
        if (it == weak_by_key.end())
          throw input_error("weak.tsv is missing point " + key + "; rerun weaklabel");
        weak_labels.push_back(it->second);
      }
    }
    data.modes.push_back(std::move(modes));
    data.labels.push_back(std::move(labels));
    data.weak_labels.push_back(std::move(weak_labels));
  }
  return data;
}

// --- window building ---------------------------------------------------------

enum class LabelSource { none, supervised, weak };

struct WindowBuild {
  std::vector<nn::TrainWindow> windows;
  std::vector<std::size_t> window_traj;  // source trajectory per window
  traj::StandardizationStats stats;
  double c_bar = 0.5;
  double c_bar_weak = 0.5;
};

WindowBuild build_windows(const CleanedData& data, const std::vector<std::size_t>& traj_subset,
                          LabelSource source, std::size_t n,
                          const traj::StandardizationStats* fixed_stats) {
  WindowBuild build;
  std::vector<traj::SequenceWindow> plain;
  std::vector<nn::SslTargets> ssl;
  std::vector<bool> has_ssl;
  std::vector<std::vector<int>> mode_labels;

  double label_sum = 0.0, label_count = 0.0;
  double weak_num = 0.0, weak_den = 0.0;

  for (std::size_t ti : traj_subset) {
    const auto& trajectory = data.trajectories[ti];
    if (trajectory.points.size() < 2) continue;
    const auto rows = traj::compute_features(trajectory);
    const std::size_t count = rows.size();

    std::vector<double> labels(count, 0.0), weights(count, 0.0);
    if (source == LabelSource::supervised) {
      for (std::size_t i = 0; i < count; ++i) {
        const int l = data.has_labels ? data.labels[ti][i] : -1;
        if (l >= 0) {
          labels[i] = static_cast<double>(l);
          weights[i] = 1.0;
          label_sum += labels[i];
          label_count += 1.0;
        }
      }
    } else if (source == LabelSource::weak) {
      for (std::size_t i = 0; i < count; ++i) {
        const auto& wl = data.weak_labels[ti][i];
        labels[i] = wl.c_weak;
        weights[i] = wl.w_weak;
        weak_num += wl.c_weak * wl.w_weak;
        weak_den += wl.w_weak;
      }
    }

    auto chunked = traj::chunk(rows, labels, weights, n, {trajectory.user_id, 0});
    for (std::size_t w = 0; w < chunked.size(); ++w) {
      const std::size_t first = chunked[w].origin.first_point;
      const std::size_t in_window = chunked[w].masked_in_count();
      const std::size_t next_index = first + in_window;
      build.window_traj.push_back(ti);
      plain.push_back(std::move(chunked[w]));
      if (next_index < trajectory.points.size()) {
        ssl.push_back(nn::ssl_targets(trajectory.points[next_index],
                                      trajectory.points[next_index - 1]));
        has_ssl.push_back(true);
      } else {
        ssl.push_back({});
        has_ssl.push_back(false);
      }
      if (data.has_modes) {
        std::vector<int> wm(n, -1);
        for (std::size_t i = 0; i < in_window; ++i) {
          const auto& mode = data.modes[ti][first + i];
          if (!mode) continue;
          // Five-mode grouping: walk (incl. running), bike, bus, car (incl.
          // taxi), train (incl. subway); other motorized modes stay unlabeled.
          const std::string& m = *mode;
          if (m == "walking" || m == "running") wm[i] = 0;
          else if (m == "biking") wm[i] = 1;
          else if (m == "bus") wm[i] = 2;
          else if (m == "car" || m == "taxi") wm[i] = 3;
          else if (m == "train" || m == "subway") wm[i] = 4;
        }
        mode_labels.push_back(std::move(wm));
      }
    }
  }

  if (plain.empty()) throw input_error("no usable windows: every trajectory is too short");

  build.stats = fixed_stats ? *fixed_stats : traj::compute_standardization_stats(plain);
  traj::standardize(plain, build.stats);

  build.windows.resize(plain.size());
  for (std::size_t w = 0; w < plain.size(); ++w) {
    build.windows[w].window = std::move(plain[w]);
    build.windows[w].has_ssl = has_ssl[w];
    if (has_ssl[w]) {
      build.windows[w].ssl_v = (ssl[w].v_next - build.stats.mean_v) / build.stats.std_v;
      build.windows[w].ssl_sin = ssl[w].sin_next;
      build.windows[w].ssl_cos = ssl[w].cos_next;
    }
    if (!mode_labels.empty()) build.windows[w].mode_labels = std::move(mode_labels[w]);
  }
  if (label_count > 0.0) build.c_bar = label_sum / label_count;
  if (weak_den > 0.0) build.c_bar_weak = weak_num / weak_den;
  return build;
}

// Stay probabilities for every point of the selected trajectories.
std::vector<std::vector<double>> predict_points(const nn::StayModel& model,
                                                const WindowBuild& build,
                                                std::size_t num_trajectories,
                                                const CleanedData& data) {
  std::vector<std::vector<double>> probs(num_trajectories);
  for (std::size_t ti = 0; ti < num_trajectories; ++ti)
    probs[ti].assign(data.trajectories[ti].points.size(),
                     std::numeric_limits<double>::quiet_NaN());
  for (std::size_t w = 0; w < build.windows.size(); ++w) {
    const auto& window = build.windows[w].window;
    const auto p = model.predict_stay(window);
    const std::size_t ti = build.window_traj[w];
    for (std::size_t i = 0; i < window.size(); ++i) {
      if (!window.mask[i]) continue;
      probs[ti][window.origin.first_point + i] = p[i];
    }
  }
  return probs;
}

// Pool (probability, label) pairs over labeled points of chosen trajectories.
void pool_predictions(const CleanedData& data, const std::vector<std::vector<double>>& probs,
                      const std::vector<std::size_t>& subset, std::vector<double>* out_probs,
                      std::vector<int>* out_labels) {
  for (std::size_t ti : subset) {
    if (!data.has_labels) continue;
    for (std::size_t i = 0; i < data.trajectories[ti].points.size(); ++i) {
      const int l = data.labels[ti][i];
      if (l < 0) continue;
      if (std::isnan(probs[ti][i])) continue;  // trajectory too short to window
      out_probs->push_back(probs[ti][i]);
      out_labels->push_back(l);
    }
  }
}

std::vector<eval::MetricsRow> constant_baseline_rows(const std::vector<int>& labels) {
  std::vector<eval::MetricsRow> rows;
  if (labels.empty()) return rows;
  const std::vector<double> ones(labels.size(), 1.0);
  const std::vector<double> zeros(labels.size(), 0.0);
  const auto stay = eval::pointwise_metrics(ones, labels);
  const auto move = eval::pointwise_metrics(zeros, labels);
  eval::MetricsRow r0;
  r0.method = "constant non-stay";
  r0.fold = "all";
  r0.f1 = move.f1;
  r0.accuracy = move.accuracy;
  if (move.has_precision) r0.precision = move.precision;
  r0.recall = move.recall;
  rows.push_back(r0);
  eval::MetricsRow r1;
  r1.method = "constant stay";
  r1.fold = "all";
  r1.f1 = stay.f1;
  r1.accuracy = stay.accuracy;
  if (stay.has_precision) r1.precision = stay.precision;
  r1.recall = stay.recall;
  rows.push_back(r1);
  return rows;
}

eval::MetricsRow metrics_row(const std::string& method, const std::string& fold,
                             const eval::PointwiseMetrics& m,
                             std::optional<double> auc = std::nullopt) {
  eval::MetricsRow row;
  row.method = method;
  row.fold = fold;
  row.f1 = m.f1;
  row.accuracy = m.accuracy;
  row.pr_auc = auc;
  if (m.has_precision) row.precision = m.precision;
  row.recall = m.recall;
  return row;
}

void emit_metrics(const PipelineConfig& cfg, const std::string& name,
                  const std::vector<eval::MetricsRow>& rows) {
  const std::string table = eval::format_metrics_table(rows);
  std::cout << table;
  write_file(fs::path(cfg.output_dir) / (name + ".txt"), table);
  std::ostringstream tsv;
  eval::write_metrics_tsv(tsv, rows);
  write_file(fs::path(cfg.output_dir) / (name + ".tsv"), tsv.str());
}

}  // namespace

PipelineConfig apply_flags(PipelineConfig cfg, const GlobalFlags& flags) {
  if (flags.seed) {
    cfg.seed = *flags.seed;
    cfg.encoder.seed = *flags.seed;
  }
  if (flags.threads) cfg.threads = *flags.threads;
  if (flags.deterministic) cfg.threads = 1;
  if (flags.output_dir) cfg.output_dir = *flags.output_dir;
  if (flags.checkpoint) cfg.checkpoint = *flags.checkpoint;
  return cfg;
}

// --- ingest -----------------------------------------------------------------

int cmd_ingest(const PipelineConfig& cfg) {
  record_run_config(cfg, "ingest");
  const fs::path dir(cfg.output_dir);
  traj::CleaningConfig cleaning{cfg.cleaning.max_gap_s, cfg.cleaning.max_speed_mps};

  json report;
  std::vector<traj::Trajectory> cleaned;
  std::ostringstream modes_out;
  std::ostringstream labels_out;
  bool any_modes = false, any_labels = false;

  if (cfg.dataset.kind == "geolife") {
    if (cfg.dataset.geolife_root.empty())
      throw config_error("ingest: dataset.geolife_root is required for kind=geolife");
    ingest::GeoLifeReport gl_report;
    auto raw = ingest::parse_geolife(cfg.dataset.geolife_root, &gl_report);

    double lon_sum = 0.0;
    std::size_t lon_count = 0;
    for (const auto& gt : raw)
      for (const auto& p : gt.trajectory.points) {
        lon_sum += p.raw_lon;
        ++lon_count;
      }
    if (lon_count == 0) {
      // Nothing to ingest: still a success with an empty report.
      write_file(dir / "cleaned.tsv", "");
      report["trajectories"] = 0;
      report["points"] = 0;
      write_file(dir / "ingest-report.json", report.dump(2));
      std::cout << "ingest: 0 trajectories\n";
      return 0;
    }
    const geo::UtmZone zone = cfg.resolve_zone(lon_sum / static_cast<double>(lon_count));

    json per_user = json::object();
    std::size_t dropped_speed = 0, dropped_dup = 0, splits = 0;
    for (auto& gt : raw) {
      for (auto& p : gt.trajectory.points) {
        const geo::XY xy = geo::project(p.raw_lat, p.raw_lon, zone);
        p.x = xy.x;
        p.y = xy.y;
      }
      traj::CleaningReport cr;
      auto pieces = traj::clean_and_split(gt.trajectory, cleaning, &cr);
      dropped_speed += cr.dropped_speed;
      dropped_dup += cr.dropped_duplicate_ts;
      splits += cr.splits;

      // Re-attach mode annotations by timestamp (cleaning may drop points).
      std::unordered_map<std::string, const std::string*> mode_at;
      for (std::size_t i = 0; i < gt.trajectory.points.size(); ++i)
        if (gt.modes[i])
          mode_at[point_key(gt.trajectory.user_id, gt.trajectory.points[i].t)] =
              &*gt.modes[i];
      for (auto& piece : pieces) {
        for (const auto& p : piece.points) {
          auto it = mode_at.find(point_key(piece.user_id, p.t));
          if (it != mode_at.end()) {
            char buf[128];
            std::snprintf(buf, sizeof(buf), "%s\t%.3f\t%s\n", piece.user_id.c_str(), p.t,
                          it->second->c_str());
            modes_out << buf;
            any_modes = true;
          }
        }
        if (!per_user.contains(piece.user_id)) per_user[piece.user_id] = 0;
        per_user[piece.user_id] = per_user[piece.user_id].get<std::size_t>() +
                                  piece.points.size();
        cleaned.push_back(std::move(piece));
      }
    }
    report["dataset"] = "geolife";
    report["zone"] = zone.zone;
    report["zone_north"] = zone.north;
    report["points_read"] = gl_report.points;
    report["skipped_lines"] = gl_report.skipped_lines;
    report["dropped_non_ascending"] = gl_report.dropped_non_ascending;
    report["annotated_points"] = gl_report.annotated_points;
    report["sample_rate_min_s"] = gl_report.min_dt;
    report["sample_rate_max_s"] = gl_report.max_dt;
    report["dropped_speed"] = dropped_speed;
    report["dropped_duplicate_ts"] = dropped_dup;
    report["splits"] = splits;
    report["per_user_points"] = per_user;
  } else {
    if (cfg.dataset.es_root.empty())
      throw config_error("ingest: dataset.es_root is required for kind=es");
    ingest::EsReport es_report;
    const auto records = ingest::parse_extrasensory(cfg.dataset.es_root, &es_report);
    const auto mapping = cfg.dataset.activity_map.empty()
                             ? ingest::ActivityMap::defaults()
                             : ingest::ActivityMap::from_file(cfg.dataset.activity_map);
    auto labeled = ingest::derive_es_labels(records, mapping);
    if (labeled.empty()) {
      write_file(dir / "cleaned.tsv", "");
      report["trajectories"] = 0;
      write_file(dir / "ingest-report.json", report.dump(2));
      std::cout << "ingest: 0 records\n";
      return 0;
    }

    double lon_sum = 0.0;
    for (const auto& p : labeled) lon_sum += p.lon;
    const geo::UtmZone zone = cfg.resolve_zone(lon_sum / static_cast<double>(labeled.size()));

    // Group into per-user trajectories, project, clean.
    std::map<std::string, traj::Trajectory> by_user;
    std::map<std::string, std::vector<std::optional<int>>> labels_by_user;
    for (const auto& p : labeled) {
      auto& t = by_user[p.user_id];
      t.user_id = p.user_id;
      const geo::XY xy = geo::project(p.lat, p.lon, zone);
      if (!t.points.empty() && p.t <= t.points.back().t) continue;  // keep ascending
      t.points.push_back({p.t, xy.x, xy.y, p.lat, p.lon});
      labels_by_user[p.user_id].push_back(p.label);
    }

    std::size_t dropped_speed = 0, dropped_dup = 0, splits = 0;
    std::vector<traj::Trajectory> pieces_all;
    std::vector<ingest::LabeledPoint> flat;
    std::vector<double> velocities;
    std::unordered_map<std::string, std::optional<int>> label_at;
    for (auto& [user, t] : by_user) {
      const auto& raw_labels = labels_by_user[user];
      for (std::size_t i = 0; i < t.points.size(); ++i)
        label_at[point_key(user, t.points[i].t)] = raw_labels[i];

      traj::CleaningReport cr;
      auto pieces = traj::clean_and_split(t, cleaning, &cr);
      dropped_speed += cr.dropped_speed;
      dropped_dup += cr.dropped_duplicate_ts;
      splits += cr.splits;
      for (auto& piece : pieces) {
        // Per-point velocity for the suspicious-stay pass.
        std::vector<double> v(piece.points.size(), 0.0);
        for (std::size_t i = 1; i < piece.points.size(); ++i) {
          const auto& a = piece.points[i - 1];
          const auto& b = piece.points[i];
          v[i] = std::hypot(b.x - a.x, b.y - a.y) / (b.t - a.t);
        }
        for (std::size_t i = 0; i < piece.points.size(); ++i) {
          ingest::LabeledPoint lp;
          lp.user_id = piece.user_id;
          lp.t = piece.points[i].t;
          lp.lat = piece.points[i].raw_lat;
          lp.lon = piece.points[i].raw_lon;
          lp.label = label_at[point_key(piece.user_id, piece.points[i].t)];
          flat.push_back(std::move(lp));
          velocities.push_back(v[i]);
        }
        pieces_all.push_back(std::move(piece));
      }
    }

    const std::size_t suspicious = ingest::remove_suspicious_stays(flat, velocities);

    std::size_t stays = 0, non_stays = 0;
    for (const auto& p : flat) {
      if (!p.label) continue;
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%s\t%.3f\t%d\n", p.user_id.c_str(), p.t, *p.label);
      labels_out << buf;
      any_labels = true;
      (*p.label == 1 ? stays : non_stays) += 1;
    }
    cleaned = std::move(pieces_all);

    report["dataset"] = "es";
    report["zone"] = zone.zone;
    report["zone_north"] = zone.north;
    report["records_read"] = es_report.records;
    report["skipped_lines"] = es_report.skipped_lines;
    report["users"] = es_report.users;
    report["suspicious_stays_removed"] = suspicious;
    report["labeled_stays"] = stays;
    report["labeled_non_stays"] = non_stays;
    report["dropped_speed"] = dropped_speed;
    report["dropped_duplicate_ts"] = dropped_dup;
    report["splits"] = splits;
  }

  std::size_t total_points = 0;
  for (const auto& t : cleaned) total_points += t.points.size();
  report["trajectories"] = cleaned.size();
  report["points"] = total_points;

  std::ostringstream cleaned_out;
  traj::write_trajectories_tsv(cleaned_out, cleaned);
  write_file(dir / "cleaned.tsv", cleaned_out.str());
  if (any_modes) write_file(dir / "modes.tsv", modes_out.str());
  if (any_labels) write_file(dir / "labels.tsv", labels_out.str());
  write_file(dir / "ingest-report.json", report.dump(2));

  std::cout << "ingest: " << cleaned.size() << " trajectories, " << total_points
            << " points -> " << (dir / "cleaned.tsv").string() << "\n";
  return 0;
}

// --- weaklabel ----------------------------------------------------------------

int cmd_weaklabel(const PipelineConfig& cfg) {
  record_run_config(cfg, "weaklabel");
  const fs::path dir(cfg.output_dir);
  auto data = load_cleaned(cfg, true, false, false);

  // Feature source: a GeoJSON extract, or Overpass over the data bbox.
  std::string osm_text;
  if (!cfg.dataset.osm_geojson.empty()) {
    osm_text = read_file(cfg.dataset.osm_geojson);
  } else if (cfg.overpass.enabled) {
    weak::GeoBBox bbox{90.0, 180.0, -90.0, -180.0};
    for (const auto& t : data.trajectories)
      for (const auto& p : t.points) {
        bbox.south = std::min(bbox.south, p.raw_lat);
        bbox.north = std::max(bbox.north, p.raw_lat);
        bbox.west = std::min(bbox.west, p.raw_lon);
        bbox.east = std::max(bbox.east, p.raw_lon);
      }
    weak::OverpassClient::Options opt;
    opt.host = cfg.overpass.host;
    opt.port = cfg.overpass.port;
    opt.path = cfg.overpass.path;
    opt.cache_dir = cfg.cache_dir();
    weak::OverpassClient client(opt);
    auto body = client.fetch(bbox);
    if (!body) throw input_error("weaklabel: overpass fetch failed and no cache available");
    osm_text = *body;
  } else {
    throw config_error(
        "weaklabel: provide dataset.osm_geojson or enable labeling.overpass");
  }

  double lon_sum = 0.0;
  std::size_t lon_count = 0;
  for (const auto& t : data.trajectories)
    for (const auto& p : t.points) {
      lon_sum += p.raw_lon;
      ++lon_count;
    }
  if (lon_count == 0) {
    write_file(dir / "weak.tsv", "");
    std::cout << "weaklabel: no points\n";
    return 0;
  }
  // The x,y columns were projected at ingest time; reuse that zone so the
  // OSM geometry lands in the same frame even across a zone boundary.
  geo::UtmZone zone = cfg.resolve_zone(lon_sum / static_cast<double>(lon_count));
  if (fs::exists(dir / "ingest-report.json")) {
    const json report = json::parse(read_file((dir / "ingest-report.json").string()));
    if (report.contains("zone")) zone.zone = report["zone"].get<int>();
    if (report.contains("zone_north")) zone.north = report["zone_north"].get<bool>();
  }

  // Cache keyed by the inputs that determine the output bytes.
  std::uint64_t key = fnv1a64(osm_text);
  {
    std::ostringstream cleaned_bytes;
    traj::write_trajectories_tsv(cleaned_bytes, data.trajectories);
    key = fnv1a64(cleaned_bytes.str(), key);
  }
  for (double side : cfg.box_sizes.full_side) key = fnv1a64(&side, sizeof(side), key);
  key = fnv1a64(&zone.zone, sizeof(zone.zone), key);
  char cache_name[64];
  std::snprintf(cache_name, sizeof(cache_name), "weak-%016llx.tsv",
                static_cast<unsigned long long>(key));
  const fs::path cache_path = fs::path(cfg.cache_dir()) / cache_name;
  const fs::path summary_cache_path =
      fs::path(cfg.cache_dir()) / (std::string("summary-") + cache_name);

  std::string weak_text;
  std::string summary_text;
  bool from_cache = false;
  if (fs::exists(cache_path) && fs::exists(summary_cache_path)) {
    weak_text = read_file(cache_path.string());
    summary_text = read_file(summary_cache_path.string());
    from_cache = true;
  }

  weak::HeuristicMass total_mass;
  if (!from_cache) {
    weak::OsmIngestReport osm_report;
    const bool overpass_payload = osm_text.find("\"elements\"") != std::string::npos &&
                                  osm_text.find("FeatureCollection") == std::string::npos;
    const auto features =
        overpass_payload ? weak::parse_overpass_response(osm_text, zone, &osm_report)
                         : weak::OsmFeatureSet::from_geojson(osm_text, zone, &osm_report);
    if (features.buildings().empty() && features.amenities().empty() &&
        features.streets().empty())
      std::cerr << "warning: no usable OSM features; every weak weight will be zero\n";
    if (osm_report.skipped_invalid > 0)
      std::cerr << "weaklabel: skipped " << osm_report.skipped_invalid
                << " invalid OSM geometries\n";

    std::ostringstream out;
    for (std::size_t ti = 0; ti < data.trajectories.size(); ++ti) {
      const auto& trajectory = data.trajectories[ti];
      weak::HeuristicMass mass;
      const auto labels = weak::label_trajectory(
          trajectory, features,
          data.has_modes ? data.modes[ti] : std::vector<std::optional<std::string>>{},
          cfg.box_sizes, &mass);
      total_mass.building += mass.building;
      total_mass.amenity += mass.amenity;
      total_mass.street += mass.street;
      total_mass.transport += mass.transport;
      weak::write_weak_labels_tsv(out, trajectory, labels);
    }
    weak_text = out.str();

    // Table-I-shaped summary: heuristic -> total confidence mass.
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "weak label\theuristic\ttotal confidence mass\n"
                  "stay\tbuilding\t%.3f\n"
                  "stay\tamenity\t%.3f\n"
                  "non-stay\tstreet\t%.3f\n"
                  "non-stay\ttransport\t%.3f\n",
                  total_mass.building, total_mass.amenity, total_mass.street,
                  total_mass.transport);
    summary_text = buf;
    write_file(cache_path, weak_text);
    write_file(summary_cache_path, summary_text);
  } else {
    std::cout << "weaklabel: cache hit (" << cache_path.string() << ")\n";
  }

  write_file(dir / "weak.tsv", weak_text);
  write_file(dir / "weak-summary.tsv", summary_text);
  std::cout << summary_text;
  std::cout << "weaklabel: wrote " << (dir / "weak.tsv").string() << "\n";
  return 0;
}

// --- train ---------------------------------------------------------------------

int cmd_train(const PipelineConfig& cfg, const std::string& loss_mode) {
  record_run_config(cfg, "train");
  const fs::path dir(cfg.output_dir);

  std::string mode = loss_mode;
  if (mode == "auto") mode = fs::exists(dir / "weak.tsv") ? "weak" : "supervised";
  if (mode != "weak" && mode != "supervised")
    throw config_error("train: loss mode must be auto, weak, or supervised");
  const bool weak_mode = mode == "weak";

  auto data = load_cleaned(cfg, false, !weak_mode, weak_mode);
  if (!weak_mode && !data.has_labels)
    throw input_error("train: supervised mode needs labels.tsv from an ES ingest");

  std::vector<std::size_t> all(data.trajectories.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto build = build_windows(data, all,
                             weak_mode ? LabelSource::weak : LabelSource::supervised,
                             cfg.window.n, nullptr);

  auto model = nn::StayModel::create(cfg.encoder);
  model.stats = build.stats;
  model.label_means.c_bar = build.c_bar;
  model.label_means.c_bar_weak = build.c_bar_weak;

  nn::TrainConfig tc;
  tc.epochs = cfg.train.epochs;
  tc.lr = cfg.train.lr;
  tc.weight_decay = cfg.train.weight_decay;
  tc.batch_size = cfg.window.batch;
  tc.seed = cfg.seed;
  tc.lambda_vel = cfg.train.lambda_vel;
  tc.lambda_ang = cfg.train.lambda_ang;
  tc.threads = effective_threads(cfg);
  tc.loss = weak_mode ? nn::LossKind::weak : nn::LossKind::supervised;
  tc.augment_rotate = cfg.train.augment_rotate;
  tc.verbose = true;

  const auto result = nn::train(model, build.windows, tc);

  std::ostringstream curve;
  curve << "epoch\tloss\n";
  for (const auto& e : result.curve) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu\t%.9f\n", e.epoch, e.loss);
    curve << buf;
  }
  write_file(dir / "train-curve.tsv", curve.str());
  model.save((dir / "checkpoint.json").string());

  std::cout << "train: " << build.windows.size() << " windows, " << result.curve.size()
            << " epochs, final loss " << result.curve.back().loss << "\n"
            << "train: checkpoint -> " << (dir / "checkpoint.json").string() << "\n";
  return 0;
}

// --- finetune / evaluate ---------------------------------------------------------

namespace {

// Optionally densify ES trajectories at 0.5 Hz; labels live on the original
// points only (they carry their exact timestamps into the dense sequence).
CleanedData interpolate_dataset(CleanedData data, bool enabled) {
  if (!enabled) return data;
  CleanedData out;
  out.has_labels = data.has_labels;
  for (std::size_t ti = 0; ti < data.trajectories.size(); ++ti) {
    const auto result = ingest::interpolate(data.trajectories[ti], 0.5);
    std::vector<int> labels(result.dense.points.size(), -1);
    if (data.has_labels)
      for (std::size_t i = 0; i < data.labels[ti].size(); ++i)
        labels[result.index_map[i]] = data.labels[ti][i];
    out.trajectories.push_back(std::move(result.dense));
    out.labels.push_back(std::move(labels));
    out.modes.push_back({});
    out.weak_labels.push_back({});
  }
  return out;
}

}  // namespace

int cmd_finetune(const PipelineConfig& cfg) {
  record_run_config(cfg, "finetune");
  const fs::path dir(cfg.output_dir);
  if (cfg.checkpoint.empty())
    throw config_error("finetune: a pre-trained checkpoint path is required");
  if (!fs::exists(cfg.checkpoint))
    throw input_error("finetune: checkpoint not found: " + cfg.checkpoint);

  auto base = nn::StayModel::load(cfg.checkpoint);
  auto data_raw = load_cleaned(cfg, false, true, false);
  if (!data_raw.has_labels) throw input_error("finetune: labels.tsv is required");
  auto data = interpolate_dataset(std::move(data_raw), cfg.train.interpolate);

  // Participant folds, identical protocol for every method.
  std::map<std::string, std::size_t> participant_points;
  for (const auto& t : data.trajectories) participant_points[t.user_id] += t.points.size();
  const auto fold_of = eval::split_by_participant(
      {participant_points.begin(), participant_points.end()}, cfg.folds, cfg.seed);

  std::vector<eval::MetricsRow> rows;
  std::vector<double> pooled_probs;
  std::vector<int> pooled_labels;

  for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
    std::vector<std::size_t> train_set, test_set;
    for (std::size_t ti = 0; ti < data.trajectories.size(); ++ti)
      (fold_of.at(data.trajectories[ti].user_id) == fold ? test_set : train_set)
          .push_back(ti);
    if (train_set.empty() || test_set.empty())
      throw input_error("finetune: a fold has no train or no test participants");

    // The frozen encoder expects inputs in its own standardization frame.
    auto train_build =
        build_windows(data, train_set, LabelSource::supervised, cfg.window.n, &base.stats);

    auto model = base.clone();
    model.label_means.c_bar = train_build.c_bar;

    nn::TrainConfig tc;
    tc.epochs = cfg.train.epochs;
    tc.lr = cfg.train.lr;
    tc.weight_decay = cfg.train.weight_decay;
    tc.batch_size = cfg.window.batch;
    tc.seed = mix_seed(cfg.seed, fold);
    tc.lambda_vel = cfg.train.lambda_vel;
    tc.lambda_ang = cfg.train.lambda_ang;
    tc.threads = effective_threads(cfg);
    tc.loss = nn::LossKind::supervised;
    tc.freeze_encoder = true;
    tc.augment_rotate = cfg.train.augment_rotate;
    nn::train(model, train_build.windows, tc);

    auto test_build =
        build_windows(data, test_set, LabelSource::supervised, cfg.window.n, &base.stats);
    // Predictions mapped back to the original labeled points.
    auto probs = predict_points(model, test_build, data.trajectories.size(), data);
    std::vector<double> fold_probs;
    std::vector<int> fold_labels;
    pool_predictions(data, probs, test_set, &fold_probs, &fold_labels);
    if (!fold_labels.empty()) {
      const auto m = eval::pointwise_metrics(fold_probs, fold_labels);
      rows.push_back(metrics_row("staykit-finetune", std::to_string(fold), m));
      pooled_probs.insert(pooled_probs.end(), fold_probs.begin(), fold_probs.end());
      pooled_labels.insert(pooled_labels.end(), fold_labels.begin(), fold_labels.end());
    }
    model.save((dir / ("checkpoint-fold" + std::to_string(fold) + ".json")).string());
  }

  if (pooled_labels.empty()) throw input_error("finetune: no labeled test predictions");
  const auto pooled = eval::pointwise_metrics(pooled_probs, pooled_labels);
  std::optional<double> auc;
  bool both = false;
  for (int l : pooled_labels) both = both || l == 0;
  bool any_stay = false;
  for (int l : pooled_labels) any_stay = any_stay || l == 1;
  if (both && any_stay) auc = eval::pr_auc(pooled_probs, pooled_labels);
  rows.insert(rows.begin(), metrics_row("staykit-finetune", "all", pooled, auc));
  for (const auto& row : constant_baseline_rows(pooled_labels)) rows.push_back(row);

  emit_metrics(cfg, "finetune-metrics", rows);
  return 0;
}

int cmd_evaluate(const PipelineConfig& cfg) {
  record_run_config(cfg, "evaluate");
  if (cfg.checkpoint.empty()) throw config_error("evaluate: a checkpoint path is required");
  if (!fs::exists(cfg.checkpoint))
    throw input_error("evaluate: checkpoint not found: " + cfg.checkpoint);

  auto model = nn::StayModel::load(cfg.checkpoint);
  auto data_raw = load_cleaned(cfg, false, true, false);
  if (!data_raw.has_labels) throw input_error("evaluate: labels.tsv is required");
  auto data = interpolate_dataset(std::move(data_raw), cfg.train.interpolate);

  std::vector<std::size_t> all(data.trajectories.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto build =
      build_windows(data, all, LabelSource::supervised, cfg.window.n, &model.stats);
  auto probs = predict_points(model, build, data.trajectories.size(), data);

  std::vector<double> pooled_probs;
  std::vector<int> pooled_labels;
  pool_predictions(data, probs, all, &pooled_probs, &pooled_labels);
  if (pooled_labels.empty()) throw input_error("evaluate: no labeled points to score");

  const auto m = eval::pointwise_metrics(pooled_probs, pooled_labels);
  std::optional<double> auc;
  bool has_pos = false, has_neg = false;
  for (int l : pooled_labels) (l == 0 ? has_pos : has_neg) = true;
  if (has_pos && has_neg) auc = eval::pr_auc(pooled_probs, pooled_labels);

  std::vector<eval::MetricsRow> rows = {metrics_row("staykit", "all", m, auc)};
  for (const auto& row : constant_baseline_rows(pooled_labels)) rows.push_back(row);
  emit_metrics(cfg, "evaluate-metrics", rows);
  return 0;
}

// --- baseline -------------------------------------------------------------------

int cmd_baseline(const PipelineConfig& cfg) {
  record_run_config(cfg, "baseline");
  auto data = load_cleaned(cfg, false, true, false);
  if (!data.has_labels) throw input_error("baseline: labels.tsv is required");

  std::vector<baselines::LabeledTrajectory> dataset;
  for (std::size_t ti = 0; ti < data.trajectories.size(); ++ti) {
    baselines::LabeledTrajectory lt;
    lt.trajectory = data.trajectories[ti];
    lt.labels = data.labels[ti];
    dataset.push_back(std::move(lt));
  }

  std::vector<eval::MetricsRow> rows;
  std::vector<int> pooled_labels_for_constants;

  struct Spec {
    std::string name;
    std::vector<baselines::ParamSet> candidates;
  };
  const std::vector<Spec> specs = {
      {"kang", baselines::kang_grid(cfg.search.kang_d_max, cfg.search.kang_t_min)},
      {"cbsmot",
       baselines::cbsmot_grid(cfg.search.cbsmot_radius, cfg.search.cbsmot_min_time)},
      {"dstar", baselines::dstar_random(cfg.seed, cfg.search.dstar_count)},
  };

  std::ostringstream fold_tsv;
  fold_tsv << "algorithm\tparams\tfold\tf1\tprecision\trecall\taccuracy\n";
  for (const auto& spec : specs) {
    const auto result =
        baselines::hyperparameter_search(dataset, spec.candidates, cfg.folds, cfg.seed);
    for (const auto& fold : result.folds) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s\t%s\t%zu\t%.4f\t%s\t%.4f\t%.4f\n",
                    spec.name.c_str(), fold.chosen.text().c_str(), fold.fold, fold.f1,
                    fold.has_precision ? std::to_string(fold.precision).c_str() : "-",
                    fold.recall, fold.accuracy);
      fold_tsv << buf;
    }
    const auto pooled =
        eval::binary_metrics_from_classes(result.pooled_predictions, result.pooled_labels);
    rows.push_back(metrics_row(spec.name, "all", pooled));
    pooled_labels_for_constants = result.pooled_labels;
  }

  for (const auto& row : constant_baseline_rows(pooled_labels_for_constants))
    rows.push_back(row);
  write_file(fs::path(cfg.output_dir) / "baseline-folds.tsv", fold_tsv.str());
  emit_metrics(cfg, "baseline-metrics", rows);
  return 0;
}

// --- tmd -----------------------------------------------------------------------

int cmd_tmd(const PipelineConfig& cfg) {
  record_run_config(cfg, "tmd");
  const fs::path dir(cfg.output_dir);
  auto data = load_cleaned(cfg, true, false, false);
  if (!data.has_modes) throw input_error("tmd: modes.tsv is required (GeoLife ingest)");

  std::vector<std::size_t> all(data.trajectories.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto build = build_windows(data, all, LabelSource::none, cfg.window.n, nullptr);

  constexpr std::size_t kNumModes = 5;
  const auto fold_of = eval::split_by_sequence(build.windows.size(), cfg.folds, cfg.seed);

  std::vector<eval::MetricsRow> rows;
  std::vector<int> pooled_pred, pooled_truth;

  for (std::size_t fold = 0; fold < cfg.folds; ++fold) {
    std::vector<nn::TrainWindow> train_windows;
    std::vector<std::size_t> test_windows;
    std::vector<double> class_counts(kNumModes, 0.0);
    for (std::size_t w = 0; w < build.windows.size(); ++w) {
      if (fold_of[w] == fold) {
        test_windows.push_back(w);
      } else {
        train_windows.push_back(build.windows[w]);
        for (std::size_t i = 0; i < build.windows[w].window.size(); ++i)
          if (build.windows[w].window.mask[i] && build.windows[w].mode_labels[i] >= 0)
            class_counts[build.windows[w].mode_labels[i]] += 1.0;
      }
    }
    double total = 0.0;
    for (double c : class_counts) total += c;
    if (total == 0.0) throw input_error("tmd: no labeled points in the training folds");
    std::vector<double> class_means(kNumModes);
    for (std::size_t m = 0; m < kNumModes; ++m) {
      if (class_counts[m] == 0.0)
        throw input_error("tmd: class " + std::to_string(m) +
                          " has no labels in the training folds");
      class_means[m] = class_counts[m] / total;
    }

    auto model = nn::StayModel::create(cfg.encoder, kNumModes);
    model.stats = build.stats;
    model.label_means.class_means = class_means;

    nn::TrainConfig tc;
    tc.epochs = cfg.train.epochs;
    tc.lr = cfg.train.lr;
    tc.weight_decay = cfg.train.weight_decay;
    tc.batch_size = cfg.window.batch;
    tc.seed = mix_seed(cfg.seed, fold);
    tc.lambda_vel = cfg.train.lambda_vel;
    tc.lambda_ang = cfg.train.lambda_ang;
    tc.threads = effective_threads(cfg);
    tc.loss = nn::LossKind::modes;
    tc.augment_rotate = cfg.train.augment_rotate;
    nn::train(model, train_windows, tc);

    std::vector<int> fold_pred, fold_truth;
    for (std::size_t w : test_windows) {
      const auto& tw = build.windows[w];
      const auto probs = model.predict_modes(tw.window);
      for (std::size_t i = 0; i < tw.window.size(); ++i) {
        if (!tw.window.mask[i] || tw.mode_labels[i] < 0) continue;
        int best = 0;
        for (std::size_t m = 1; m < kNumModes; ++m)
          if (probs[i][m] > probs[i][best]) best = static_cast<int>(m);
        fold_pred.push_back(best);
        fold_truth.push_back(tw.mode_labels[i]);
      }
    }
    if (!fold_truth.empty()) {
      eval::MetricsRow row;
      row.method = "staykit-tmd";
      row.fold = std::to_string(fold);
      row.f1 = eval::weighted_f1(fold_pred, fold_truth, kNumModes);
      row.accuracy = eval::multiclass_accuracy(fold_pred, fold_truth);
      rows.push_back(row);
      pooled_pred.insert(pooled_pred.end(), fold_pred.begin(), fold_pred.end());
      pooled_truth.insert(pooled_truth.end(), fold_truth.begin(), fold_truth.end());
    }
  }

  if (pooled_truth.empty()) throw input_error("tmd: no labeled test predictions");
  eval::MetricsRow pooled;
  pooled.method = "staykit-tmd";
  pooled.fold = "all";
  pooled.f1 = eval::weighted_f1(pooled_pred, pooled_truth, kNumModes);
  pooled.accuracy = eval::multiclass_accuracy(pooled_pred, pooled_truth);
  rows.insert(rows.begin(), pooled);

  emit_metrics(cfg, "tmd-metrics", rows);
  return 0;
}

}  // namespace staykit::cli
