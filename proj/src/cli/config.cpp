#include "staykit/cli/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "staykit/common.hpp"

namespace staykit::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!known.count(key))
      throw config_error("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

PipelineConfig PipelineConfig::from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config: parse failure: ") + e.what());
  }
  if (!doc.is_object()) throw config_error("config: top level must be an object");

  PipelineConfig cfg;
  reject_unknown(doc, {"dataset", "utm", "cleaning", "window", "encoder", "train",
                       "labeling", "search", "folds", "seed", "threads", "output_dir",
                       "checkpoint"},
                 "top level");

  if (doc.contains("dataset")) {
    const json& d = doc["dataset"];
    reject_unknown(d, {"kind", "geolife_root", "es_root", "osm_geojson", "activity_map"},
                   "dataset");
    read(d, "kind", cfg.dataset.kind);
    read(d, "geolife_root", cfg.dataset.geolife_root);
    read(d, "es_root", cfg.dataset.es_root);
    read(d, "osm_geojson", cfg.dataset.osm_geojson);
    read(d, "activity_map", cfg.dataset.activity_map);
    if (cfg.dataset.kind != "geolife" && cfg.dataset.kind != "es")
      throw config_error("config: dataset.kind must be 'geolife' or 'es'");
  }

  if (doc.contains("utm")) {
    const json& u = doc["utm"];
    reject_unknown(u, {"zone", "north"}, "utm");
    if (u.contains("zone")) {
      if (u["zone"].is_string()) {
        if (u["zone"].get<std::string>() != "auto")
          throw config_error("config: utm.zone must be an integer or \"auto\"");
        cfg.utm.auto_zone = true;
      } else {
        cfg.utm.auto_zone = false;
        cfg.utm.zone = u["zone"].get<int>();
      }
    }
    read(u, "north", cfg.utm.north);
  }

  if (doc.contains("cleaning")) {
    const json& c = doc["cleaning"];
    reject_unknown(c, {"max_gap_s", "max_speed_mps"}, "cleaning");
    read(c, "max_gap_s", cfg.cleaning.max_gap_s);
    read(c, "max_speed_mps", cfg.cleaning.max_speed_mps);
  }

  if (doc.contains("window")) {
    const json& w = doc["window"];
    reject_unknown(w, {"n", "batch"}, "window");
    read(w, "n", cfg.window.n);
    read(w, "batch", cfg.window.batch);
    if (cfg.window.n == 0 || cfg.window.batch == 0)
      throw config_error("config: window.n and window.batch must be positive");
  }

  if (doc.contains("encoder")) {
    const json& e = doc["encoder"];
    reject_unknown(e, {"d_model", "num_layers", "num_heads", "d_ff", "dropout"}, "encoder");
    read(e, "d_model", cfg.encoder.d_model);
    read(e, "num_layers", cfg.encoder.num_layers);
    read(e, "num_heads", cfg.encoder.num_heads);
    read(e, "d_ff", cfg.encoder.d_ff);
    read(e, "dropout", cfg.encoder.dropout);
  }

  if (doc.contains("train")) {
    const json& t = doc["train"];
    reject_unknown(t, {"epochs", "lr", "weight_decay", "lambda_vel", "lambda_ang",
                       "interpolate", "augment_rotate"},
                   "train");
    read(t, "epochs", cfg.train.epochs);
    read(t, "lr", cfg.train.lr);
    read(t, "weight_decay", cfg.train.weight_decay);
    read(t, "lambda_vel", cfg.train.lambda_vel);
    read(t, "lambda_ang", cfg.train.lambda_ang);
    read(t, "interpolate", cfg.train.interpolate);
    read(t, "augment_rotate", cfg.train.augment_rotate);
  }

  if (doc.contains("labeling")) {
    const json& l = doc["labeling"];
    reject_unknown(l, {"box_sizes", "overpass"}, "labeling");
    if (l.contains("box_sizes")) {
      const json& b = l["box_sizes"];
      reject_unknown(b, {"motorway", "trunk", "primary", "secondary", "tertiary",
                         "residential", "service"},
                     "labeling.box_sizes");
      for (std::size_t i = 0; i < weak::kStreetLevelCount; ++i) {
        const char* name = weak::street_level_name(static_cast<weak::StreetLevel>(i));
        if (b.contains(name)) cfg.box_sizes.full_side[i] = b.at(name).get<double>();
      }
    }
    if (l.contains("overpass")) {
      const json& o = l["overpass"];
      reject_unknown(o, {"enabled", "host", "port", "path"}, "labeling.overpass");
      read(o, "enabled", cfg.overpass.enabled);
      read(o, "host", cfg.overpass.host);
      read(o, "port", cfg.overpass.port);
      read(o, "path", cfg.overpass.path);
    }
  }

  if (doc.contains("search")) {
    const json& s = doc["search"];
    reject_unknown(s, {"kang_d_max", "kang_t_min", "cbsmot_radius", "cbsmot_min_time",
                       "dstar_count"},
                   "search");
    read(s, "kang_d_max", cfg.search.kang_d_max);
    read(s, "kang_t_min", cfg.search.kang_t_min);
    read(s, "cbsmot_radius", cfg.search.cbsmot_radius);
    read(s, "cbsmot_min_time", cfg.search.cbsmot_min_time);
    read(s, "dstar_count", cfg.search.dstar_count);
  }

  read(doc, "folds", cfg.folds);
  read(doc, "seed", cfg.seed);
  read(doc, "threads", cfg.threads);
  read(doc, "output_dir", cfg.output_dir);
  read(doc, "checkpoint", cfg.checkpoint);

  cfg.encoder.seed = cfg.seed;
  cfg.encoder.validate();
  return cfg;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json_text(buf.str());
}

std::string PipelineConfig::to_json_text() const {
  json doc;
  doc["dataset"] = {{"kind", dataset.kind},
                    {"geolife_root", dataset.geolife_root},
                    {"es_root", dataset.es_root},
                    {"osm_geojson", dataset.osm_geojson},
                    {"activity_map", dataset.activity_map}};
  if (utm.auto_zone)
    doc["utm"] = {{"zone", "auto"}, {"north", utm.north}};
  else
    doc["utm"] = {{"zone", utm.zone}, {"north", utm.north}};
  doc["cleaning"] = {{"max_gap_s", cleaning.max_gap_s},
                     {"max_speed_mps", cleaning.max_speed_mps}};
  doc["window"] = {{"n", window.n}, {"batch", window.batch}};
  doc["encoder"] = {{"d_model", encoder.d_model},
                    {"num_layers", encoder.num_layers},
                    {"num_heads", encoder.num_heads},
                    {"d_ff", encoder.d_ff},
                    {"dropout", encoder.dropout}};
  doc["train"] = {{"epochs", train.epochs},
                  {"lr", train.lr},
                  {"weight_decay", train.weight_decay},
                  {"lambda_vel", train.lambda_vel},
                  {"lambda_ang", train.lambda_ang},
                  {"interpolate", train.interpolate},
                  {"augment_rotate", train.augment_rotate}};
  json boxes = json::object();
  for (std::size_t i = 0; i < weak::kStreetLevelCount; ++i)
    boxes[weak::street_level_name(static_cast<weak::StreetLevel>(i))] =
        box_sizes.full_side[i];
  doc["labeling"] = {{"box_sizes", boxes},
                     {"overpass",
                      {{"enabled", overpass.enabled},
                       {"host", overpass.host},
                       {"port", overpass.port},
                       {"path", overpass.path}}}};
  doc["search"] = {{"kang_d_max", search.kang_d_max},
                   {"kang_t_min", search.kang_t_min},
                   {"cbsmot_radius", search.cbsmot_radius},
                   {"cbsmot_min_time", search.cbsmot_min_time},
                   {"dstar_count", search.dstar_count}};
  doc["folds"] = folds;
  doc["seed"] = seed;
  doc["threads"] = threads;
  doc["output_dir"] = output_dir;
  doc["checkpoint"] = checkpoint;
  return doc.dump(2);
}

geo::UtmZone PipelineConfig::resolve_zone(double mean_lon) const {
  if (!utm.auto_zone) return {utm.zone, utm.north};
  return {geo::zone_from_lon(mean_lon), utm.north};
}

std::string PipelineConfig::cache_dir() const {
  if (const char* env = std::getenv("STAYKIT_CACHE_DIR"); env && *env) return env;
  return (std::filesystem::path(output_dir) / "cache").string();
}

}  // namespace staykit::cli
