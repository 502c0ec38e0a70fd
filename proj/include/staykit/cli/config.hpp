#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "staykit/geo.hpp"
#include "staykit/nn/transformer.hpp"
#include "staykit/weak.hpp"

namespace staykit::cli {

struct DatasetConfig {
  std::string kind = "geolife";  // geolife | es
  std::string geolife_root;
  std::string es_root;
  std::string osm_geojson;
  std::string activity_map;  // optional mapping file; defaults ship built in
};

struct UtmConfig {
  bool auto_zone = true;  // zone chosen from the mean longitude at ingest
  int zone = 50;
  bool north = true;
};

struct CleaningConfigKeys {
  double max_gap_s = 1200.0;
  double max_speed_mps = 350.0;
};

struct WindowConfig {
  std::size_t n = 256;
  std::size_t batch = 64;
};

struct TrainKeys {
  std::size_t epochs = 30;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  double lambda_vel = 0.1;
  double lambda_ang = 0.1;
  bool interpolate = true;  // 0.5 Hz densification for ES fine-tuning
  bool augment_rotate = true;
};

struct OverpassKeys {
  bool enabled = false;
  std::string host = "overpass-api.de";
  int port = 443;
  std::string path = "/api/interpreter";
};

struct SearchKeys {
  std::vector<double> kang_d_max = {25.0, 50.0, 100.0};
  std::vector<double> kang_t_min = {180.0, 300.0, 600.0};
  std::vector<double> cbsmot_radius = {25.0, 50.0, 100.0};
  std::vector<double> cbsmot_min_time = {180.0, 300.0, 600.0};
  std::size_t dstar_count = 10;
};

struct PipelineConfig {
  DatasetConfig dataset;
  UtmConfig utm;
  CleaningConfigKeys cleaning;
  WindowConfig window;
  nn::EncoderConfig encoder = nn::EncoderConfig::small();
  TrainKeys train;
  weak::StreetBoxSizes box_sizes = weak::StreetBoxSizes::defaults();
  OverpassKeys overpass;
  SearchKeys search;
  std::size_t folds = 5;
  std::uint64_t seed = 42;
  std::size_t threads = 0;  // 0 = hardware concurrency
  std::string output_dir = "out";
  std::string checkpoint;  // input checkpoint for finetune/evaluate

  // Strict parse: unknown keys anywhere are rejected.
  static PipelineConfig from_json_text(const std::string& text);
  static PipelineConfig from_file(const std::string& path);
  std::string to_json_text() const;

  geo::UtmZone resolve_zone(double mean_lon) const;
  std::string cache_dir() const;  // STAYKIT_CACHE_DIR overrides <output>/cache
};

}  // namespace staykit::cli
