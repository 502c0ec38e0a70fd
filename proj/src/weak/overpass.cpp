#include "staykit/overpass.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT_DISABLED
#include <httplib.h>

#include "staykit/common.hpp"

namespace staykit::weak {

using nlohmann::json;

std::string overpass_query(const GeoBBox& b) {
  char bbox[160];
  std::snprintf(bbox, sizeof(bbox), "(%.7f,%.7f,%.7f,%.7f)", b.south, b.west, b.north, b.east);
  std::ostringstream q;
  q << "[out:json][timeout:90];(";
  q << "way[\"building\"]" << bbox << ";";
  q << "way[\"amenity\"]" << bbox << ";";
  q << "way[\"highway\"]" << bbox << ";";
  q << ");out geom;";
  return q.str();
}

OsmFeatureSet parse_overpass_response(const std::string& text, geo::UtmZone zone,
                                      OsmIngestReport* report) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw input_error(std::string("overpass: parse failure: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("elements") || !doc["elements"].is_array())
    throw input_error("overpass: response has no elements array");

  OsmIngestReport local;
  std::vector<OsmBuilding> buildings;
  std::vector<OsmAmenity> amenities;
  std::vector<OsmStreet> streets;

  for (const auto& el : doc["elements"]) {
    if (!el.is_object() || el.value("type", "") != "way" || !el.contains("geometry")) continue;
    const json tags = el.value("tags", json::object());
    std::vector<geo::XY> pts;
    bool ok = true;
    for (const auto& g : el["geometry"]) {
      if (!g.is_object() || !g.contains("lat") || !g.contains("lon")) {
        ok = false;
        break;
      }
      pts.push_back(geo::project(g["lat"].get<double>(), g["lon"].get<double>(), zone));
    }
    if (!ok || pts.empty()) {
      ++local.skipped_invalid;
      continue;
    }
    const std::string id = "way/" + std::to_string(el.value("id", 0LL));
    const bool closed = pts.size() >= 4 && pts.front().x == pts.back().x &&
                        pts.front().y == pts.back().y;

    if (tags.contains("building")) {
      if (closed) {
        buildings.push_back({id, pts});
        ++local.buildings;
      } else {
        ++local.skipped_invalid;
      }
    }
    if (tags.contains("amenity")) {
      if (closed) {
        amenities.push_back({id, pts, geo::ring_area(pts)});
        ++local.amenities;
      } else {
        ++local.skipped_invalid;
      }
    }
    if (tags.contains("highway") && tags["highway"].is_string()) {
      const auto tier = street_level_from_highway(tags["highway"].get<std::string>());
      if (tier && pts.size() >= 2) {
        streets.push_back({id, pts, *tier});
        ++local.streets;
      } else {
        ++local.skipped_invalid;
      }
    }
  }

  if (report) *report = local;
  return OsmFeatureSet(std::move(buildings), std::move(amenities), std::move(streets));
}

OverpassClient::OverpassClient(Options options) : options_(std::move(options)) {}

std::string OverpassClient::cache_path(const GeoBBox& b) const {
  char key[160];
  std::snprintf(key, sizeof(key), "%.7f,%.7f,%.7f,%.7f", b.south, b.west, b.north, b.east);
  char name[64];
  std::snprintf(name, sizeof(name), "overpass-%016llx.json",
                static_cast<unsigned long long>(fnv1a64(key)));
  return (std::filesystem::path(options_.cache_dir) / name).string();
}

std::optional<std::string> OverpassClient::fetch(const GeoBBox& bbox) {
  const std::string path = cache_path(bbox);
  if (std::filesystem::exists(path)) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  if (options_.offline) {
    std::cerr << "warning: overpass offline and bbox not cached (" << path << ")\n";
    return std::nullopt;
  }

  httplib::Client client(options_.host, options_.port);
  client.set_connection_timeout(20);
  client.set_read_timeout(90);
  httplib::Params params{{"data", overpass_query(bbox)}};
  auto res = client.Post(options_.path, params);
  if (!res || res->status != 200) {
    std::cerr << "warning: overpass request failed"
              << (res ? " (status " + std::to_string(res->status) + ")" : " (no connection)")
              << "; continuing cache-only\n";
    return std::nullopt;
  }

  std::filesystem::create_directories(options_.cache_dir);
  std::ofstream out(path, std::ios::binary);
  out << res->body;
  return res->body;
}

}  // namespace staykit::weak
