#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "staykit/common.hpp"
#include "staykit/weak.hpp"

namespace staykit::weak {

using nlohmann::json;

const char* street_level_name(StreetLevel level) {
  static const char* names[kStreetLevelCount] = {"motorway",  "trunk",       "primary",
                                                 "secondary", "tertiary",    "residential",
                                                 "service"};
  return names[static_cast<int>(level)];
}

std::optional<StreetLevel> street_level_from_highway(const std::string& value) {
  // "_link" ramps share their parent tier.
  auto base = value;
  if (auto pos = base.find("_link"); pos != std::string::npos) base = base.substr(0, pos);
  if (base == "motorway") return StreetLevel::motorway;
  if (base == "trunk") return StreetLevel::trunk;
  if (base == "primary") return StreetLevel::primary;
  if (base == "secondary") return StreetLevel::secondary;
  if (base == "tertiary") return StreetLevel::tertiary;
  if (base == "residential" || base == "unclassified" || base == "living_street")
    return StreetLevel::residential;
  if (base == "service") return StreetLevel::service;
  return std::nullopt;  // footways, paths, etc. carry no motorized signal
}

OsmFeatureSet::OsmFeatureSet(std::vector<OsmBuilding> buildings,
                             std::vector<OsmAmenity> amenities, std::vector<OsmStreet> streets)
    : buildings_(std::move(buildings)),
      amenities_(std::move(amenities)),
      streets_(std::move(streets)) {
  double total = 0.0;
  for (const auto& a : amenities_) total += a.area;
  mean_amenity_area_ = amenities_.empty() ? 0.0 : total / static_cast<double>(amenities_.size());

  std::vector<geo::BBox> boxes;
  boxes.reserve(buildings_.size());
  for (const auto& b : buildings_) boxes.push_back(geo::bbox_of(b.ring));
  building_grid_ = geo::SpatialGrid(boxes);

  boxes.clear();
  for (const auto& a : amenities_) boxes.push_back(geo::bbox_of(a.ring));
  amenity_grid_ = geo::SpatialGrid(boxes);

  boxes.clear();
  for (const auto& s : streets_) boxes.push_back(geo::bbox_of(s.line));
  street_grid_ = geo::SpatialGrid(boxes);
}

void OsmFeatureSet::building_candidates(geo::XY p, std::vector<std::uint32_t>& out) const {
  building_grid_.query_point(p, out);
}

void OsmFeatureSet::amenity_candidates(geo::XY p, std::vector<std::uint32_t>& out) const {
  amenity_grid_.query_point(p, out);
}

void OsmFeatureSet::street_candidates(const geo::BBox& query,
                                      std::vector<std::uint32_t>& out) const {
  street_grid_.query_box(query, out);
}

namespace {

// Projects a GeoJSON [lon, lat] coordinate array; returns false when malformed.
bool project_ring(const json& coords, geo::UtmZone zone, std::vector<geo::XY>& out) {
  if (!coords.is_array()) return false;
  out.clear();
  out.reserve(coords.size());
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) return false;
    const double lon = c[0].get<double>();
    const double lat = c[1].get<double>();
    if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0) return false;
    out.push_back(geo::project(lat, lon, zone));
  }
  return true;
}

bool ring_closed(const std::vector<geo::XY>& ring) {
  return ring.size() >= 4 && ring.front().x == ring.back().x &&
         ring.front().y == ring.back().y;
}

std::string feature_id(const json& feature, std::size_t index) {
  if (feature.contains("id")) {
    const auto& id = feature["id"];
    if (id.is_string()) return id.get<std::string>();
    if (id.is_number_integer()) return std::to_string(id.get<long long>());
  }
  return "feature-" + std::to_string(index);
}

}  // namespace

OsmFeatureSet OsmFeatureSet::from_geojson(const std::string& text, geo::UtmZone zone,
                                          OsmIngestReport* report) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw input_error(std::string("osm geojson: parse failure: ") + e.what());
  }
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array())
    throw input_error("osm geojson: expected a FeatureCollection");

  OsmIngestReport local;
  std::vector<OsmBuilding> buildings;
  std::vector<OsmAmenity> amenities;
  std::vector<OsmStreet> streets;

  std::size_t index = 0;
  for (const auto& feature : doc["features"]) {
    const std::size_t my_index = index++;
    if (!feature.is_object() || !feature.contains("geometry") ||
        !feature["geometry"].is_object()) {
      ++local.skipped_invalid;
      continue;
    }
    const json props = feature.value("properties", json::object());
    const json& geom = feature["geometry"];
    const std::string gtype = geom.value("type", "");

    const bool is_building = props.contains("building");
    const bool is_amenity = props.contains("amenity");
    const bool is_highway = props.contains("highway") && props["highway"].is_string();

    if (gtype == "Polygon" && (is_building || is_amenity)) {
      const auto& rings = geom["coordinates"];
      if (!rings.is_array() || rings.empty()) {
        ++local.skipped_invalid;
        continue;
      }
      std::vector<geo::XY> outer;
      if (!project_ring(rings[0], zone, outer) || !ring_closed(outer)) {
        ++local.skipped_invalid;
        continue;
      }
      if (is_building) {
        buildings.push_back({feature_id(feature, my_index), outer});
        ++local.buildings;
      }
      if (is_amenity) {
        amenities.push_back({feature_id(feature, my_index), outer, geo::ring_area(outer)});
        ++local.amenities;
      }
    } else if (gtype == "LineString" && is_highway) {
      const auto tier = street_level_from_highway(props["highway"].get<std::string>());
      std::vector<geo::XY> line;
      if (!tier || !project_ring(geom["coordinates"], zone, line) || line.size() < 2) {
        ++local.skipped_invalid;
        continue;
      }
      streets.push_back({feature_id(feature, my_index), std::move(line), *tier});
      ++local.streets;
    }
    // Other feature kinds are simply not part of the labeling model.
  }

  if (report) *report = local;
  return OsmFeatureSet(std::move(buildings), std::move(amenities), std::move(streets));
}

OsmFeatureSet OsmFeatureSet::from_geojson_file(const std::string& path, geo::UtmZone zone,
                                               OsmIngestReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("osm geojson: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_geojson(buf.str(), zone, report);
}

}  // namespace staykit::weak
