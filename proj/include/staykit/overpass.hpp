#pragma once

#include <optional>
#include <string>

#include "staykit/geo.hpp"
#include "staykit/weak.hpp"

namespace staykit::weak {

struct GeoBBox {
  double south = 0.0, west = 0.0, north = 0.0, east = 0.0;
};

// Overpass QL for the three tag families within a bbox, geometry included.
std::string overpass_query(const GeoBBox& bbox);

// Converts an Overpass JSON response ("elements" with inline geometry) into
// the labeling feature set.
OsmFeatureSet parse_overpass_response(const std::string& json_text, geo::UtmZone zone,
                                      OsmIngestReport* report = nullptr);

class OverpassClient {
 public:
  struct Options {
    std::string host = "overpass-api.de";
    int port = 443;
    std::string path = "/api/interpreter";
    std::string cache_dir = ".staykit-cache";
    bool offline = false;  // never touch the network (tests, --deterministic runs)
  };

  explicit OverpassClient(Options options);

  // Returns the raw response body for the bbox query, from cache when
  // available. Network failures fall back to the cache and otherwise return
  // nullopt after emitting a warning on stderr.
  std::optional<std::string> fetch(const GeoBBox& bbox);

  std::string cache_path(const GeoBBox& bbox) const;

 private:
  Options options_;
};

}  // namespace staykit::weak
