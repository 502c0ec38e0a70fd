#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "staykit/geo.hpp"
#include "staykit/traj.hpp"

namespace staykit::weak {

// Street importance tiers recognized from OSM highway=* values.
enum class StreetLevel : int {
  motorway = 0,
  trunk,
  primary,
  secondary,
  tertiary,
  residential,
  service,
};
constexpr std::size_t kStreetLevelCount = 7;

const char* street_level_name(StreetLevel level);
std::optional<StreetLevel> street_level_from_highway(const std::string& highway_value);

struct OsmBuilding {
  std::string id;
  std::vector<geo::XY> ring;  // projected meters, closed
};

struct OsmAmenity {
  std::string id;
  std::vector<geo::XY> ring;
  double area = 0.0;  // square meters, shoelace on projected vertices
};

struct OsmStreet {
  std::string id;
  std::vector<geo::XY> line;  // projected meters, >= 2 vertices
  StreetLevel level = StreetLevel::residential;
};

struct OsmIngestReport {
  std::size_t buildings = 0;
  std::size_t amenities = 0;
  std::size_t streets = 0;
  std::size_t skipped_invalid = 0;  // broken rings / short lines / unknown tiers
};

// Immutable after construction; shared freely across parallel labelers.
class OsmFeatureSet {
 public:
  OsmFeatureSet() = default;
  OsmFeatureSet(std::vector<OsmBuilding> buildings, std::vector<OsmAmenity> amenities,
                std::vector<OsmStreet> streets);

  // GeoJSON FeatureCollection: polygons tagged building=* / amenity=*,
  // linestrings tagged highway=*. Geometry is projected into `zone`.
  static OsmFeatureSet from_geojson(const std::string& text, geo::UtmZone zone,
                                    OsmIngestReport* report = nullptr);
  static OsmFeatureSet from_geojson_file(const std::string& path, geo::UtmZone zone,
                                         OsmIngestReport* report = nullptr);

  const std::vector<OsmBuilding>& buildings() const { return buildings_; }
  const std::vector<OsmAmenity>& amenities() const { return amenities_; }
  const std::vector<OsmStreet>& streets() const { return streets_; }
  double mean_amenity_area() const { return mean_amenity_area_; }

  // Candidate supersets via the bbox grids.
  void building_candidates(geo::XY p, std::vector<std::uint32_t>& out) const;
  void amenity_candidates(geo::XY p, std::vector<std::uint32_t>& out) const;
  void street_candidates(const geo::BBox& query, std::vector<std::uint32_t>& out) const;

 private:
  std::vector<OsmBuilding> buildings_;
  std::vector<OsmAmenity> amenities_;
  std::vector<OsmStreet> streets_;
  double mean_amenity_area_ = 0.0;
  geo::SpatialGrid building_grid_;
  geo::SpatialGrid amenity_grid_;
  geo::SpatialGrid street_grid_;
};

struct WeakLabel {
  double c_weak = 0.5;  // stay probability in [0,1]
  double w_weak = 0.0;  // non-negative confidence; 0 means "no signal"
};

// Half side of the street query box per importance tier, meters.
struct StreetBoxSizes {
  std::array<double, kStreetLevelCount> full_side;  // d(l), box is d x d

  static StreetBoxSizes defaults();
  double side(StreetLevel level) const { return full_side[static_cast<int>(level)]; }
  double max_side() const;
};

// Heuristic confidence weights. Stay heuristics pair with c=1, non-stay
// heuristics with c=0.
double label_building(const traj::LocationPoint& p, const OsmFeatureSet& features);
double label_amenity(const traj::LocationPoint& p, const OsmFeatureSet& features);
double label_street(const traj::LocationPoint& p, const OsmFeatureSet& features,
                    const StreetBoxSizes& box_sizes);
// Throws input_error for modes outside the GeoLife vocabulary.
double label_transport(const std::optional<std::string>& mode);

bool is_motorized_mode(const std::string& mode);
bool is_known_mode(const std::string& mode);

// Confidence-weighted average of the four heuristics; (0.5, 0) when nothing
// fires.
WeakLabel combine(const traj::LocationPoint& p, const OsmFeatureSet& features,
                  const std::optional<std::string>& mode, const StreetBoxSizes& box_sizes);

struct HeuristicMass {
  double building = 0.0;
  double amenity = 0.0;
  double street = 0.0;
  double transport = 0.0;
};

std::vector<WeakLabel> label_trajectory(const traj::Trajectory& traj,
                                        const OsmFeatureSet& features,
                                        const std::vector<std::optional<std::string>>& modes,
                                        const StreetBoxSizes& box_sizes,
                                        HeuristicMass* mass = nullptr);

// TSV: user_id, t (3 decimals), c_weak (6 decimals), w_weak (6 decimals).
void write_weak_labels_tsv(std::ostream& out, const traj::Trajectory& traj,
                           const std::vector<WeakLabel>& labels);
struct WeakLabelRow {
  std::string user_id;
  double t = 0.0;
  WeakLabel label;
};
std::vector<WeakLabelRow> read_weak_labels_tsv(std::istream& in);

}  // namespace staykit::weak
