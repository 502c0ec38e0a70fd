#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>

#include "staykit/common.hpp"
#include "staykit/weak.hpp"

namespace staykit::weak {

StreetBoxSizes StreetBoxSizes::defaults() {
  // Scaled with typical right-of-way width per tier.
  return {{40.0, 35.0, 30.0, 25.0, 20.0, 15.0, 10.0}};
}

double StreetBoxSizes::max_side() const {
  return *std::max_element(full_side.begin(), full_side.end());
}

double label_building(const traj::LocationPoint& p, const OsmFeatureSet& features) {
  const geo::XY q{p.x, p.y};
  std::vector<std::uint32_t> candidates;
  features.building_candidates(q, candidates);
  for (std::uint32_t id : candidates)
    if (geo::point_in_ring(q, features.buildings()[id].ring)) return 1.0;
  return 0.0;
}

double label_amenity(const traj::LocationPoint& p, const OsmFeatureSet& features) {
  const geo::XY q{p.x, p.y};
  std::vector<std::uint32_t> candidates;
  features.amenity_candidates(q, candidates);
  double best = 0.0;
  for (std::uint32_t id : candidates) {
    const OsmAmenity& a = features.amenities()[id];
    if (!geo::point_in_ring(q, a.ring)) continue;
    const double mean = features.mean_amenity_area();
    if (!(mean > 0.0))
      throw input_error("label_amenity: mean amenity area must be positive");
    best = std::max(best, std::exp(-a.area / mean));
  }
  return best;
}

double label_street(const traj::LocationPoint& p, const OsmFeatureSet& features,
                    const StreetBoxSizes& box_sizes) {
  const geo::XY q{p.x, p.y};
  geo::BBox query{q.x, q.y, q.x, q.y};
  query.expand(box_sizes.max_side() / 2.0);
  std::vector<std::uint32_t> candidates;
  features.street_candidates(query, candidates);
  for (std::uint32_t id : candidates) {
    const OsmStreet& s = features.streets()[id];
    const double half = box_sizes.side(s.level) / 2.0;
    for (std::size_t i = 1; i < s.line.size(); ++i)
      if (geo::segment_intersects_box(s.line[i - 1], s.line[i], q, half)) return 1.0;
  }
  return 0.0;
}

namespace {

// GeoLife transportation mode vocabulary; both the long forms used in the
// dataset description and the short forms in labels.txt.
const std::set<std::string>& motorized_modes() {
  static const std::set<std::string> m = {"motorcycle", "car",    "taxi", "bus",
                                          "train",      "subway", "boat", "airplane"};
  return m;
}

const std::set<std::string>& non_motorized_modes() {
  static const std::set<std::string> m = {"walk", "walking", "run", "running", "bike",
                                          "biking", "motorbike"};
  return m;
}

}  // namespace

bool is_known_mode(const std::string& mode) {
  return motorized_modes().count(mode) > 0 || non_motorized_modes().count(mode) > 0;
}

bool is_motorized_mode(const std::string& mode) { return motorized_modes().count(mode) > 0; }

double label_transport(const std::optional<std::string>& mode) {
  if (!mode) return 0.0;
  if (!is_known_mode(*mode))
    throw input_error("label_transport: unknown transportation mode '" + *mode + "'");
  return is_motorized_mode(*mode) ? 1.0 : 0.0;
}

namespace {

WeakLabel combine_weights(double w_build, double w_am, double w_street, double w_transport) {
  const double total = w_build + w_am + w_street + w_transport;
  if (total <= 0.0) return WeakLabel{0.5, 0.0};
  // Stay heuristics carry c=1, non-stay heuristics c=0.
  const double c = (w_build * 1.0 + w_am * 1.0 + w_street * 0.0 + w_transport * 0.0) / total;
  return WeakLabel{c, total};
}

}  // namespace

WeakLabel combine(const traj::LocationPoint& p, const OsmFeatureSet& features,
                  const std::optional<std::string>& mode, const StreetBoxSizes& box_sizes) {
  return combine_weights(label_building(p, features), label_amenity(p, features),
                         label_street(p, features, box_sizes), label_transport(mode));
}

std::vector<WeakLabel> label_trajectory(const traj::Trajectory& traj,
                                        const OsmFeatureSet& features,
                                        const std::vector<std::optional<std::string>>& modes,
                                        const StreetBoxSizes& box_sizes, HeuristicMass* mass) {
  if (!modes.empty() && modes.size() != traj.points.size())
    throw input_error("label_trajectory: mode annotations misaligned with points");

  std::vector<WeakLabel> out(traj.points.size());
  HeuristicMass local;
  for (std::size_t i = 0; i < traj.points.size(); ++i) {
    const auto& p = traj.points[i];
    const std::optional<std::string> mode = modes.empty() ? std::nullopt : modes[i];
    const double w_build = label_building(p, features);
    const double w_am = label_amenity(p, features);
    const double w_street = label_street(p, features, box_sizes);
    const double w_transport = label_transport(mode);
    local.building += w_build;
    local.amenity += w_am;
    local.street += w_street;
    local.transport += w_transport;
    out[i] = combine_weights(w_build, w_am, w_street, w_transport);
  }
  if (mass) *mass = local;
  return out;
}

void write_weak_labels_tsv(std::ostream& out, const traj::Trajectory& traj,
                           const std::vector<WeakLabel>& labels) {
  char buf[192];
  for (std::size_t i = 0; i < traj.points.size() && i < labels.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s\t%.3f\t%.6f\t%.6f\n", traj.user_id.c_str(),
                  traj.points[i].t, labels[i].c_weak, labels[i].w_weak);
    out << buf;
  }
}

std::vector<WeakLabelRow> read_weak_labels_tsv(std::istream& in) {
  std::vector<WeakLabelRow> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != 4) throw input_error("weak label tsv: expected 4 fields per line");
    WeakLabelRow row;
    row.user_id = std::string(fields[0]);
    row.t = std::stod(std::string(fields[1]));
    row.label.c_weak = std::stod(std::string(fields[2]));
    row.label.w_weak = std::stod(std::string(fields[3]));
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace staykit::weak
