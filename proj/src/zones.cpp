#include "amod/zones.hpp"

#include "amod/error.hpp"
#include "amod/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

namespace amod {

// ---------------------------------------------------------------------------
// AdjacencySchedule

void AdjacencySchedule::check(ZoneId z) const {
    if (z >= neighbors_.size()) throw ContractViolation("unknown zone id " + std::to_string(z));
}

const ZoneSetIds& AdjacencySchedule::neighbors(ZoneId z) const {
    check(z);
    return neighbors_[z];
}

void AdjacencySchedule::add_neighbor(ZoneId a, ZoneId b) {
    check(a);
    check(b);
    if (a == b) throw ContractViolation("a zone cannot neighbour itself (zone " + std::to_string(a) + ")");
    neighbors_[a].insert(b);
    neighbors_[b].insert(a);
    ++revision_;
}

ZoneSetIds AdjacencySchedule::expand_frontier(const ZoneSetIds& visited) const {
    ZoneSetIds out = visited;
    for (ZoneId z : visited) {
        const auto& n = neighbors(z);
        out.insert(n.begin(), n.end());
    }
    return out;
}

std::vector<std::pair<ZoneId, ZoneId>> AdjacencySchedule::pairs() const {
    std::vector<std::pair<ZoneId, ZoneId>> out;
    for (ZoneId a = 0; a < neighbors_.size(); ++a) {
        for (ZoneId b : neighbors_[a]) {
            if (a < b) out.emplace_back(a, b);
        }
    }
    return out;
}

void AdjacencySchedule::write(std::ostream& out) const {
    for (auto [a, b] : pairs()) out << a << ' ' << b << '\n';
}

// ---------------------------------------------------------------------------
// ZoneSet

Zone make_zone(ZoneId id, std::string name, std::vector<GeoPoint> ring) {
    Zone z;
    z.id = id;
    z.name = std::move(name);
    z.boundary.ring = std::move(ring);
    validate_polygon(z.boundary);
    z.box = bounding_box(z.boundary);
    z.centroid = centroid(z.boundary);
    return z;
}

ZoneSet::ZoneSet(std::vector<Zone> zones) : zones_(std::move(zones)) {
    for (std::size_t i = 0; i < zones_.size(); ++i) {
        if (zones_[i].id != i) throw ContractViolation("zone ids must equal their positions");
        validate_polygon(zones_[i].boundary);
    }
}

std::optional<ZoneId> ZoneSet::locate(const GeoPoint& p) const {
    for (const Zone& z : zones_) {
        if (!z.box.contains(p)) continue;
        if (point_in_polygon(p, z.boundary)) return z.id;
    }
    return std::nullopt;
}

ZoneId ZoneSet::nearest_by_centroid(const GeoPoint& p) const {
    if (zones_.empty()) throw ContractViolation("nearest_by_centroid on an empty zone set");
    ZoneId best = 0;
    double best_d = haversine_m(p, zones_[0].centroid);
    for (std::size_t i = 1; i < zones_.size(); ++i) {
        const double d = haversine_m(p, zones_[i].centroid);
        if (d < best_d) {
            best_d = d;
            best = static_cast<ZoneId>(i);
        }
    }
    return best;
}

ZoneSet::Located ZoneSet::locate_or_nearest(const GeoPoint& p) const {
    if (auto z = locate(p)) return {*z, false};
    return {nearest_by_centroid(p), true};
}

// ---------------------------------------------------------------------------
// Adjacency derivation

bool zones_adjacent(const Zone& a, const Zone& b, double tolerance_m) {
    // Cheap reject: boxes further apart than the tolerance (in degrees of
    // latitude, which is the tighter of the two axes).
    const double tol_deg = tolerance_m / 111'000.0 * 2.0 + 1e-9;
    const double lon_slack = tol_deg / std::max(0.01, std::cos(a.centroid.lat * std::numbers::pi / 180.0));
    if (a.box.lat_max + tol_deg < b.box.lat_min || b.box.lat_max + tol_deg < a.box.lat_min ||
        a.box.lon_max + lon_slack < b.box.lon_min || b.box.lon_max + lon_slack < a.box.lon_min) {
        return false;
    }
    for (const auto& v : a.boundary.ring) {
        if (distance_to_boundary_m(v, b.boundary) <= tolerance_m) return true;
    }
    for (const auto& v : b.boundary.ring) {
        if (distance_to_boundary_m(v, a.boundary) <= tolerance_m) return true;
    }
    return polygons_intersect(a.boundary, b.boundary);
}

AdjacencySchedule derive_adjacency(const ZoneSet& zones, double tolerance_m) {
    AdjacencySchedule sched(zones.size());
    for (ZoneId a = 0; a < zones.size(); ++a) {
        for (ZoneId b = a + 1; b < zones.size(); ++b) {
            if (zones_adjacent(zones[a], zones[b], tolerance_m)) sched.add_neighbor(a, b);
        }
    }
    return sched;
}

// ---------------------------------------------------------------------------
// GeoJSON

ZoneMap parse_zones(std::string_view geojson, std::string_view source) {
    using nlohmann::json;
    const std::string src(source);
    json doc;
    try {
        doc = json::parse(geojson);
    } catch (const json::parse_error& e) {
        throw LoadError(src + ": invalid JSON: " + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array()) {
        throw LoadError(src + ": expected a GeoJSON FeatureCollection");
    }
    std::vector<Zone> zones;
    const auto& features = doc["features"];
    for (std::size_t i = 0; i < features.size(); ++i) {
        const auto& f = features[i];
        std::string name;
        if (f.contains("properties") && f["properties"].is_object()) {
            const auto& props = f["properties"];
            if (props.contains("name") && props["name"].is_string()) name = props["name"].get<std::string>();
        }
        const std::string where = src + ": feature " + std::to_string(i) + (name.empty() ? "" : " (" + name + ")");
        if (!f.contains("geometry") || !f["geometry"].is_object()) throw LoadError(where + ": missing geometry");
        const auto& geom = f["geometry"];
        const std::string type = geom.value("type", "");
        if (type != "Polygon") throw LoadError(where + ": geometry type '" + type + "' is not Polygon");
        if (!geom.contains("coordinates") || !geom["coordinates"].is_array() || geom["coordinates"].empty()) {
            throw LoadError(where + ": polygon has no rings");
        }
        std::vector<GeoPoint> ring;
        for (const auto& c : geom["coordinates"][0]) {
            if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
                throw LoadError(where + ": malformed coordinate");
            }
            ring.push_back(GeoPoint{c[1].get<double>(), c[0].get<double>()});
        }
        if (ring.size() >= 2 && ring.front() == ring.back()) ring.pop_back();
        try {
            zones.push_back(make_zone(static_cast<ZoneId>(i), std::move(name), std::move(ring)));
        } catch (const std::invalid_argument& e) {
            throw LoadError(where + ": " + e.what());
        }
    }
    ZoneMap out{ZoneSet(std::move(zones)), {}};
    out.schedule = derive_adjacency(out.zones);
    return out;
}

ZoneMap load_zones(const std::filesystem::path& geojson_file) {
    return parse_zones(text::read_file(geojson_file), geojson_file.string());
}

}  // namespace amod
