// Dispatching zones and the mutable adjacency schedule that Expand and Target
// searches over and extends.
#pragma once

#include "amod/geo.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace amod {

using ZoneId = std::uint32_t;
using ZoneSetIds = std::set<ZoneId>;

/// Vertex-to-boundary distance under which two zones count as touching.
inline constexpr double kAdjacencyToleranceM = 1.0;

struct Zone {
    ZoneId id = 0;
    std::string name;
    Polygon boundary;
    GeoBox box;
    GeoPoint centroid;
};

/// Symmetric, irreflexive neighbour relation over zone ids [0, zone_count).
class AdjacencySchedule {
public:
    AdjacencySchedule() = default;
    explicit AdjacencySchedule(std::size_t zone_count) : neighbors_(zone_count) {}

    std::size_t zone_count() const noexcept { return neighbors_.size(); }

    /// Throws ContractViolation for an unknown zone.
    const ZoneSetIds& neighbors(ZoneId z) const;

    /// Links `a` and `b` in both directions. Bumps the revision even when the
    /// link already exists. Throws ContractViolation when a == b or either id
    /// is unknown.
    void add_neighbor(ZoneId a, ZoneId b);

    /// visited ∪ neighbours(visited). Equal to the input at a fixed point.
    ZoneSetIds expand_frontier(const ZoneSetIds& visited) const;

    std::uint64_t revision() const noexcept { return revision_; }

    /// Each symmetric pair once, lower id first, ascending.
    std::vector<std::pair<ZoneId, ZoneId>> pairs() const;

    /// `zone_id neighbor_id` rows as returned by pairs().
    void write(std::ostream& out) const;

    friend bool operator==(const AdjacencySchedule& a, const AdjacencySchedule& b) {
        return a.neighbors_ == b.neighbors_;
    }

private:
    void check(ZoneId z) const;

    std::vector<ZoneSetIds> neighbors_;
    std::uint64_t revision_ = 0;
};

class ZoneSet {
public:
    ZoneSet() = default;
    /// Ids must equal positions. Polygons are validated.
    explicit ZoneSet(std::vector<Zone> zones);

    std::size_t size() const noexcept { return zones_.size(); }
    bool empty() const noexcept { return zones_.empty(); }
    const Zone& operator[](ZoneId id) const { return zones_.at(id); }
    const std::vector<Zone>& zones() const noexcept { return zones_; }

    /// Zone containing `p` (boundary included); the lowest id wins on overlap.
    std::optional<ZoneId> locate(const GeoPoint& p) const;

    /// Zone whose centroid is nearest to `p` by haversine distance, lowest id
    /// on ties. Requires a non-empty set.
    ZoneId nearest_by_centroid(const GeoPoint& p) const;

    struct Located {
        ZoneId zone;
        bool fallback;  // true when `p` lies in no zone
    };
    Located locate_or_nearest(const GeoPoint& p) const;

private:
    std::vector<Zone> zones_;
};

/// Two zones are adjacent when a vertex of one lies within `tolerance_m` of
/// the other's boundary, or their polygons intersect.
bool zones_adjacent(const Zone& a, const Zone& b, double tolerance_m = kAdjacencyToleranceM);

AdjacencySchedule derive_adjacency(const ZoneSet& zones, double tolerance_m = kAdjacencyToleranceM);

struct ZoneMap {
    ZoneSet zones;
    AdjacencySchedule schedule;
};

/// Parses a GeoJSON FeatureCollection of Polygon features. Ids follow feature
/// order; the optional `name` property is kept. Interior rings are ignored.
/// Throws LoadError naming the feature on invalid geometry.
ZoneMap parse_zones(std::string_view geojson, std::string_view source = "<zones>");
ZoneMap load_zones(const std::filesystem::path& geojson_file);

Zone make_zone(ZoneId id, std::string name, std::vector<GeoPoint> ring);

}  // namespace amod
