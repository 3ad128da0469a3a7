// Geometric primitives shared by routing, zoning and demand: great-circle
// distance, point-in-polygon and a grid-accelerated nearest-node index.
//
// Coordinates are decimal degrees. Planar predicates (point-in-polygon,
// ring validation) treat longitude as x and latitude as y, which is adequate
// at neighborhood scale.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace amod {

inline constexpr double kEarthRadiusM = 6'371'000.0;

struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    /// Latitude in [-90, 90] and longitude in [-180, 180].
    bool in_range() const noexcept;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Exterior ring only; closure is implicit (the first vertex is not repeated).
struct Polygon {
    std::vector<GeoPoint> ring;
};

struct GeoBox {
    double lat_min = 0.0;
    double lat_max = 0.0;
    double lon_min = 0.0;
    double lon_max = 0.0;

    bool contains(const GeoPoint& p) const noexcept {
        return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
    }
};

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept;

/// True when `p` is inside `poly` or on its boundary.
bool point_in_polygon(const GeoPoint& p, const Polygon& poly) noexcept;

/// True when `p` lies on one of the ring's edges (planar test with a small
/// absolute tolerance in degrees).
bool on_polygon_boundary(const GeoPoint& p, const Polygon& poly) noexcept;

/// Throws std::invalid_argument when the ring has fewer than 3 vertices, an
/// explicit closing vertex, repeated consecutive vertices, out-of-range
/// coordinates or self-intersections.
void validate_polygon(const Polygon& poly);

GeoBox bounding_box(const Polygon& poly) noexcept;

/// Area centroid in lon/lat space (vertex mean for degenerate rings).
GeoPoint centroid(const Polygon& poly) noexcept;

/// Meters from `p` to the closest point of the ring, using a local
/// equirectangular projection centred on `p`.
double distance_to_boundary_m(const GeoPoint& p, const Polygon& poly) noexcept;

/// True when any pair of edges from the two rings intersect, or one ring has a
/// vertex inside the other.
bool polygons_intersect(const Polygon& a, const Polygon& b) noexcept;

/// Uniform grid over the bounding box of a point set. Query results are
/// identical to an exhaustive scan; the grid only prunes work.
class NodeIndex {
public:
    NodeIndex() = default;

    /// `points[i]` belongs to id `ids[i]`. Both spans must have equal length.
    NodeIndex(std::span<const GeoPoint> points, std::span<const std::uint32_t> ids,
              double cell_m = 500.0);

    /// Closest id within `max_radius_m` (inclusive); equal distances resolve
    /// to the lowest id.
    std::optional<std::uint32_t> nearest(const GeoPoint& p, double max_radius_m) const;

    std::size_t size() const noexcept { return points_.size(); }

private:
    struct Entry {
        GeoPoint point;
        std::uint32_t id;
    };

    std::size_t cell_of(int cx, int cy) const noexcept {
        return static_cast<std::size_t>(cy) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(cx);
    }
    int clamp_x(double lon) const noexcept;
    int clamp_y(double lat) const noexcept;

    std::vector<Entry> points_;
    std::vector<std::uint32_t> cell_start_;  // CSR offsets, size nx*ny+1
    std::vector<std::uint32_t> cell_items_;  // indices into points_
    GeoBox box_{};
    double dlat_ = 1.0;
    double dlon_ = 1.0;
    int nx_ = 0;
    int ny_ = 0;
};

std::optional<std::uint32_t> nearest_node(const GeoPoint& p, const NodeIndex& index,
                                          double max_radius_m);

}  // namespace amod
