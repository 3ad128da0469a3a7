#include "amod/geo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace amod {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kBoundaryEps = 1e-12;

double hav(double theta) noexcept {
    const double s = std::sin(theta / 2.0);
    return s * s;
}

double cross(const GeoPoint& o, const GeoPoint& a, const GeoPoint& b) noexcept {
    return (a.lon - o.lon) * (b.lat - o.lat) - (a.lat - o.lat) * (b.lon - o.lon);
}

bool within_span(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p, double eps) noexcept {
    return p.lon >= std::min(a.lon, b.lon) - eps && p.lon <= std::max(a.lon, b.lon) + eps &&
           p.lat >= std::min(a.lat, b.lat) - eps && p.lat <= std::max(a.lat, b.lat) + eps;
}

bool on_segment(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) noexcept {
    const double len = std::hypot(b.lon - a.lon, b.lat - a.lat);
    return std::abs(cross(a, b, p)) <= kBoundaryEps * std::max(1.0, len) &&
           within_span(a, b, p, kBoundaryEps);
}

int sign(double v) noexcept { return (v > 0) - (v < 0); }

bool segments_intersect(const GeoPoint& p1, const GeoPoint& p2, const GeoPoint& q1,
                        const GeoPoint& q2) noexcept {
    const int d1 = sign(cross(q1, q2, p1));
    const int d2 = sign(cross(q1, q2, p2));
    const int d3 = sign(cross(p1, p2, q1));
    const int d4 = sign(cross(p1, p2, q2));
    if (d1 * d2 < 0 && d3 * d4 < 0) return true;
    if (d1 == 0 && within_span(q1, q2, p1, 0.0)) return true;
    if (d2 == 0 && within_span(q1, q2, p2, 0.0)) return true;
    if (d3 == 0 && within_span(p1, p2, q1, 0.0)) return true;
    if (d4 == 0 && within_span(p1, p2, q2, 0.0)) return true;
    return false;
}

}  // namespace

bool GeoPoint::in_range() const noexcept {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) noexcept {
    const double phi1 = a.lat * kDegToRad;
    const double phi2 = b.lat * kDegToRad;
    const double h = hav(phi2 - phi1) + std::cos(phi1) * std::cos(phi2) * hav((b.lon - a.lon) * kDegToRad);
    return 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
}

bool on_polygon_boundary(const GeoPoint& p, const Polygon& poly) noexcept {
    const auto& r = poly.ring;
    for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
        if (on_segment(r[j], r[i], p)) return true;
    }
    return false;
}

bool point_in_polygon(const GeoPoint& p, const Polygon& poly) noexcept {
    const auto& r = poly.ring;
    if (r.size() < 3) return false;
    if (on_polygon_boundary(p, poly)) return true;
    bool inside = false;
    for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
        const GeoPoint& a = r[i];
        const GeoPoint& b = r[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x = (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
            if (p.lon < x) inside = !inside;
        }
    }
    return inside;
}

void validate_polygon(const Polygon& poly) {
    const auto& r = poly.ring;
    const std::size_t n = r.size();
    if (n < 3) throw std::invalid_argument("ring has fewer than 3 vertices");
    if (r.front() == r.back()) throw std::invalid_argument("ring repeats its first vertex as last");
    for (std::size_t i = 0; i < n; ++i) {
        if (!r[i].in_range()) throw std::invalid_argument("vertex out of coordinate range");
        if (r[i] == r[(i + 1) % n]) throw std::invalid_argument("repeated consecutive vertex");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const GeoPoint& a1 = r[i];
        const GeoPoint& a2 = r[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            const GeoPoint& b1 = r[j];
            const GeoPoint& b2 = r[(j + 1) % n];
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) {
                // Neighbouring edges share one vertex; they may only touch there.
                const GeoPoint& shared = (j == i + 1) ? a2 : a1;
                const GeoPoint& other_a = (j == i + 1) ? a1 : a2;
                const GeoPoint& other_b = (j == i + 1) ? b2 : b1;
                if (sign(cross(shared, other_a, other_b)) == 0) {
                    const double dot = (other_a.lon - shared.lon) * (other_b.lon - shared.lon) +
                                       (other_a.lat - shared.lat) * (other_b.lat - shared.lat);
                    if (dot > 0) throw std::invalid_argument("ring folds back on itself");
                }
                continue;
            }
            if (segments_intersect(a1, a2, b1, b2)) {
                throw std::invalid_argument("ring is self-intersecting");
            }
        }
    }
    if (n == 3 && sign(cross(r[0], r[1], r[2])) == 0) throw std::invalid_argument("degenerate ring");
}

GeoBox bounding_box(const Polygon& poly) noexcept {
    GeoBox box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
               std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& v : poly.ring) {
        box.lat_min = std::min(box.lat_min, v.lat);
        box.lat_max = std::max(box.lat_max, v.lat);
        box.lon_min = std::min(box.lon_min, v.lon);
        box.lon_max = std::max(box.lon_max, v.lon);
    }
    return box;
}

GeoPoint centroid(const Polygon& poly) noexcept {
    const auto& r = poly.ring;
    double a2 = 0.0, cx = 0.0, cy = 0.0;
    const GeoPoint o = r.front();
    for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
        const double xj = r[j].lon - o.lon, yj = r[j].lat - o.lat;
        const double xi = r[i].lon - o.lon, yi = r[i].lat - o.lat;
        const double c = xj * yi - xi * yj;
        a2 += c;
        cx += (xj + xi) * c;
        cy += (yj + yi) * c;
    }
    if (std::abs(a2) < 1e-18) {
        GeoPoint m{};
        for (const auto& v : r) {
            m.lat += v.lat;
            m.lon += v.lon;
        }
        m.lat /= static_cast<double>(r.size());
        m.lon /= static_cast<double>(r.size());
        return m;
    }
    return GeoPoint{o.lat + cy / (3.0 * a2), o.lon + cx / (3.0 * a2)};
}

double distance_to_boundary_m(const GeoPoint& p, const Polygon& poly) noexcept {
    const double ky = kEarthRadiusM * kDegToRad;
    const double kx = ky * std::cos(p.lat * kDegToRad);
    const auto& r = poly.ring;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, j = r.size() - 1; i < r.size(); j = i++) {
        const double ax = (r[j].lon - p.lon) * kx, ay = (r[j].lat - p.lat) * ky;
        const double bx = (r[i].lon - p.lon) * kx, by = (r[i].lat - p.lat) * ky;
        const double dx = bx - ax, dy = by - ay;
        const double len2 = dx * dx + dy * dy;
        double t = len2 > 0 ? -(ax * dx + ay * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        best = std::min(best, std::hypot(ax + t * dx, ay + t * dy));
    }
    return best;
}

bool polygons_intersect(const Polygon& a, const Polygon& b) noexcept {
    const GeoBox ba = bounding_box(a), bb = bounding_box(b);
    if (ba.lat_max < bb.lat_min || bb.lat_max < ba.lat_min || ba.lon_max < bb.lon_min ||
        bb.lon_max < ba.lon_min) {
        return false;
    }
    const auto& ra = a.ring;
    const auto& rb = b.ring;
    for (std::size_t i = 0, j = ra.size() - 1; i < ra.size(); j = i++) {
        for (std::size_t k = 0, l = rb.size() - 1; k < rb.size(); l = k++) {
            if (segments_intersect(ra[j], ra[i], rb[l], rb[k])) return true;
        }
    }
    return point_in_polygon(ra.front(), b) || point_in_polygon(rb.front(), a);
}

// ---------------------------------------------------------------------------
// NodeIndex

NodeIndex::NodeIndex(std::span<const GeoPoint> points, std::span<const std::uint32_t> ids,
                     double cell_m) {
    if (points.size() != ids.size()) throw std::invalid_argument("NodeIndex: size mismatch");
    if (!(cell_m > 0)) throw std::invalid_argument("NodeIndex: cell size must be positive");
    points_.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) points_.push_back({points[i], ids[i]});
    if (points_.empty()) return;

    box_ = {points[0].lat, points[0].lat, points[0].lon, points[0].lon};
    for (const auto& e : points_) {
        box_.lat_min = std::min(box_.lat_min, e.point.lat);
        box_.lat_max = std::max(box_.lat_max, e.point.lat);
        box_.lon_min = std::min(box_.lon_min, e.point.lon);
        box_.lon_max = std::max(box_.lon_max, e.point.lon);
    }
    const double mid_lat = 0.5 * (box_.lat_min + box_.lat_max);
    dlat_ = cell_m / (kEarthRadiusM * kDegToRad);
    dlon_ = dlat_ / std::max(std::cos(mid_lat * kDegToRad), 1e-6);

    // Keep the grid bounded for very sparse or planet-wide inputs.
    constexpr double kMaxCells = 1 << 22;
    auto dims = [&] {
        nx_ = static_cast<int>(std::floor((box_.lon_max - box_.lon_min) / dlon_)) + 1;
        ny_ = static_cast<int>(std::floor((box_.lat_max - box_.lat_min) / dlat_)) + 1;
    };
    dims();
    while (static_cast<double>(nx_) * ny_ > kMaxCells) {
        dlat_ *= 2.0;
        dlon_ *= 2.0;
        dims();
    }

    const std::size_t ncell = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
    cell_start_.assign(ncell + 1, 0);
    std::vector<std::size_t> cell_of_point(points_.size());
    for (std::size_t i = 0; i < points_.size(); ++i) {
        cell_of_point[i] = cell_of(clamp_x(points_[i].point.lon), clamp_y(points_[i].point.lat));
        ++cell_start_[cell_of_point[i] + 1];
    }
    for (std::size_t c = 0; c < ncell; ++c) cell_start_[c + 1] += cell_start_[c];
    cell_items_.resize(points_.size());
    std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        cell_items_[fill[cell_of_point[i]]++] = static_cast<std::uint32_t>(i);
    }
}

int NodeIndex::clamp_x(double lon) const noexcept {
    const double c = std::floor((lon - box_.lon_min) / dlon_);
    return static_cast<int>(std::clamp(c, 0.0, static_cast<double>(nx_ - 1)));
}

int NodeIndex::clamp_y(double lat) const noexcept {
    const double c = std::floor((lat - box_.lat_min) / dlat_);
    return static_cast<int>(std::clamp(c, 0.0, static_cast<double>(ny_ - 1)));
}

std::optional<std::uint32_t> NodeIndex::nearest(const GeoPoint& p, double max_radius_m) const {
    if (points_.empty()) return std::nullopt;

    const int cx = clamp_x(p.lon);
    const int cy = clamp_y(p.lat);
    // Smallest cosine of latitude over the query and the grid, for a
    // longitude-based lower bound on haversine distance.
    const double max_abs_lat = std::max({std::abs(p.lat), std::abs(box_.lat_min), std::abs(box_.lat_max)});
    const double cos_min = std::cos(std::min(max_abs_lat, 90.0) * kDegToRad);

    double best_d = std::numeric_limits<double>::infinity();
    std::uint32_t best_id = 0;
    bool found = false;

    auto visit_cell = [&](int x, int y) {
        const std::size_t c = cell_of(x, y);
        for (std::uint32_t k = cell_start_[c]; k < cell_start_[c + 1]; ++k) {
            const Entry& e = points_[cell_items_[k]];
            const double d = haversine_m(p, e.point);
            if (d > max_radius_m) continue;
            if (!found || d < best_d || (d == best_d && e.id < best_id)) {
                best_d = d;
                best_id = e.id;
                found = true;
            }
        }
    };

    const int max_ring = std::max({cx, nx_ - 1 - cx, cy, ny_ - 1 - cy});
    for (int ring = 0; ring <= max_ring; ++ring) {
        const int x0 = cx - ring, x1 = cx + ring, y0 = cy - ring, y1 = cy + ring;
        for (int y = std::max(y0, 0); y <= std::min(y1, ny_ - 1); ++y) {
            if (y == y0 || y == y1) {
                for (int x = std::max(x0, 0); x <= std::min(x1, nx_ - 1); ++x) visit_cell(x, y);
            } else {
                if (x0 >= 0) visit_cell(x0, y);
                if (x1 < nx_) visit_cell(x1, y);
            }
        }

        // Everything not yet visited lies outside the box of scanned cells.
        const double box_lat_lo = box_.lat_min + y0 * dlat_;
        const double box_lat_hi = box_.lat_min + (y1 + 1) * dlat_;
        const double box_lon_lo = box_.lon_min + x0 * dlon_;
        const double box_lon_hi = box_.lon_min + (x1 + 1) * dlon_;
        const double dlat = std::max(0.0, std::min(p.lat - box_lat_lo, box_lat_hi - p.lat));
        const double dlon = std::max(0.0, std::min(p.lon - box_lon_lo, box_lon_hi - p.lon));
        const double h = std::min(hav(dlat * kDegToRad), cos_min * cos_min * hav(dlon * kDegToRad));
        const double lower = 2.0 * kEarthRadiusM * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
        // Strict comparison keeps equal-distance candidates with lower ids reachable.
        if (lower > max_radius_m || (found && lower > best_d)) break;
    }
    if (!found) return std::nullopt;
    return best_id;
}

std::optional<std::uint32_t> nearest_node(const GeoPoint& p, const NodeIndex& index,
                                          double max_radius_m) {
    return index.nearest(p, max_radius_m);
}

}  // namespace amod
