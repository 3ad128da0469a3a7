#include "amod/geo.hpp"
#include "amod/random.hpp"
#include "../support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace amod;

namespace {

Polygon unit_square() { return Polygon{{{0, 0}, {0, 1}, {1, 1}, {1, 0}}}; }

// Star-shaped ring around (lat, lon) with random radii; convex when the radii
// are all equal.
Polygon random_star(Rng& rng, bool convex) {
    const int n = 3 + static_cast<int>(uniform01(rng) * 10);
    const double r0 = uniform(rng, 0.2, 1.0);
    Polygon p;
    for (int i = 0; i < n; ++i) {
        const double a = 2 * std::numbers::pi * (i + uniform(rng, 0.1, 0.9)) / n;
        const double r = convex ? r0 : uniform(rng, 0.2, 1.0);
        p.ring.push_back({r * std::sin(a), r * std::cos(a)});
    }
    return p;
}

}  // namespace

TEST_SUITE("geo") {

TEST_CASE("haversine identity, antipode and a cross-checked city pair") {
    GeoPoint a{40.7580, -73.9855};
    CHECK(haversine_m(a, a) == 0.0);
    CHECK(haversine_m({0, 0}, {0, 180}) == doctest::Approx(20015086.796).epsilon(1e-9));
    // Reference from the atan2 form of the spherical Vincenty formula.
    CHECK(haversine_m(a, {40.6892, -74.0445}) == doctest::Approx(9123.94021139512).epsilon(1e-9));
}

TEST_CASE("haversine is symmetric and satisfies the triangle inequality") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        GeoPoint a{uniform(rng, -89, 89), uniform(rng, -180, 180)};
        GeoPoint b{uniform(rng, -89, 89), uniform(rng, -180, 180)};
        GeoPoint c{uniform(rng, -89, 89), uniform(rng, -180, 180)};
        CHECK(haversine_m(a, b) == haversine_m(b, a));
        CHECK(haversine_m(a, c) <= (haversine_m(a, b) + haversine_m(b, c)) * (1 + 1e-6));
    }
}

TEST_CASE("point in polygon: interior, exterior, boundary") {
    const Polygon sq = unit_square();
    CHECK(point_in_polygon({0.5, 0.5}, sq));
    CHECK_FALSE(point_in_polygon({2, 2}, sq));
    CHECK(point_in_polygon({0, 0.5}, sq));
    CHECK(point_in_polygon({0.5, 0}, sq));
    CHECK(point_in_polygon({1, 1}, sq));
    CHECK(on_polygon_boundary({0.5, 1}, sq));
    CHECK_FALSE(on_polygon_boundary({0.5, 0.5}, sq));
}

TEST_CASE("point in polygon agrees with the winding-number oracle") {
    Rng rng(5);
    int checked = 0;
    for (int k = 0; k < 200; ++k) {
        const Polygon poly = random_star(rng, k % 2 == 0);
        for (int i = 0; i < 50; ++i) {
            GeoPoint p{uniform(rng, -1.1, 1.1), uniform(rng, -1.1, 1.1)};
            if (on_polygon_boundary(p, poly)) continue;
            CHECK(point_in_polygon(p, poly) == (oracle::winding_number(p, poly) != 0));
            ++checked;
        }
    }
    CHECK(checked >= 1000);
}

TEST_CASE("polygon validation") {
    CHECK_NOTHROW(validate_polygon(unit_square()));
    CHECK_THROWS_AS(validate_polygon(Polygon{{{0, 0}, {0, 1}}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_polygon(Polygon{{{0, 0}, {0, 1}, {1, 1}, {0, 0}}}), std::invalid_argument);
    // Bow tie.
    CHECK_THROWS_AS(validate_polygon(Polygon{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_polygon(Polygon{{{0, 0}, {0, 1}, {0, 1}, {1, 1}}}), std::invalid_argument);
    CHECK_THROWS_AS(validate_polygon(Polygon{{{0, 0}, {0, 200}, {1, 1}}}), std::invalid_argument);
}

TEST_CASE("centroid and boundary distance of a square") {
    const Polygon sq{{{40.0, -74.0}, {40.0, -73.99}, {40.01, -73.99}, {40.01, -74.0}}};
    const GeoPoint c = centroid(sq);
    CHECK(c.lat == doctest::Approx(40.005));
    CHECK(c.lon == doctest::Approx(-73.995));
    // 0.005 degrees of latitude is about 556 m.
    CHECK(distance_to_boundary_m({40.005, -73.995}, sq) ==
          doctest::Approx(haversine_m({40.005, -73.995}, {40.005, -74.0})).epsilon(0.01));
}

TEST_CASE("nearest node: exact hit, tie-break and radius") {
    std::vector<GeoPoint> pts{{40.0, -74.0}, {40.001, -74.0}, {40.002, -74.0}, {40.0, -73.999},
                              {40.003, -74.0}, {40.004, -74.0}, {40.005, -74.0}, {40.0, -74.001}};
    std::vector<std::uint32_t> ids{0, 1, 2, 3, 4, 5, 6, 7};
    NodeIndex idx(pts, ids);
    CHECK(idx.nearest(pts[5], 10.0) == 5u);
    CHECK(nearest_node({39.999, -74.0}, idx, 1000.0) == 0u);
    // Ids 7 and 3 mirror each other about the query point.
    std::vector<GeoPoint> tie{{40.0, -73.999}, {40.0, -74.001}};
    std::vector<std::uint32_t> tie_ids{7, 3};
    NodeIndex tidx(tie, tie_ids);
    CHECK(tidx.nearest({40.0, -74.0}, 1000.0) == 3u);
    CHECK_FALSE(idx.nearest({41.0, -74.0}, 500.0).has_value());
    NodeIndex empty;
    CHECK_FALSE(empty.nearest({40.0, -74.0}, 1e9).has_value());
}

TEST_CASE("nearest node matches a linear scan on 10,000 queries") {
    Rng rng(99);
    std::vector<GeoPoint> pts;
    std::vector<std::uint32_t> ids;
    for (std::uint32_t i = 0; i < 800; ++i) {
        // Coarse lattice coordinates create exact distance ties.
        const double lat = 40.70 + std::round(uniform(rng, 0, 60)) * 0.0005;
        const double lon = -74.00 + std::round(uniform(rng, 0, 60)) * 0.0005;
        pts.push_back({lat, lon});
        ids.push_back(i * 3 + 1);
    }
    NodeIndex idx(pts, ids, 500.0);
    for (int q = 0; q < 10000; ++q) {
        GeoPoint p{uniform(rng, 40.68, 40.75), uniform(rng, -74.02, -73.95)};
        if (q % 5 == 0) p = pts[static_cast<std::size_t>(uniform01(rng) * pts.size())];
        const double radius = q % 3 == 0 ? 150.0 : 5000.0;
        REQUIRE(idx.nearest(p, radius) == oracle::brute_nearest(pts, ids, p, radius));
    }
}

}
