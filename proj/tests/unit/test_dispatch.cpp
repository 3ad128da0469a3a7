#include "amod/dispatch.hpp"
#include "amod/error.hpp"

#include "../support/oracles.hpp"

#include <doctest.h>

using namespace amod;

namespace {

constexpr double kLineStep = 0.0011;  // about 93 m of longitude per node

RoadNetwork line_network(int n) {
    std::vector<RoadNode> nodes;
    std::vector<RoadEdge> edges;
    for (int i = 0; i < n; ++i) nodes.push_back({static_cast<NodeId>(i), {40.75, -73.99 + i * kLineStep}});
    for (NodeId i = 0; i + 1 < static_cast<NodeId>(n); ++i) {
        edges.push_back({i, i + 1, 100, 10});
        edges.push_back({i + 1, i, 100, 10});
    }
    return RoadNetwork(std::move(nodes), std::move(edges));
}

// Zone covering line nodes [first, last].
Zone line_zone(ZoneId id, int first, int last) {
    const double lo = -73.99 + (first - 0.5) * kLineStep;
    const double hi = -73.99 + (last + 0.5) * kLineStep;
    return make_zone(id, "L" + std::to_string(id), {{40.749, lo}, {40.749, hi}, {40.751, hi}, {40.751, lo}});
}

// Everything a dispatch call needs, kept alive together.
struct World {
    RoadNetwork net;
    ZoneSet zones;
    TrafficState traffic;
    RouteCache routes;
    std::vector<ZoneId> node_zone;

    World(RoadNetwork n, ZoneSet z, TrafficState t = {})
        : net(std::move(n)), zones(std::move(z)), traffic(std::move(t)), routes(net, traffic),
          node_zone(map_nodes_to_zones(net, zones)) {}

    DispatchContext ctx() { return DispatchContext{routes, zones, node_zone}; }

    CallSite call(RequestId id, double t, NodeId pickup, NodeId dropoff, int party = 1) const {
        return CallSite{id, t, party, pickup, dropoff, node_zone[pickup]};
    }
};

// Three horizontal bands over the 3x3 grid: band r holds nodes 3r..3r+2.
World banded_grid() {
    RoadNetwork net = oracle::hand_grid();
    ZoneSet z = oracle::block_zones(net, 3, 1);
    return World(std::move(net), std::move(z));
}

AdjacencySchedule chain3() {
    AdjacencySchedule s(3);
    s.add_neighbor(0, 1);
    s.add_neighbor(1, 2);
    return s;
}

DispatchConfig config(Strategy s, bool eat) {
    DispatchConfig c;
    c.strategy = s;
    c.eat_enabled = eat;
    return c;
}

}  // namespace

TEST_SUITE("dispatch") {

TEST_CASE("bands map nodes to zones") {
    World w = banded_grid();
    CHECK(w.node_zone == std::vector<ZoneId>{0, 0, 0, 1, 1, 1, 2, 2, 2});
}

TEST_CASE("nodes outside every zone fall back to the nearest centroid") {
    RoadNetwork net = line_network(10);
    std::vector<Zone> zs{line_zone(0, 0, 2), line_zone(1, 6, 9)};
    auto map = map_nodes_to_zones(net, ZoneSet(std::move(zs)));
    CHECK(map[3] == 0);
    CHECK(map[5] == 1);
}

TEST_CASE("chain: EAT expands twice and reaches the far zone") {
    World w = banded_grid();
    AdjacencySchedule sched = chain3();
    Fleet f = place_fleet_at(w.net, {8});
    auto ctx = w.ctx();
    DispatchDecision d = dispatch_eat(w.call(0, 0, 0, 1), f, sched, ctx, 0, config(Strategy::NSS, true));
    REQUIRE(d.assigned());
    CHECK(d.assignment->vehicle == 0);
    CHECK(d.assignment->eta_s == doctest::Approx(40));
    REQUIRE(d.zones_searched.size() == 2);
    CHECK(d.zones_searched[0] == ZoneSetIds{0, 1});
    CHECK(d.zones_searched[1] == ZoneSetIds{0, 1, 2});
    CHECK_FALSE(d.adjacency_updated);
    CHECK(sched == chain3());
}

TEST_CASE("chain: the baseline stops after one ring") {
    World w = banded_grid();
    AdjacencySchedule sched = chain3();
    auto ctx = w.ctx();
    const DispatchConfig cfg = config(Strategy::NSS, false);

    SUBCASE("vehicle two bands away") {
        Fleet f = place_fleet_at(w.net, {8});
        DispatchDecision d = dispatch(w.call(0, 0, 0, 1), f, sched, ctx, 0, cfg);
        CHECK_FALSE(d.assigned());
        CHECK(d.reason == DispatchRejectReason::NoVehicle);
        REQUIRE(d.zones_searched.size() == 2);
        CHECK(d.zones_searched[0] == ZoneSetIds{0});
        CHECK(d.zones_searched[1] == ZoneSetIds{0, 1});
    }
    SUBCASE("vehicle in the adjacent band") {
        Fleet f = place_fleet_at(w.net, {4});
        DispatchDecision d = dispatch(w.call(0, 0, 0, 1), f, sched, ctx, 0, cfg);
        REQUIRE(d.assigned());
        CHECK(d.assignment->eta_s == doctest::Approx(20));
    }
    SUBCASE("isolated zone") {
        AdjacencySchedule none(3);
        Fleet f = place_fleet_at(w.net, {0});
        DispatchDecision d = dispatch(w.call(0, 0, 7, 8), f, none, ctx, 0, cfg);
        CHECK_FALSE(d.assigned());
        CHECK(d.zones_searched.size() == 1);
        CHECK(none.pairs().empty());
    }
}

TEST_CASE("isolated zone: EAT searches globally and links the zones") {
    World w = banded_grid();
    AdjacencySchedule sched(3);
    sched.add_neighbor(0, 1);
    Fleet f = place_fleet_at(w.net, {1});
    auto ctx = w.ctx();
    const auto rev = sched.revision();
    DispatchDecision d = dispatch(w.call(0, 0, 7, 8), f, sched, ctx, 0, config(Strategy::SSS, true));
    REQUIRE(d.assigned());
    CHECK(d.adjacency_updated);
    REQUIRE(d.linked_zone);
    CHECK(*d.linked_zone == 0);
    CHECK(sched.neighbors(2) == ZoneSetIds{0});
    CHECK(sched.revision() > rev);
    REQUIRE(d.zones_searched.size() == 2);
    CHECK(d.zones_searched[0] == ZoneSetIds{2});
    CHECK(d.zones_searched[1] == ZoneSetIds{0, 1, 2});
}

TEST_CASE("exhausted component falls back globally only when enabled") {
    World w = banded_grid();
    AdjacencySchedule sched(3);
    sched.add_neighbor(1, 2);
    Fleet f = place_fleet_at(w.net, {0});
    auto ctx = w.ctx();
    DispatchConfig cfg = config(Strategy::NSS, true);

    SUBCASE("enabled") {
        DispatchDecision d = dispatch(w.call(0, 0, 8, 7), f, sched, ctx, 0, cfg);
        REQUIRE(d.assigned());
        CHECK(d.adjacency_updated);
        CHECK(sched.neighbors(2) == ZoneSetIds{0, 1});
    }
    SUBCASE("disabled") {
        cfg.global_fallback_after_component = false;
        DispatchDecision d = dispatch(w.call(0, 0, 8, 7), f, sched, ctx, 0, cfg);
        CHECK_FALSE(d.assigned());
        CHECK(d.reason == DispatchRejectReason::NoVehicle);
        CHECK_FALSE(d.adjacency_updated);
        CHECK(sched.neighbors(2) == ZoneSetIds{1});
    }
}

TEST_CASE("no vehicles anywhere") {
    World w = banded_grid();
    AdjacencySchedule sched = chain3();
    Fleet f;
    auto ctx = w.ctx();
    DispatchDecision d = dispatch(w.call(0, 0, 0, 1), f, sched, ctx, 0, config(Strategy::OSS, true));
    CHECK_FALSE(d.assigned());
    CHECK(d.reason == DispatchRejectReason::NoVehicle);
    CHECK(d.zones_searched.size() == 2);
    CHECK_FALSE(d.adjacency_updated);
}

TEST_CASE("border call: expansion beats the in-zone local minimum") {
    // Zone 0 holds nodes 0..30, zone 1 nodes 31..50. The call sits at node
    // 30; V0 at node 0 is 300 s away, V1 at node 40 only 100 s.
    std::vector<Zone> zs{line_zone(0, 0, 30), line_zone(1, 31, 50)};
    World w(line_network(51), ZoneSet(std::move(zs)));
    AdjacencySchedule sched(2);
    sched.add_neighbor(0, 1);
    Fleet f = place_fleet_at(w.net, {0, 40});
    auto ctx = w.ctx();
    const CallSite call = w.call(0, 0, 30, 29);
    REQUIRE(call.zone == 0);

    DispatchDecision eat = dispatch(call, f, sched, ctx, 0, config(Strategy::NSS, true));
    REQUIRE(eat.assigned());
    CHECK(eat.assignment->vehicle == 1);
    CHECK(eat.assignment->eta_s == doctest::Approx(100));

    DispatchDecision base = dispatch(call, f, sched, ctx, 0, config(Strategy::NSS, false));
    REQUIRE(base.assigned());
    CHECK(base.assignment->vehicle == 0);
    CHECK(base.assignment->eta_s == doctest::Approx(300));
}

TEST_CASE("equal etas go to the lowest vehicle id") {
    World w = banded_grid();
    AdjacencySchedule sched = oracle::complete_schedule(3);
    auto ctx = w.ctx();
    for (bool eat : {true, false}) {
        CAPTURE(eat);
        Fleet f = place_fleet_at(w.net, {5, 3, 1, 7});
        DispatchDecision d = dispatch(w.call(0, 0, 4, 0), f, sched, ctx, 0, config(Strategy::SSS, eat));
        REQUIRE(d.assigned());
        CHECK(d.assignment->vehicle == 0);
        Fleet g = place_fleet_at(w.net, {2, 3, 5});
        d = dispatch(w.call(0, 0, 4, 0), g, sched, ctx, 0, config(Strategy::SSS, eat));
        REQUIRE(d.assigned());
        CHECK(d.assignment->vehicle == 1);
    }
}

TEST_CASE("party size filters the pool") {
    World w = banded_grid();
    AdjacencySchedule sched = chain3();
    Fleet f = place_fleet_at(w.net, {0}, 2);
    f.vehicles.push_back(place_fleet_at(w.net, {2}, 4).vehicles[0]);
    f.vehicles[1].id = 1;
    auto ctx = w.ctx();
    DispatchDecision d = dispatch(w.call(0, 0, 0, 1, 3), f, sched, ctx, 0, config(Strategy::NSS, true));
    REQUIRE(d.assigned());
    CHECK(d.assignment->vehicle == 1);
}

TEST_CASE("vehicles that cannot reach the pickup make the call unroutable") {
    // One-way street: node 1 cannot reach node 0.
    std::vector<RoadNode> nodes{{0, {40.75, -73.99}}, {1, {40.75, -73.9889}}};
    std::vector<RoadEdge> edges{{0, 1, 100, 10}};
    std::vector<Zone> zs{line_zone(0, 0, 1)};
    World w(RoadNetwork(std::move(nodes), std::move(edges)), ZoneSet(std::move(zs)));
    AdjacencySchedule sched(1);
    Fleet f = place_fleet_at(w.net, {1});
    auto ctx = w.ctx();
    DispatchDecision d = dispatch(w.call(0, 0, 0, 1), f, sched, ctx, 0, config(Strategy::NSS, true));
    CHECK_FALSE(d.assigned());
    CHECK(d.reason == DispatchRejectReason::Unroutable);
}

TEST_CASE("busy vehicles compete under SSS but not NSS") {
    World w = banded_grid();
    AdjacencySchedule sched = oracle::complete_schedule(3);
    Fleet f = place_fleet_at(w.net, {3, 8});
    // V0 carries a passenger 3 -> 0 until t = 10; V1 idles 40 s from node 0.
    CallSite job{50, 0, 1, 3, 0, 1};
    assign(f.at(0), job, *w.routes.route(0, 3, 3), *w.routes.route(0, 3, 0), 0, 1.0);
    f.at(0).status = VehicleStatus::OnTrip;
    auto ctx = w.ctx();

    DispatchDecision sss = dispatch(w.call(1, 0, 0, 1), f, sched, ctx, 0, config(Strategy::SSS, true));
    REQUIRE(sss.assigned());
    CHECK(sss.assignment->vehicle == 0);
    CHECK(sss.assignment->eta_s == doctest::Approx(10));
    CHECK(sss.assignment->basis == EtaBasis::FromTripEndpoint);

    DispatchDecision nss = dispatch(w.call(1, 0, 0, 1), f, sched, ctx, 0, config(Strategy::NSS, true));
    REQUIRE(nss.assigned());
    CHECK(nss.assignment->vehicle == 1);
    CHECK(nss.assignment->eta_s == doctest::Approx(40));
}

TEST_CASE("expansion rounds grow strictly and never exceed the zone count") {
    Rng rng(99);
    for (int trial = 0; trial < 60; ++trial) {
        RoadNetwork net = oracle::grid_network(6, 6, 150, 10);
        ZoneSet zones = oracle::block_zones(net, 3, 3);
        World w(std::move(net), std::move(zones));
        AdjacencySchedule sched = oracle::random_schedule(rng, 9, 0.2);
        Fleet f = oracle::random_fleet(rng, w.net, w.routes, 1 + trial % 4, 500.0);
        auto ctx = w.ctx();
        const auto pickup = static_cast<NodeId>(uniform01(rng) * 36);
        DispatchDecision d = dispatch(w.call(0, 500, pickup, 0), f, sched, ctx, 500, config(Strategy::SSS, true));
        REQUIRE_FALSE(d.zones_searched.empty());
        CHECK(d.zones_searched.size() <= 9);
        for (std::size_t i = 1; i < d.zones_searched.size(); ++i) {
            const auto& a = d.zones_searched[i - 1];
            const auto& b = d.zones_searched[i];
            CHECK(a.size() < b.size());
            CHECK(std::includes(b.begin(), b.end(), a.begin(), a.end()));
        }
    }
}

TEST_CASE("invalid dispatch configuration") {
    DispatchConfig c;
    c.oss_reassign_threshold_s = -1;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c.oss_reassign_threshold_s = 0;
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("OSS rescheduling on a traffic change") {
    // One zone over a 61-node line. V0 was sent at t = 0 from node 0 to a
    // pickup at node 30 (300 s at multiplier 1). Traffic halves speeds at
    // t = 100, so every new route takes 20 s per edge while V0's old plan
    // still promises arrival at t = 300.
    std::vector<Zone> zs{line_zone(0, 0, 60)};
    World w(line_network(61), ZoneSet(std::move(zs)), TrafficState({{0, 1.0}, {100, 0.5}}));
    AdjacencySchedule sched(1);
    auto ctx = w.ctx();
    DispatchConfig cfg = config(Strategy::OSS, true);

    auto setup = [&](NodeId v1_node) {
        Fleet f = place_fleet_at(w.net, {0, v1_node});
        CallSite call = w.call(7, 0, 30, 31);
        assign(f.at(0), call, *w.routes.route(0, 0, 30), *w.routes.route(0, 30, 31), 0, 1.0);
        return f;
    };

    SUBCASE("120 s faster elsewhere: reassigned") {
        Fleet f = setup(34);  // 4 edges at 20 s = 80 s, versus 200 s remaining
        auto moves = oss_reschedule(f, sched, ctx, 100, cfg);
        REQUIRE(moves.size() == 1);
        CHECK(moves[0].request == 7);
        CHECK(moves[0].from == 0);
        CHECK(moves[0].to == 1);
        CHECK(moves[0].old_eta_s == doctest::Approx(200));
        CHECK(moves[0].new_eta_s == doctest::Approx(80));
        CHECK(moves[0].version == 1);
        CHECK(f.at(0).status == VehicleStatus::Idle);
        CHECK(f.at(0).node == 10);
        CHECK_FALSE(f.at(0).current);
        CHECK(f.at(1).status == VehicleStatus::EnRouteToPickup);
        CHECK(f.at(1).current->pickup_s == doctest::Approx(180));
        CHECK(f.at(1).current->planned_multiplier == 0.5);
        CHECK(pending_assignments(f).size() == 1);

        // The new plan matches the current traffic; nothing more to do.
        CHECK(oss_reschedule(f, sched, ctx, 110, cfg).empty());
    }
    SUBCASE("30 s faster: under the threshold") {
        Fleet f = setup(38);  // 160 s versus 190 s remaining at t = 110
        CHECK(oss_reschedule(f, sched, ctx, 110, cfg).empty());
        CHECK(f.at(0).status == VehicleStatus::EnRouteToPickup);
        CHECK(f.at(1).status == VehicleStatus::Idle);
    }
    SUBCASE("no traffic change") {
        Fleet f = setup(34);
        CHECK(oss_reschedule(f, sched, ctx, 50, cfg).empty());
    }
    SUBCASE("other strategies never reschedule") {
        Fleet f = setup(34);
        CHECK(oss_reschedule(f, sched, ctx, 100, config(Strategy::SSS, true)).empty());
        CHECK(f.at(0).current->request == 7);
    }
    SUBCASE("a zero threshold still requires a strict gain") {
        cfg.oss_reassign_threshold_s = 0;
        Fleet f = setup(40);  // 10 edges = 200 s, equal to the remaining time
        CHECK(oss_reschedule(f, sched, ctx, 100, cfg).empty());
    }
}

TEST_CASE("OSS moves a queued job off a busy vehicle") {
    std::vector<Zone> zs{line_zone(0, 0, 60)};
    World w(line_network(61), ZoneSet(std::move(zs)), TrafficState({{0, 1.0}, {100, 0.5}}));
    AdjacencySchedule sched(1);
    auto ctx = w.ctx();
    // V0 carries a passenger 0 -> 20 (done at t = 200) and has the job at
    // node 30 queued behind it (pickup at t = 300). V1 idles at node 33.
    Fleet f = place_fleet_at(w.net, {0, 33});
    CallSite trip{1, 0, 1, 0, 20, 0};
    assign(f.at(0), trip, *w.routes.route(0, 0, 0), *w.routes.route(0, 0, 20), 0, 1.0);
    f.at(0).status = VehicleStatus::OnTrip;
    CallSite next{2, 0, 1, 30, 31, 0};
    assign(f.at(0), next, *w.routes.route(0, 20, 30), *w.routes.route(0, 30, 31), 0, 1.0);
    REQUIRE(f.at(0).queued);

    auto moves = oss_reschedule(f, sched, ctx, 100, config(Strategy::OSS, true));
    REQUIRE(moves.size() == 1);
    CHECK(moves[0].request == 2);
    CHECK(moves[0].to == 1);
    CHECK_FALSE(f.at(0).queued);
    CHECK(f.at(0).status == VehicleStatus::OnTrip);
    CHECK(f.at(0).busy_until_s == doctest::Approx(200));
    CHECK(f.at(1).current->request == 2);
}

TEST_CASE("pending jobs are listed first come, first served") {
    World w = banded_grid();
    Fleet f = place_fleet_at(w.net, {0, 1, 2});
    assign(f.at(0), w.call(5, 20, 3, 4), *w.routes.route(20, 0, 3), *w.routes.route(20, 3, 4), 20, 1.0);
    assign(f.at(1), w.call(4, 20, 4, 5), *w.routes.route(20, 1, 4), *w.routes.route(20, 4, 5), 20, 1.0);
    assign(f.at(2), w.call(9, 10, 5, 8), *w.routes.route(20, 2, 5), *w.routes.route(20, 5, 8), 20, 1.0);
    auto p = pending_assignments(f);
    REQUIRE(p.size() == 3);
    CHECK(p[0]->request == 9);
    CHECK(p[1]->request == 4);
    CHECK(p[2]->request == 5);
}

}  // TEST_SUITE
