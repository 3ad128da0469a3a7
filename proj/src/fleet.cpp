#include "amod/fleet.hpp"

#include "amod/error.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace amod {

std::string_view to_string(Strategy s) noexcept {
    switch (s) {
        case Strategy::NSS: return "NSS";
        case Strategy::SSS: return "SSS";
        case Strategy::OSS: return "OSS";
    }
    return "?";
}

Strategy parse_strategy(std::string_view s) {
    std::string u(s);
    std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (u == "NSS") return Strategy::NSS;
    if (u == "SSS") return Strategy::SSS;
    if (u == "OSS") return Strategy::OSS;
    throw ConfigError("unknown strategy '" + std::string(s) + "' (expected NSS, SSS or OSS)");
}

std::string_view to_string(VehicleStatus s) noexcept {
    switch (s) {
        case VehicleStatus::Idle: return "Idle";
        case VehicleStatus::EnRouteToPickup: return "EnRouteToPickup";
        case VehicleStatus::OnTrip: return "OnTrip";
    }
    return "?";
}

NodeId Vehicle::position_at(double t) const noexcept {
    if (!current) return node;
    switch (status) {
        case VehicleStatus::EnRouteToPickup:
            return current->to_pickup.node_after(t - current->depart_s);
        case VehicleStatus::OnTrip:
            return current->trip.node_after(t - current->pickup_s);
        case VehicleStatus::Idle:
            break;
    }
    return node;
}

Fleet place_fleet(const RoadNetwork& net, std::size_t size, std::uint64_t seed, int capacity) {
    if (size > 0 && net.node_count() == 0) throw ContractViolation("cannot place vehicles on an empty network");
    Rng rng(seed);
    std::vector<NodeId> nodes;
    nodes.reserve(size);
    const auto ids = net.node_ids();
    for (std::size_t i = 0; i < size; ++i) {
        auto k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(ids.size()));
        nodes.push_back(ids[std::min(k, ids.size() - 1)]);
    }
    return place_fleet_at(net, nodes, capacity);
}

Fleet place_fleet_at(const RoadNetwork& net, const std::vector<NodeId>& nodes, int capacity) {
    if (capacity < 1) throw ContractViolation("vehicle capacity must be at least 1");
    Fleet f;
    f.vehicles.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!net.has_node(nodes[i])) throw ContractViolation("vehicle start node " + std::to_string(nodes[i]) + " not in network");
        Vehicle v;
        v.id = static_cast<VehicleId>(i);
        v.node = nodes[i];
        v.capacity = capacity;
        f.vehicles.push_back(v);
    }
    return f;
}

std::vector<VehicleId> candidate_pool(const Fleet& fleet, Strategy strategy) {
    std::vector<VehicleId> out;
    for (const Vehicle& v : fleet.vehicles) {
        const bool eligible = v.status == VehicleStatus::Idle ||
                              (strategy != Strategy::NSS && v.status == VehicleStatus::OnTrip && !v.queued);
        if (eligible) out.push_back(v.id);
    }
    return out;
}

std::optional<CandidateEstimate> estimate_eta(const Vehicle& v, NodeId pickup, RouteCache& routes, double now_s) {
    switch (v.status) {
        case VehicleStatus::Idle: {
            auto t = routes.travel_time_s(now_s, v.node, pickup);
            if (!t) return std::nullopt;
            return CandidateEstimate{v.id, *t, EtaBasis::FromCurrentPosition};
        }
        case VehicleStatus::OnTrip: {
            if (v.queued || !v.current) return std::nullopt;
            auto t = routes.travel_time_s(now_s, v.current->dropoff_node, pickup);
            if (!t) return std::nullopt;
            const double remaining = std::max(0.0, v.busy_until_s - now_s);
            return CandidateEstimate{v.id, remaining + *t, EtaBasis::FromTripEndpoint};
        }
        case VehicleStatus::EnRouteToPickup:
            break;
    }
    return std::nullopt;
}

std::optional<CandidateEstimate> estimate_eta(const Vehicle& v, NodeId pickup, const RoadNetwork& net,
                                              const TrafficState& traffic, double now_s) {
    RouteCache routes(net, traffic);
    return estimate_eta(v, pickup, routes, now_s);
}

const Assignment& assign(Vehicle& v, const CallSite& call, const Route& to_pickup, const Route& trip, double now_s,
                         double multiplier, std::uint32_t version) {
    if (call.party_size > v.capacity) {
        throw ContractViolation("party of " + std::to_string(call.party_size) + " exceeds vehicle capacity");
    }
    if (to_pickup.nodes.empty() || to_pickup.nodes.back() != call.pickup_node || trip.nodes.empty() ||
        trip.nodes.front() != call.pickup_node || trip.nodes.back() != call.dropoff_node) {
        throw ContractViolation("routes do not match the call's pickup/dropoff nodes");
    }
    Assignment a;
    a.request = call.request;
    a.request_time_s = call.request_time_s;
    a.party_size = call.party_size;
    a.pickup_node = call.pickup_node;
    a.dropoff_node = call.dropoff_node;
    a.call_zone = call.zone;
    a.to_pickup = to_pickup;
    a.trip = trip;
    a.planned_multiplier = multiplier;
    a.version = version;

    switch (v.status) {
        case VehicleStatus::Idle:
            if (to_pickup.nodes.front() != v.node) throw ContractViolation("pickup route does not start at the vehicle");
            a.depart_s = now_s;
            a.pickup_s = now_s + to_pickup.total_time_s;
            a.dropoff_s = a.pickup_s + trip.total_time_s;
            v.status = VehicleStatus::EnRouteToPickup;
            v.current = std::move(a);
            v.busy_until_s = v.current->dropoff_s;
            return *v.current;
        case VehicleStatus::OnTrip:
            if (v.queued) throw ContractViolation("vehicle " + std::to_string(v.id) + " already has a queued job");
            if (!v.current || to_pickup.nodes.front() != v.current->dropoff_node) {
                throw ContractViolation("queued pickup route must start at the current trip's dropoff");
            }
            a.depart_s = v.current->dropoff_s;
            a.pickup_s = a.depart_s + to_pickup.total_time_s;
            a.dropoff_s = a.pickup_s + trip.total_time_s;
            v.queued = std::move(a);
            v.busy_until_s = v.queued->dropoff_s;
            return *v.queued;
        case VehicleStatus::EnRouteToPickup:
            break;
    }
    throw ContractViolation("vehicle " + std::to_string(v.id) + " is en route to a pickup and cannot be assigned");
}

}  // namespace amod
