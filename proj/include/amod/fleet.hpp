// Vehicle state machine, strategy-specific candidate pools and pickup ETA
// estimation (including vehicles that are still finishing a trip).
#pragma once

#include "amod/demand.hpp"
#include "amod/road_network.hpp"
#include "amod/zones.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace amod {

using VehicleId = std::uint32_t;

/// NSS dispatches idle vehicles only. SSS and OSS also consider busy
/// vehicles; OSS additionally revisits pending assignments when traffic
/// changes.
enum class Strategy : std::uint8_t { NSS, SSS, OSS };

std::string_view to_string(Strategy s) noexcept;
/// Case-insensitive; throws ConfigError on an unknown name.
Strategy parse_strategy(std::string_view s);

enum class VehicleStatus : std::uint8_t { Idle, EnRouteToPickup, OnTrip };

std::string_view to_string(VehicleStatus s) noexcept;

/// One committed pickup-and-delivery job. Times are absolute simulation
/// seconds, fixed when the job is planned.
struct Assignment {
    RequestId request = 0;
    double request_time_s = 0.0;
    int party_size = 1;
    NodeId pickup_node = 0;
    NodeId dropoff_node = 0;
    ZoneId call_zone = 0;
    Route to_pickup;
    Route trip;
    double depart_s = 0.0;  // leaves for the pickup
    double pickup_s = 0.0;  // scheduled arrival at the pickup
    double dropoff_s = 0.0;
    double planned_multiplier = 1.0;  // traffic multiplier the plan was routed under
    std::uint32_t version = 0;        // bumped on every (re)assignment of the request
};

struct Vehicle {
    VehicleId id = 0;
    VehicleStatus status = VehicleStatus::Idle;
    NodeId node = 0;  // node where the current leg started (or where it rests)
    int capacity = kDefaultCapacity;
    std::optional<Assignment> current;
    std::optional<Assignment> queued;  // at most one job behind the current trip
    double busy_until_s = 0.0;         // end of all committed work

    /// Last road node passed at time `t` (node-granular position).
    NodeId position_at(double t) const noexcept;
};

struct Fleet {
    std::vector<Vehicle> vehicles;  // vehicles[i].id == i

    Vehicle& at(VehicleId id) { return vehicles.at(id); }
    const Vehicle& at(VehicleId id) const { return vehicles.at(id); }
    std::size_t size() const noexcept { return vehicles.size(); }
};

/// Idle vehicles at nodes drawn uniformly (with replacement) from the
/// network's node ids.
Fleet place_fleet(const RoadNetwork& net, std::size_t size, std::uint64_t seed, int capacity = kDefaultCapacity);
/// Idle vehicles at the given nodes, in order.
Fleet place_fleet_at(const RoadNetwork& net, const std::vector<NodeId>& nodes, int capacity = kDefaultCapacity);

/// Vehicles eligible for a new assignment, ascending by id. NSS: idle only.
/// SSS/OSS: idle, plus on-trip vehicles with no queued job.
std::vector<VehicleId> candidate_pool(const Fleet& fleet, Strategy strategy);

enum class EtaBasis : std::uint8_t { FromCurrentPosition, FromTripEndpoint };

struct CandidateEstimate {
    VehicleId vehicle = 0;
    double eta_s = 0.0;
    EtaBasis basis = EtaBasis::FromCurrentPosition;
};

/// Idle: travel time from the vehicle's node. On trip: remaining trip time
/// plus travel time from the trip's dropoff node. nullopt when unreachable or
/// when the vehicle cannot take a new job.
std::optional<CandidateEstimate> estimate_eta(const Vehicle& v, NodeId pickup, RouteCache& routes, double now_s);
std::optional<CandidateEstimate> estimate_eta(const Vehicle& v, NodeId pickup, const RoadNetwork& net,
                                              const TrafficState& traffic, double now_s);

/// A request resolved onto the road graph.
struct CallSite {
    RequestId request = 0;
    double request_time_s = 0.0;
    int party_size = 1;
    NodeId pickup_node = 0;
    NodeId dropoff_node = 0;
    ZoneId zone = 0;
};

/// Commits `call` to `v`. Idle vehicles become EnRouteToPickup; on-trip
/// vehicles keep their trip and hold the job as queued. Throws
/// ContractViolation for a vehicle that is en route to a pickup, already has
/// a queued job, or lacks seats.
const Assignment& assign(Vehicle& v, const CallSite& call, const Route& to_pickup, const Route& trip,
                         double now_s, double multiplier, std::uint32_t version = 0);

}  // namespace amod
