// Dispatch decisions: Expand and Target, the one-ring baseline search used by
// the control groups, and online re-scheduling for OSS.
#pragma once

#include "amod/fleet.hpp"
#include "amod/road_network.hpp"
#include "amod/zones.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace amod {

enum class DispatchRejectReason : std::uint8_t {
    None,
    NoVehicle,   // no eligible vehicle in the searched zones
    Unroutable,  // eligible vehicles exist but none can reach the pickup, or the trip itself is unroutable
    OffNetwork,  // pickup or dropoff has no road node within the snap radius
};

std::string_view to_string(DispatchRejectReason r) noexcept;

struct DispatchConfig {
    Strategy strategy = Strategy::NSS;
    bool eat_enabled = true;
    /// After the adjacency component of the call's zone is exhausted, search
    /// every zone and link the call's zone to the winner's zone.
    bool global_fallback_after_component = true;
    double oss_reassign_threshold_s = 60.0;

    void validate() const;
};

struct DispatchDecision {
    std::optional<CandidateEstimate> assignment;
    DispatchRejectReason reason = DispatchRejectReason::None;
    /// Cumulative zone set searched in each round, in order.
    std::vector<ZoneSetIds> zones_searched;
    bool adjacency_updated = false;
    /// Zone linked to the call's zone when adjacency_updated.
    std::optional<ZoneId> linked_zone;

    bool assigned() const noexcept { return assignment.has_value(); }
};

/// Read-only inputs shared by every decision within one snapshot.
struct DispatchContext {
    RouteCache& routes;
    const ZoneSet& zones;
    /// Zone of every road node, indexed by node id.
    std::span<const ZoneId> node_zone;
};

/// Zone of each road node: the containing zone (lowest id on overlap), or
/// the zone with the nearest centroid when the node lies outside all zones.
std::vector<ZoneId> map_nodes_to_zones(const RoadNetwork& net, const ZoneSet& zones);

/// Zone a vehicle counts as located in at time `now_s`.
ZoneId vehicle_zone(const Vehicle& v, const DispatchContext& ctx, double now_s);

/// Expand and Target. Grows the searched zone set ring by ring over the
/// adjacency schedule and picks the minimum-ETA eligible vehicle (lowest id
/// on ties). An isolated call zone, or an exhausted component when
/// `global_fallback_after_component` is set, falls back to a search of every
/// zone and links the call's zone to the winner's zone in `sched`.
DispatchDecision dispatch_eat(const CallSite& call, const Fleet& fleet, AdjacencySchedule& sched,
                              const DispatchContext& ctx, double now_s, const DispatchConfig& cfg);

/// Control-group search: the call's zone, then its immediate neighbours
/// once. Never modifies the schedule.
DispatchDecision dispatch_baseline(const CallSite& call, const Fleet& fleet, const AdjacencySchedule& sched,
                                   const DispatchContext& ctx, double now_s, const DispatchConfig& cfg);

/// dispatch_eat or dispatch_baseline according to `cfg.eat_enabled`.
DispatchDecision dispatch(const CallSite& call, const Fleet& fleet, AdjacencySchedule& sched,
                          const DispatchContext& ctx, double now_s, const DispatchConfig& cfg);

struct Reassignment {
    RequestId request = 0;
    VehicleId from = 0;
    VehicleId to = 0;
    double old_eta_s = 0.0;  // remaining time to pickup on the old plan
    double new_eta_s = 0.0;
    std::uint32_t version = 0;  // version of the new assignment
};

/// Jobs not yet picked up (current jobs of en-route vehicles and queued
/// jobs), ordered by (request time, request id).
std::vector<const Assignment*> pending_assignments(const Fleet& fleet);

/// Revisits every pending job whose plan was routed under a different
/// traffic multiplier than the one in force at `now_s`, in FCFS order. A job
/// moves to a new vehicle when that vehicle's ETA beats the remaining time on
/// the current plan by more than `cfg.oss_reassign_threshold_s`. Displaced
/// en-route vehicles become idle at their current node; displaced queued
/// jobs are dropped. The schedule is searched but never modified.
std::vector<Reassignment> oss_reschedule(Fleet& fleet, const AdjacencySchedule& sched, const DispatchContext& ctx,
                                         double now_s, const DispatchConfig& cfg);

}  // namespace amod
