// Deterministic discrete-event loop: requests arrive in FCFS order, are
// dispatched, and vehicles move through pickup and delivery. Produces one
// CallRecord per request and a replayable event log.
#pragma once

#include "amod/demand.hpp"
#include "amod/dispatch.hpp"
#include "amod/fleet.hpp"
#include "amod/road_network.hpp"
#include "amod/zones.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace amod {

enum class EventKind : std::uint8_t {
    TrafficChange,
    Reschedule,
    RequestArrival,
    ArrivedAtPickup,
    TripCompleted,
    PassengerAbandoned,
};

std::string_view to_string(EventKind k) noexcept;

struct SimEvent {
    double time_s = 0.0;
    std::uint64_t seq = 0;
    EventKind kind = EventKind::RequestArrival;
    RequestId request = 0;
    VehicleId vehicle = 0;
    std::uint32_t version = 0;
    double multiplier = 1.0;  // TrafficChange only
};

/// `time_s seq kind key=value...`
std::string serialize(const SimEvent& e);

enum class CallOutcome : std::uint8_t { PickedUp, RejectedAtDispatch, Abandoned };

std::string_view to_string(CallOutcome o) noexcept;

struct CallRecord {
    RequestId request = 0;
    double request_time_s = 0.0;
    double patience_s = 0.0;
    CallOutcome outcome = CallOutcome::RejectedAtDispatch;
    double pickup_time_s = 0.0;   // PickedUp
    double dropoff_time_s = 0.0;  // PickedUp
    VehicleId vehicle = 0;        // PickedUp
    DispatchRejectReason reason = DispatchRejectReason::None;  // RejectedAtDispatch
    double abandon_time_s = 0.0;  // Abandoned

    double wait_s() const noexcept { return pickup_time_s - request_time_s; }

    friend bool operator==(const CallRecord&, const CallRecord&) = default;
};

inline constexpr std::string_view kCallRecordHeader =
    "request_id,request_time_s,patience_s,outcome,pickup_time_s,dropoff_time_s,vehicle_id,reason,abandon_time_s";

/// CSV with kCallRecordHeader; fields that do not apply to the outcome are empty.
void write_call_records(std::ostream& out, std::span<const CallRecord> records);
/// Inverse of write_call_records. Throws LoadError.
std::vector<CallRecord> read_call_records(std::istream& in);

/// Only these status changes can occur. Abandonment and OSS displacement
/// both take an en-route vehicle back to Idle.
bool transition_allowed(VehicleStatus from, VehicleStatus to) noexcept;

struct EngineConfig {
    DispatchConfig dispatch;
    /// Trip endpoints farther than this from every road node are rejected.
    double snap_radius_m = 500.0;
    TrafficState traffic;
};

struct RunStats {
    std::size_t requests = 0;
    std::size_t events_processed = 0;
    std::size_t picked_up = 0;
    std::size_t rejected = 0;
    std::size_t abandoned = 0;
    std::size_t reassignments = 0;
    std::size_t adjacency_links_added = 0;
    std::size_t zone_fallbacks = 0;  // calls located in no zone
    double last_event_time_s = 0.0;
};

struct RunResult {
    std::vector<CallRecord> records;  // demand order
    AdjacencySchedule final_schedule;
    std::vector<std::string> event_log;  // header line first
    RunStats stats;
};

/// Runs the simulation to quiescence. `demand` must be sorted by
/// (request_time_s, id). Throws EngineError on a mid-run invariant failure.
RunResult run(const EngineConfig& config, const RoadNetwork& net, const ZoneSet& zones,
              AdjacencySchedule schedule, Fleet fleet, std::span<const TripRequest> demand);

/// Traffic breakpoints from a base schedule plus an optional seeded random
/// walk: every `step_s` the walk multiplier moves by N(0, sigma) and is
/// clamped to [0.5, 1.5]; the effective multiplier is base × walk, clamped
/// to (0, 2].
struct RandomWalkSpec {
    bool enabled = false;
    std::uint64_t seed = 0;
    double step_s = 900.0;
    double sigma = 0.1;
};
TrafficState build_traffic(const std::vector<TrafficBreakpoint>& base, const RandomWalkSpec& walk, double horizon_s);

struct ReplayReport {
    bool identical = true;
    std::size_t first_difference = 0;  // line index when !identical
    std::string expected;
    std::string actual;
};

/// Line-by-line comparison. Throws ContractViolation when the headers name
/// different dispatch strategies.
ReplayReport compare_event_logs(std::span<const std::string> expected, std::span<const std::string> actual);

}  // namespace amod
