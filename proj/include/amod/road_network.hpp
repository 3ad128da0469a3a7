// Directed road graph with a global piecewise-constant traffic multiplier and
// time-optimal A* routing.
#pragma once

#include "amod/geo.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace amod {

using NodeId = std::uint32_t;

/// 25 mph.
inline constexpr double kDefaultSpeedLimitMps = 11.176;

struct RoadNode {
    NodeId id = 0;
    GeoPoint location;
};

struct RoadEdge {
    NodeId from = 0;
    NodeId to = 0;
    double length_m = 0.0;
    double base_speed_mps = 0.0;
};

struct TrafficBreakpoint {
    double start_s = 0.0;
    double multiplier = 1.0;

    friend bool operator==(const TrafficBreakpoint&, const TrafficBreakpoint&) = default;
};

/// Global speed multiplier as a step function of simulation time. Before the
/// first breakpoint (or with no breakpoints) the multiplier is 1.
class TrafficState {
public:
    TrafficState() = default;

    /// Breakpoints must be strictly increasing in time with multipliers in (0, 2].
    explicit TrafficState(std::vector<TrafficBreakpoint> schedule);

    double multiplier_at(double t) const noexcept;
    double max_multiplier() const noexcept { return max_multiplier_; }
    std::span<const TrafficBreakpoint> schedule() const noexcept { return schedule_; }

private:
    std::vector<TrafficBreakpoint> schedule_;
    double max_multiplier_ = 1.0;
};

struct Route {
    std::vector<NodeId> nodes;          // src..dst; a single node for src == dst
    std::vector<double> arrival_s;      // cumulative time at each node, arrival_s[0] == 0
    double total_time_s = 0.0;
    double total_length_m = 0.0;

    std::size_t edge_count() const noexcept { return nodes.empty() ? 0 : nodes.size() - 1; }

    /// Last node reached `elapsed_s` seconds after departure.
    NodeId node_after(double elapsed_s) const noexcept;
};

class RoadNetwork {
public:
    RoadNetwork() = default;

    /// Validates referential integrity and geometry, clamps edge speeds to
    /// `speed_limit_mps` and builds the adjacency arrays. Throws LoadError.
    RoadNetwork(std::vector<RoadNode> nodes, std::vector<RoadEdge> edges,
                double speed_limit_mps = kDefaultSpeedLimitMps);

    std::size_t node_count() const noexcept { return node_ids_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    /// One past the largest node id; valid ids are a subset of [0, id_bound()).
    std::size_t id_bound() const noexcept { return present_.size(); }

    bool has_node(NodeId id) const noexcept { return id < present_.size() && present_[id]; }
    const GeoPoint& location(NodeId id) const { return locations_.at(id); }
    std::span<const NodeId> node_ids() const noexcept { return node_ids_; }
    std::span<const RoadEdge> edges() const noexcept { return edges_; }
    std::span<const RoadEdge> out_edges(NodeId id) const noexcept;

    double speed_limit_mps() const noexcept { return speed_limit_mps_; }
    const NodeIndex& index() const noexcept { return index_; }

    std::size_t strongly_connected_components() const noexcept { return scc_count_; }
    /// Non-fatal findings from construction (clamped speeds, SCC report).
    std::span<const std::string> warnings() const noexcept { return warnings_; }

private:
    std::vector<GeoPoint> locations_;   // indexed by id
    std::vector<bool> present_;         // indexed by id
    std::vector<NodeId> node_ids_;      // sorted ascending
    std::vector<RoadEdge> edges_;       // grouped by `from`, stable within a group
    std::vector<std::size_t> offsets_;  // CSR offsets into edges_, indexed by id
    double speed_limit_mps_ = kDefaultSpeedLimitMps;
    NodeIndex index_;
    std::size_t scc_count_ = 0;
    std::vector<std::string> warnings_;
};

/// Parses the whitespace-separated nodes file (`id lat lon`) and edges file
/// (`from to length_m speed_mps`). Blank lines and `#` comments are skipped.
RoadNetwork load_network(const std::filesystem::path& nodes_file,
                         const std::filesystem::path& edges_file,
                         double speed_limit_mps = kDefaultSpeedLimitMps);

/// Traversal time of one edge with speeds frozen at multiplier `m`.
inline double edge_time_s(const RoadEdge& e, double m) noexcept {
    return e.length_m / (e.base_speed_mps * m);
}

/// Time-optimal route with speeds evaluated at instant `at` and held for the
/// whole trip. Returns nullopt when `dst` is unreachable.
std::optional<Route> route_astar(const RoadNetwork& net, const TrafficState& traffic, double at,
                                 NodeId src, NodeId dst);

std::optional<double> travel_time_s(const RoadNetwork& net, const TrafficState& traffic, double at,
                                    NodeId src, NodeId dst);

/// Memoizes route_astar for a fixed network and traffic snapshot. Keys
/// include the multiplier in force, so results stay exact across breakpoints.
class RouteCache {
public:
    RouteCache(const RoadNetwork& net, const TrafficState& traffic) : net_(&net), traffic_(&traffic) {}

    const std::optional<Route>& route(double at, NodeId src, NodeId dst);
    std::optional<double> travel_time_s(double at, NodeId src, NodeId dst);

    const RoadNetwork& network() const noexcept { return *net_; }
    const TrafficState& traffic() const noexcept { return *traffic_; }
    std::size_t size() const noexcept { return cache_.size(); }

private:
    struct Key {
        NodeId src;
        NodeId dst;
        double multiplier;
        friend bool operator==(const Key&, const Key&) = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };

    const RoadNetwork* net_;
    const TrafficState* traffic_;
    std::unordered_map<Key, std::optional<Route>, KeyHash> cache_;
};

}  // namespace amod
