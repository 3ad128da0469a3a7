#include "amod/road_network.hpp"

#include "amod/error.hpp"
#include "amod/text.hpp"

#include <algorithm>
#include <bit>
#include <cassert>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>
#include <sstream>

namespace amod {
namespace {

// Edges may be up to 1% shorter than the great-circle chord between their
// endpoints (coordinate noise); the heuristic is scaled to stay admissible.
constexpr double kLengthSlack = 0.99;
// Absorbs floating-point error in the heuristic.
constexpr double kHeuristicMargin = 1.0 - 1e-9;

std::size_t count_scc(std::span<const NodeId> ids, std::size_t bound,
                      const std::function<std::span<const RoadEdge>(NodeId)>& out,
                      const std::vector<std::vector<NodeId>>& in) {
    // Kosaraju, iterative.
    std::vector<char> seen(bound, 0);
    std::vector<NodeId> order;
    order.reserve(ids.size());
    for (NodeId s : ids) {
        if (seen[s]) continue;
        std::vector<std::pair<NodeId, std::size_t>> stack{{s, 0}};
        seen[s] = 1;
        while (!stack.empty()) {
            auto& [u, k] = stack.back();
            auto es = out(u);
            if (k < es.size()) {
                NodeId v = es[k++].to;
                if (!seen[v]) {
                    seen[v] = 1;
                    stack.emplace_back(v, 0);
                }
            } else {
                order.push_back(u);
                stack.pop_back();
            }
        }
    }
    std::vector<char> assigned(bound, 0);
    std::size_t count = 0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if (assigned[*it]) continue;
        ++count;
        std::vector<NodeId> stack{*it};
        assigned[*it] = 1;
        while (!stack.empty()) {
            NodeId u = stack.back();
            stack.pop_back();
            for (NodeId v : in[u]) {
                if (!assigned[v]) {
                    assigned[v] = 1;
                    stack.push_back(v);
                }
            }
        }
    }
    return count;
}

}  // namespace

// ---------------------------------------------------------------------------
// TrafficState

TrafficState::TrafficState(std::vector<TrafficBreakpoint> schedule) : schedule_(std::move(schedule)) {
    for (std::size_t i = 0; i < schedule_.size(); ++i) {
        const auto& b = schedule_[i];
        if (!(b.multiplier > 0.0 && b.multiplier <= 2.0)) {
            throw std::invalid_argument("traffic multiplier must lie in (0, 2]");
        }
        if (!std::isfinite(b.start_s)) throw std::invalid_argument("traffic breakpoint time not finite");
        if (i > 0 && !(schedule_[i - 1].start_s < b.start_s)) {
            throw std::invalid_argument("traffic schedule must be strictly increasing in time");
        }
        max_multiplier_ = std::max(max_multiplier_, b.multiplier);
    }
}

double TrafficState::multiplier_at(double t) const noexcept {
    auto it = std::upper_bound(schedule_.begin(), schedule_.end(), t,
                               [](double v, const TrafficBreakpoint& b) { return v < b.start_s; });
    if (it == schedule_.begin()) return 1.0;
    return std::prev(it)->multiplier;
}

// ---------------------------------------------------------------------------
// Route

NodeId Route::node_after(double elapsed_s) const noexcept {
    auto it = std::upper_bound(arrival_s.begin(), arrival_s.end(), elapsed_s);
    const auto k = static_cast<std::size_t>(std::distance(arrival_s.begin(), it));
    return nodes[k == 0 ? 0 : k - 1];
}

// ---------------------------------------------------------------------------
// RoadNetwork

RoadNetwork::RoadNetwork(std::vector<RoadNode> nodes, std::vector<RoadEdge> edges,
                         double speed_limit_mps)
    : speed_limit_mps_(speed_limit_mps) {
    if (!(speed_limit_mps > 0.0) || !std::isfinite(speed_limit_mps)) {
        throw LoadError("speed limit must be positive");
    }
    NodeId max_id = 0;
    for (const auto& n : nodes) max_id = std::max(max_id, n.id);
    const std::size_t bound = nodes.empty() ? 0 : static_cast<std::size_t>(max_id) + 1;
    if (bound > 4 * nodes.size() + 1024) {
        throw LoadError("node ids too sparse for array indexing (max id " + std::to_string(max_id) + ")");
    }
    locations_.assign(bound, GeoPoint{});
    present_.assign(bound, false);
    for (const auto& n : nodes) {
        if (present_[n.id]) throw LoadError("duplicate node id " + std::to_string(n.id));
        if (!n.location.in_range()) throw LoadError("node " + std::to_string(n.id) + " has invalid coordinates");
        present_[n.id] = true;
        locations_[n.id] = n.location;
        node_ids_.push_back(n.id);
    }
    std::sort(node_ids_.begin(), node_ids_.end());

    std::size_t clamped = 0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        auto& e = edges[i];
        const std::string where = "edge " + std::to_string(i) + " (" + std::to_string(e.from) + "->" +
                                  std::to_string(e.to) + ")";
        if (!has_node(e.from) || !has_node(e.to)) throw LoadError(where + " references an unknown node");
        if (!(e.length_m > 0.0) || !std::isfinite(e.length_m)) throw LoadError(where + ": length must be positive");
        if (!(e.base_speed_mps > 0.0) || !std::isfinite(e.base_speed_mps)) {
            throw LoadError(where + ": speed must be positive");
        }
        const double chord = haversine_m(locations_[e.from], locations_[e.to]);
        if (e.length_m < kLengthSlack * chord) {
            throw LoadError(where + ": length " + text::format_double(e.length_m) +
                            " m is shorter than the straight-line distance " + text::format_double(chord) + " m");
        }
        if (e.base_speed_mps > speed_limit_mps_) {
            e.base_speed_mps = speed_limit_mps_;
            ++clamped;
        }
    }
    if (clamped > 0) warnings_.push_back(std::to_string(clamped) + " edge speed(s) clamped to the speed limit");

    std::stable_sort(edges.begin(), edges.end(),
                     [](const RoadEdge& a, const RoadEdge& b) { return a.from < b.from; });
    edges_ = std::move(edges);
    offsets_.assign(bound + 1, 0);
    for (const auto& e : edges_) ++offsets_[e.from + 1];
    for (std::size_t i = 0; i < bound; ++i) offsets_[i + 1] += offsets_[i];

    std::vector<GeoPoint> pts;
    pts.reserve(node_ids_.size());
    for (NodeId id : node_ids_) pts.push_back(locations_[id]);
    index_ = NodeIndex(pts, node_ids_);

    std::vector<std::vector<NodeId>> in(bound);
    for (const auto& e : edges_) in[e.to].push_back(e.from);
    scc_count_ = count_scc(node_ids_, bound, [this](NodeId u) { return out_edges(u); }, in);
    if (scc_count_ > 1) {
        warnings_.push_back("graph has " + std::to_string(scc_count_) +
                            " strongly connected components; some routes will be unreachable");
    }
}

std::span<const RoadEdge> RoadNetwork::out_edges(NodeId id) const noexcept {
    if (id >= present_.size()) return {};
    return std::span<const RoadEdge>(edges_).subspan(offsets_[id], offsets_[id + 1] - offsets_[id]);
}

RoadNetwork load_network(const std::filesystem::path& nodes_file, const std::filesystem::path& edges_file,
                         double speed_limit_mps) {
    auto open = [](const std::filesystem::path& p) {
        std::ifstream in(p);
        if (!in) throw LoadError("cannot open " + p.string());
        return in;
    };
    auto fail = [](const std::filesystem::path& p, std::size_t line, const std::string& msg) {
        throw LoadError(p.string() + ":" + std::to_string(line) + ": " + msg);
    };

    std::vector<RoadNode> nodes;
    {
        auto in = open(nodes_file);
        std::string line;
        std::size_t ln = 0;
        while (std::getline(in, line)) {
            ++ln;
            auto body = text::trim(std::string_view(line).substr(0, line.find('#')));
            if (body.empty()) continue;
            auto f = text::split_ws(body);
            long long id = 0;
            RoadNode n;
            if (f.size() != 3 || !text::parse_int(f[0], id) || id < 0 || id > 0xFFFFFFFELL ||
                !text::parse_double(f[1], n.location.lat) || !text::parse_double(f[2], n.location.lon)) {
                fail(nodes_file, ln, "expected `id lat lon`");
            }
            if (!n.location.in_range()) fail(nodes_file, ln, "coordinates out of range");
            n.id = static_cast<NodeId>(id);
            nodes.push_back(n);
        }
    }
    std::vector<RoadEdge> edges;
    std::vector<std::size_t> edge_lines;
    {
        auto in = open(edges_file);
        std::string line;
        std::size_t ln = 0;
        while (std::getline(in, line)) {
            ++ln;
            auto body = text::trim(std::string_view(line).substr(0, line.find('#')));
            if (body.empty()) continue;
            auto f = text::split_ws(body);
            long long from = 0, to = 0;
            RoadEdge e;
            if (f.size() != 4 || !text::parse_int(f[0], from) || !text::parse_int(f[1], to) || from < 0 ||
                to < 0 || from > 0xFFFFFFFELL || to > 0xFFFFFFFELL || !text::parse_double(f[2], e.length_m) ||
                !text::parse_double(f[3], e.base_speed_mps)) {
                fail(edges_file, ln, "expected `from_id to_id length_m speed_mps`");
            }
            e.from = static_cast<NodeId>(from);
            e.to = static_cast<NodeId>(to);
            edges.push_back(e);
            edge_lines.push_back(ln);
        }
    }
    // Check endpoints here so the error can name the line.
    {
        std::vector<char> known;
        for (const auto& n : nodes) {
            if (n.id >= known.size()) known.resize(static_cast<std::size_t>(n.id) + 1, 0);
            known[n.id] = 1;
        }
        for (std::size_t i = 0; i < edges.size(); ++i) {
            for (NodeId v : {edges[i].from, edges[i].to}) {
                if (v >= known.size() || !known[v]) {
                    fail(edges_file, edge_lines[i], "unknown node " + std::to_string(v));
                }
            }
        }
    }
    try {
        return RoadNetwork(std::move(nodes), std::move(edges), speed_limit_mps);
    } catch (const LoadError& e) {
        throw LoadError(nodes_file.string() + " / " + edges_file.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Routing

std::optional<Route> route_astar(const RoadNetwork& net, const TrafficState& traffic, double at, NodeId src,
                                 NodeId dst) {
    if (!net.has_node(src) || !net.has_node(dst)) return std::nullopt;
    if (src == dst) return Route{{src}, {0.0}, 0.0, 0.0};

    const double m = traffic.multiplier_at(at);
    const double vmax = net.speed_limit_mps() * traffic.max_multiplier();
    const GeoPoint goal = net.location(dst);
    auto heuristic = [&](NodeId n) {
        return kHeuristicMargin * kLengthSlack * haversine_m(net.location(n), goal) / vmax;
    };

    const std::size_t bound = net.id_bound();
    constexpr double kInf = std::numeric_limits<double>::infinity();
    constexpr NodeId kNone = std::numeric_limits<NodeId>::max();
    std::vector<double> g(bound, kInf);
    std::vector<NodeId> parent(bound, kNone);
    std::vector<double> h_cache(bound, -1.0);
    auto h = [&](NodeId n) {
        if (h_cache[n] < 0) h_cache[n] = heuristic(n);
        return h_cache[n];
    };

    // (f, node) ordered ascending; ties resolve to the lower node id.
    using Item = std::pair<double, NodeId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    g[src] = 0.0;
    open.emplace(h(src), src);
    bool reached = false;
    while (!open.empty()) {
        auto [f, u] = open.top();
        open.pop();
        if (f > g[u] + h(u)) continue;  // stale entry
        if (u == dst) {
            reached = true;
            break;
        }
        for (const RoadEdge& e : net.out_edges(u)) {
            const double cand = g[u] + edge_time_s(e, m);
            if (cand < g[e.to]) {
                g[e.to] = cand;
                parent[e.to] = u;
                open.emplace(cand + h(e.to), e.to);
            }
        }
    }
    if (!reached) return std::nullopt;

    Route r;
    for (NodeId v = dst; v != kNone; v = parent[v]) r.nodes.push_back(v);
    std::reverse(r.nodes.begin(), r.nodes.end());
    r.arrival_s.reserve(r.nodes.size());
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        r.arrival_s.push_back(g[r.nodes[i]]);
        if (i + 1 == r.nodes.size()) break;
        // Length of the parallel edge that realised the step.
        double best_len = kInf;
        for (const RoadEdge& e : net.out_edges(r.nodes[i])) {
            if (e.to == r.nodes[i + 1] && g[r.nodes[i]] + edge_time_s(e, m) == g[r.nodes[i + 1]]) {
                best_len = std::min(best_len, e.length_m);
            }
        }
        if (best_len == kInf) {
            for (const RoadEdge& e : net.out_edges(r.nodes[i])) {
                if (e.to == r.nodes[i + 1]) best_len = std::min(best_len, e.length_m);
            }
        }
        r.total_length_m += best_len;
    }
    r.total_time_s = r.arrival_s.back();
#ifndef NDEBUG
    for (std::size_t i = 0; i < r.nodes.size(); ++i) {
        assert(heuristic(r.nodes[i]) <= r.total_time_s - r.arrival_s[i] + 1e-9);
    }
#endif
    return r;
}

std::optional<double> travel_time_s(const RoadNetwork& net, const TrafficState& traffic, double at, NodeId src,
                                    NodeId dst) {
    auto r = route_astar(net, traffic, at, src, dst);
    if (!r) return std::nullopt;
    return r->total_time_s;
}

std::size_t RouteCache::KeyHash::operator()(const Key& k) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(k.src) << 32) | k.dst;
    h ^= std::bit_cast<std::uint64_t>(k.multiplier) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
}

const std::optional<Route>& RouteCache::route(double at, NodeId src, NodeId dst) {
    const Key key{src, dst, traffic_->multiplier_at(at)};
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, route_astar(*net_, *traffic_, at, src, dst)).first;
    return it->second;
}

std::optional<double> RouteCache::travel_time_s(double at, NodeId src, NodeId dst) {
    const auto& r = route(at, src, dst);
    if (!r) return std::nullopt;
    return r->total_time_s;
}

}  // namespace amod
