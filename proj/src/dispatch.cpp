#include "amod/dispatch.hpp"

#include "amod/error.hpp"

#include <algorithm>
#include <cmath>

namespace amod {
namespace {

bool better(const CandidateEstimate& a, const CandidateEstimate& b) noexcept {
    return a.eta_s < b.eta_s || (a.eta_s == b.eta_s && a.vehicle < b.vehicle);
}

/// Eligible vehicles bucketed by the zone they are located in.
class CandidateSearch {
public:
    CandidateSearch(const CallSite& call, const Fleet& fleet, const DispatchContext& ctx, double now_s,
                    Strategy strategy)
        : call_(call), fleet_(fleet), ctx_(ctx), now_s_(now_s), by_zone_(ctx.zones.size()) {
        for (VehicleId id : candidate_pool(fleet, strategy)) {
            const Vehicle& v = fleet.at(id);
            if (v.capacity < call.party_size) continue;
            by_zone_.at(vehicle_zone(v, ctx, now_s)).push_back(id);
        }
    }

    /// Best candidate located in any of `zones`.
    std::optional<CandidateEstimate> best_in(const ZoneSetIds& zones) {
        std::optional<CandidateEstimate> best;
        for (ZoneId z : zones) {
            for (VehicleId id : by_zone_.at(z)) {
                auto est = estimate_eta(fleet_.at(id), call_.pickup_node, ctx_.routes, now_s_);
                if (!est) {
                    saw_unreachable_ = true;
                    continue;
                }
                if (!best || better(*est, *best)) best = est;
            }
        }
        return best;
    }

    DispatchRejectReason miss_reason() const noexcept {
        return saw_unreachable_ ? DispatchRejectReason::Unroutable : DispatchRejectReason::NoVehicle;
    }

private:
    const CallSite& call_;
    const Fleet& fleet_;
    const DispatchContext& ctx_;
    double now_s_;
    std::vector<std::vector<VehicleId>> by_zone_;
    bool saw_unreachable_ = false;
};

ZoneSetIds all_zones(std::size_t n) {
    ZoneSetIds out;
    for (ZoneId z = 0; z < n; ++z) out.insert(z);
    return out;
}

ZoneSetIds difference(const ZoneSetIds& a, const ZoneSetIds& b) {
    ZoneSetIds out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

/// Expand and Target without touching the schedule; the zone to link, if
/// any, is reported through `linked_zone`.
DispatchDecision eat_search(const CallSite& call, const Fleet& fleet, const AdjacencySchedule& sched,
                            const DispatchContext& ctx, double now_s, const DispatchConfig& cfg) {
    DispatchDecision d;
    CandidateSearch search(call, fleet, ctx, now_s, cfg.strategy);
    const ZoneId home = call.zone;
    const std::size_t zone_count = ctx.zones.size();

    auto accept = [&](const CandidateEstimate& c) { d.assignment = c; };
    auto global_fallback = [&](const ZoneSetIds& searched) {
        ZoneSetIds everything = all_zones(zone_count);
        if (everything.size() == searched.size()) return false;
        d.zones_searched.push_back(everything);
        if (auto best = search.best_in(difference(everything, searched))) {
            accept(*best);
            const ZoneId vz = vehicle_zone(fleet.at(best->vehicle), ctx, now_s);
            if (vz != home) {
                d.adjacency_updated = true;
                d.linked_zone = vz;
            }
            return true;
        }
        return false;
    };

    const ZoneSetIds& ring = sched.neighbors(home);
    if (!ring.empty()) {
        // Expand, then target; repeat until the component is exhausted.
        ZoneSetIds searched;
        ZoneSetIds area = ring;
        area.insert(home);
        while (true) {
            d.zones_searched.push_back(area);
            if (auto best = search.best_in(difference(area, searched))) {
                accept(*best);
                return d;
            }
            searched = area;
            ZoneSetIds next = sched.expand_frontier(area);
            if (next == area) break;
            area = std::move(next);
        }
        if (cfg.global_fallback_after_component && global_fallback(searched)) return d;
    } else {
        ZoneSetIds searched{home};
        d.zones_searched.push_back(searched);
        if (auto best = search.best_in(searched)) {
            accept(*best);
            return d;
        }
        if (global_fallback(searched)) return d;
    }
    d.reason = search.miss_reason();
    return d;
}

}  // namespace

std::string_view to_string(DispatchRejectReason r) noexcept {
    switch (r) {
        case DispatchRejectReason::None: return "none";
        case DispatchRejectReason::NoVehicle: return "no-vehicle";
        case DispatchRejectReason::Unroutable: return "unroutable";
        case DispatchRejectReason::OffNetwork: return "off-network";
    }
    return "?";
}

void DispatchConfig::validate() const {
    if (!(oss_reassign_threshold_s >= 0.0) || !std::isfinite(oss_reassign_threshold_s)) {
        throw ConfigError("dispatch.oss_threshold_s must be a non-negative number");
    }
}

std::vector<ZoneId> map_nodes_to_zones(const RoadNetwork& net, const ZoneSet& zones) {
    std::vector<ZoneId> out(net.id_bound(), 0);
    if (zones.empty()) return out;
    for (NodeId id : net.node_ids()) out[id] = zones.locate_or_nearest(net.location(id)).zone;
    return out;
}

ZoneId vehicle_zone(const Vehicle& v, const DispatchContext& ctx, double now_s) {
    return ctx.node_zone[v.position_at(now_s)];
}

DispatchDecision dispatch_eat(const CallSite& call, const Fleet& fleet, AdjacencySchedule& sched,
                              const DispatchContext& ctx, double now_s, const DispatchConfig& cfg) {
    DispatchDecision d = eat_search(call, fleet, sched, ctx, now_s, cfg);
    if (d.adjacency_updated) sched.add_neighbor(call.zone, *d.linked_zone);
    return d;
}

DispatchDecision dispatch_baseline(const CallSite& call, const Fleet& fleet, const AdjacencySchedule& sched,
                                   const DispatchContext& ctx, double now_s, const DispatchConfig& cfg) {
    DispatchDecision d;
    CandidateSearch search(call, fleet, ctx, now_s, cfg.strategy);
    ZoneSetIds home{call.zone};
    d.zones_searched.push_back(home);
    if (auto best = search.best_in(home)) {
        d.assignment = best;
        return d;
    }
    const ZoneSetIds& ring = sched.neighbors(call.zone);
    if (!ring.empty()) {
        ZoneSetIds area = ring;
        area.insert(call.zone);
        d.zones_searched.push_back(area);
        if (auto best = search.best_in(ring)) {
            d.assignment = best;
            return d;
        }
    }
    d.reason = search.miss_reason();
    return d;
}

DispatchDecision dispatch(const CallSite& call, const Fleet& fleet, AdjacencySchedule& sched,
                          const DispatchContext& ctx, double now_s, const DispatchConfig& cfg) {
    return cfg.eat_enabled ? dispatch_eat(call, fleet, sched, ctx, now_s, cfg)
                           : dispatch_baseline(call, fleet, sched, ctx, now_s, cfg);
}

std::vector<const Assignment*> pending_assignments(const Fleet& fleet) {
    std::vector<const Assignment*> out;
    for (const Vehicle& v : fleet.vehicles) {
        if (v.status == VehicleStatus::EnRouteToPickup && v.current) out.push_back(&*v.current);
        if (v.queued) out.push_back(&*v.queued);
    }
    std::sort(out.begin(), out.end(), [](const Assignment* a, const Assignment* b) {
        return a->request_time_s != b->request_time_s ? a->request_time_s < b->request_time_s
                                                      : a->request < b->request;
    });
    return out;
}

std::vector<Reassignment> oss_reschedule(Fleet& fleet, const AdjacencySchedule& sched, const DispatchContext& ctx,
                                         double now_s, const DispatchConfig& cfg) {
    std::vector<Reassignment> out;
    if (cfg.strategy != Strategy::OSS) return out;
    const double m = ctx.routes.traffic().multiplier_at(now_s);

    // Snapshot the work list first; reassignments mutate the fleet.
    struct Pending {
        RequestId request;
        double request_time_s;
    };
    std::vector<Pending> work;
    for (const Assignment* a : pending_assignments(fleet)) {
        if (a->planned_multiplier != m) work.push_back({a->request, a->request_time_s});
    }

    for (const Pending& p : work) {
        // Locate the job again; earlier reassignments may have moved vehicles.
        Vehicle* holder = nullptr;
        Assignment* job = nullptr;
        for (Vehicle& v : fleet.vehicles) {
            if (v.status == VehicleStatus::EnRouteToPickup && v.current && v.current->request == p.request) {
                holder = &v;
                job = &*v.current;
            } else if (v.queued && v.queued->request == p.request) {
                holder = &v;
                job = &*v.queued;
            }
            if (holder) break;
        }
        if (!holder || job->planned_multiplier == m) continue;

        const double remaining = std::max(0.0, job->pickup_s - now_s);
        const CallSite call{job->request, job->request_time_s, job->party_size, job->pickup_node, job->dropoff_node,
                            job->call_zone};
        DispatchDecision d = cfg.eat_enabled ? eat_search(call, fleet, sched, ctx, now_s, cfg)
                                             : dispatch_baseline(call, fleet, sched, ctx, now_s, cfg);
        if (!d.assignment || !(d.assignment->eta_s < remaining - cfg.oss_reassign_threshold_s)) continue;

        Vehicle& target = fleet.at(d.assignment->vehicle);
        const NodeId start = target.status == VehicleStatus::Idle ? target.node : target.current->dropoff_node;
        const auto& to_pickup = ctx.routes.route(now_s, start, call.pickup_node);
        const auto& trip = ctx.routes.route(now_s, call.pickup_node, call.dropoff_node);
        if (!to_pickup || !trip) continue;

        const std::uint32_t version = job->version + 1;
        const VehicleId from = holder->id;
        // Release the old holder before committing the new plan.
        if (job == &*holder->current) {
            holder->node = holder->position_at(now_s);
            holder->current.reset();
            holder->status = VehicleStatus::Idle;
            holder->busy_until_s = now_s;
        } else {
            holder->queued.reset();
            holder->busy_until_s = holder->current->dropoff_s;
        }
        assign(target, call, *to_pickup, *trip, now_s, m, version);
        out.push_back({call.request, from, target.id, remaining, d.assignment->eta_s, version});
    }
    return out;
}

}  // namespace amod
