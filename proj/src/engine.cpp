#include "amod/engine.hpp"

#include "amod/error.hpp"
#include "amod/random.hpp"
#include "amod/text.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <queue>
#include <sstream>
#include <unordered_map>

namespace amod {

std::string_view to_string(EventKind k) noexcept {
    switch (k) {
        case EventKind::TrafficChange: return "TrafficChange";
        case EventKind::Reschedule: return "Reschedule";
        case EventKind::RequestArrival: return "RequestArrival";
        case EventKind::ArrivedAtPickup: return "ArrivedAtPickup";
        case EventKind::TripCompleted: return "TripCompleted";
        case EventKind::PassengerAbandoned: return "PassengerAbandoned";
    }
    return "?";
}

std::string_view to_string(CallOutcome o) noexcept {
    switch (o) {
        case CallOutcome::PickedUp: return "picked_up";
        case CallOutcome::RejectedAtDispatch: return "rejected";
        case CallOutcome::Abandoned: return "abandoned";
    }
    return "?";
}

std::string serialize(const SimEvent& e) {
    std::string s = text::format_double(e.time_s) + ' ' + std::to_string(e.seq) + ' ' + std::string(to_string(e.kind));
    switch (e.kind) {
        case EventKind::TrafficChange:
            s += " multiplier=" + text::format_double(e.multiplier);
            break;
        case EventKind::Reschedule:
            break;
        case EventKind::RequestArrival:
        case EventKind::PassengerAbandoned:
            s += " request=" + std::to_string(e.request);
            if (e.kind == EventKind::PassengerAbandoned) s += " version=" + std::to_string(e.version);
            break;
        case EventKind::ArrivedAtPickup:
        case EventKind::TripCompleted:
            s += " vehicle=" + std::to_string(e.vehicle) + " request=" + std::to_string(e.request) +
                 " version=" + std::to_string(e.version);
            break;
    }
    return s;
}

bool transition_allowed(VehicleStatus from, VehicleStatus to) noexcept {
    using S = VehicleStatus;
    return (from == S::Idle && to == S::EnRouteToPickup) || (from == S::EnRouteToPickup && to == S::OnTrip) ||
           (from == S::OnTrip && to == S::Idle) || (from == S::OnTrip && to == S::EnRouteToPickup) ||
           (from == S::EnRouteToPickup && to == S::Idle);
}

void write_call_records(std::ostream& out, std::span<const CallRecord> records) {
    out << kCallRecordHeader << '\n';
    for (const auto& r : records) {
        out << r.request << ',' << text::format_double(r.request_time_s) << ',' << text::format_double(r.patience_s)
            << ',' << to_string(r.outcome) << ',';
        if (r.outcome == CallOutcome::PickedUp) {
            out << text::format_double(r.pickup_time_s) << ',' << text::format_double(r.dropoff_time_s) << ','
                << r.vehicle;
        } else {
            out << ",,";
        }
        out << ',' << (r.outcome == CallOutcome::RejectedAtDispatch ? to_string(r.reason) : "") << ',';
        if (r.outcome == CallOutcome::Abandoned) out << text::format_double(r.abandon_time_s);
        out << '\n';
    }
}

std::vector<CallRecord> read_call_records(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || text::trim(line) != kCallRecordHeader) {
        throw LoadError("call record file has an unexpected header");
    }
    std::vector<CallRecord> out;
    std::size_t ln = 1;
    while (std::getline(in, line)) {
        ++ln;
        if (text::trim(line).empty()) continue;
        auto f = text::split_csv(line);
        auto fail = [&] { throw LoadError("call records line " + std::to_string(ln) + " is malformed"); };
        if (f.size() != 9) fail();
        CallRecord r;
        long long v = 0;
        if (!text::parse_int(f[0], v) || !text::parse_double(f[1], r.request_time_s) ||
            !text::parse_double(f[2], r.patience_s)) {
            fail();
        }
        r.request = static_cast<RequestId>(v);
        if (f[3] == "picked_up") {
            r.outcome = CallOutcome::PickedUp;
            if (!text::parse_double(f[4], r.pickup_time_s) || !text::parse_double(f[5], r.dropoff_time_s) ||
                !text::parse_int(f[6], v)) {
                fail();
            }
            r.vehicle = static_cast<VehicleId>(v);
        } else if (f[3] == "rejected") {
            r.outcome = CallOutcome::RejectedAtDispatch;
            if (f[7] == "no-vehicle") r.reason = DispatchRejectReason::NoVehicle;
            else if (f[7] == "unroutable") r.reason = DispatchRejectReason::Unroutable;
            else if (f[7] == "off-network") r.reason = DispatchRejectReason::OffNetwork;
            else fail();
        } else if (f[3] == "abandoned") {
            r.outcome = CallOutcome::Abandoned;
            if (!text::parse_double(f[8], r.abandon_time_s)) fail();
        } else {
            fail();
        }
        out.push_back(r);
    }
    return out;
}

TrafficState build_traffic(const std::vector<TrafficBreakpoint>& base, const RandomWalkSpec& walk, double horizon_s) {
    const TrafficState base_state(base);
    if (!walk.enabled) return base_state;
    if (!(walk.step_s > 0.0) || !(walk.sigma >= 0.0)) {
        throw ConfigError("traffic.random_walk needs step_s > 0 and sigma >= 0");
    }
    std::vector<double> times;
    for (const auto& b : base) times.push_back(b.start_s);
    std::vector<double> walk_values;
    Rng rng(walk.seed);
    double w = 1.0;
    for (double t = walk.step_s; t < horizon_s; t += walk.step_s) {
        w = std::clamp(w + walk.sigma * standard_normal(rng), 0.5, 1.5);
        times.push_back(t);
        walk_values.push_back(w);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    auto walk_at = [&](double t) {
        if (t < walk.step_s) return 1.0;
        const auto k = static_cast<std::size_t>(std::floor(t / walk.step_s)) - 1;
        return walk_values.empty() ? 1.0 : walk_values[std::min(k, walk_values.size() - 1)];
    };
    std::vector<TrafficBreakpoint> out;
    for (double t : times) {
        const double m = std::clamp(base_state.multiplier_at(t) * walk_at(t), 1e-3, 2.0);
        if (!out.empty() && out.back().multiplier == m) continue;
        out.push_back({t, m});
    }
    return TrafficState(std::move(out));
}

ReplayReport compare_event_logs(std::span<const std::string> expected, std::span<const std::string> actual) {
    auto header_strategy = [](std::span<const std::string> log) -> std::string {
        if (log.empty() || !log.front().starts_with("#")) return {};
        std::istringstream ss(log.front());
        std::string tok, out;
        while (ss >> tok) {
            if (tok.starts_with("strategy=") || tok.starts_with("eat=")) out += tok + ' ';
        }
        return out;
    };
    const auto a = header_strategy(expected);
    const auto b = header_strategy(actual);
    if (a != b) throw ContractViolation("event logs come from different dispatch systems (" + a + "vs " + b + ")");
    ReplayReport rep;
    const std::size_t n = std::max(expected.size(), actual.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::string e = i < expected.size() ? expected[i] : "<end of log>";
        const std::string x = i < actual.size() ? actual[i] : "<end of log>";
        if (e != x) {
            rep.identical = false;
            rep.first_difference = i;
            rep.expected = e;
            rep.actual = x;
            break;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Event loop

namespace {

struct EventOrder {
    bool operator()(const SimEvent& a, const SimEvent& b) const noexcept {
        return a.time_s != b.time_s ? a.time_s > b.time_s : a.seq > b.seq;
    }
};

std::string format_zone_rounds(const std::vector<ZoneSetIds>& rounds) {
    std::string s;
    for (std::size_t i = 0; i < rounds.size(); ++i) {
        if (i) s += '|';
        bool first = true;
        for (ZoneId z : rounds[i]) {
            if (!first) s += ',';
            s += std::to_string(z);
            first = false;
        }
    }
    return s;
}

class Simulation {
public:
    Simulation(const EngineConfig& cfg, const RoadNetwork& net, const ZoneSet& zones, AdjacencySchedule schedule,
               Fleet fleet, std::span<const TripRequest> demand)
        : cfg_(cfg),
          net_(net),
          zones_(zones),
          schedule_(std::move(schedule)),
          fleet_(std::move(fleet)),
          demand_(demand),
          routes_(net, cfg_.traffic),
          node_zone_(map_nodes_to_zones(net, zones)),
          ctx_{routes_, zones_, node_zone_} {
        cfg_.dispatch.validate();
        if (zones_.empty()) throw ConfigError("at least one zone is required");
        if (schedule_.zone_count() != zones_.size()) throw ConfigError("adjacency schedule does not match zones");
        for (std::size_t i = 1; i < demand_.size(); ++i) {
            const auto& a = demand_[i - 1];
            const auto& b = demand_[i];
            if (b.request_time_s < a.request_time_s || (b.request_time_s == a.request_time_s && b.id <= a.id)) {
                throw ConfigError("demand must be sorted by (request_time_s, id) with unique ids");
            }
        }
        records_.resize(demand_.size());
        for (std::size_t i = 0; i < demand_.size(); ++i) {
            index_of_.emplace(demand_[i].id, i);
            records_[i].request = demand_[i].id;
            records_[i].request_time_s = demand_[i].request_time_s;
            records_[i].patience_s = demand_[i].patience_s;
        }
    }

    RunResult execute() {
        log_.push_back("# amod-event-log v1 strategy=" + std::string(to_string(cfg_.dispatch.strategy)) +
                       " eat=" + (cfg_.dispatch.eat_enabled ? "1" : "0") +
                       " global_fallback=" + (cfg_.dispatch.global_fallback_after_component ? "1" : "0") +
                       " oss_threshold_s=" + text::format_double(cfg_.dispatch.oss_reassign_threshold_s));
        for (const auto& b : cfg_.traffic.schedule()) {
            if (b.start_s < 0) continue;
            SimEvent e;
            e.time_s = b.start_s;
            e.kind = EventKind::TrafficChange;
            e.multiplier = b.multiplier;
            push(e);
        }
        for (const auto& t : demand_) {
            SimEvent e;
            e.time_s = t.request_time_s;
            e.kind = EventKind::RequestArrival;
            e.request = t.id;
            push(e);
        }

        double last_time = -std::numeric_limits<double>::infinity();
        while (!queue_.empty()) {
            const SimEvent e = queue_.top();
            queue_.pop();
            if (e.time_s < last_time) throw EngineError("event time went backwards", serialize(e));
            last_time = e.time_s;
            try {
                handle(e);
            } catch (const EngineError&) {
                throw;
            } catch (const std::exception& ex) {
                throw EngineError(ex.what(), serialize(e));
            }
        }

        for (const auto& r : records_) {
            if (r.outcome == CallOutcome::PickedUp) ++stats_.picked_up;
        }
        stats_.requests = demand_.size();
        stats_.last_event_time_s = std::isfinite(last_time) ? last_time : 0.0;
        RunResult out;
        out.records = std::move(records_);
        out.final_schedule = std::move(schedule_);
        out.event_log = std::move(log_);
        out.stats = stats_;
        return out;
    }

private:
    void push(SimEvent e) {
        e.seq = next_seq_++;
        queue_.push(e);
    }

    void record_event(const SimEvent& e, const std::string& extra = {}) {
        ++stats_.events_processed;
        log_.push_back(extra.empty() ? serialize(e) : serialize(e) + ' ' + extra);
    }

    void set_status(Vehicle& v, VehicleStatus to) {
        if (!transition_allowed(v.status, to)) {
            throw ContractViolation("illegal vehicle transition " + std::string(to_string(v.status)) + " -> " +
                                    std::string(to_string(to)) + " for vehicle " + std::to_string(v.id));
        }
        v.status = to;
    }

    CallRecord& record(RequestId id) { return records_.at(index_of_.at(id)); }
    const TripRequest& trip(RequestId id) const { return demand_[index_of_.at(id)]; }
    double deadline(RequestId id) const {
        const auto& t = trip(id);
        return t.request_time_s + t.patience_s;
    }

    /// Schedules pickup and, if the plan misses the passenger's deadline, the
    /// abandonment at that deadline.
    void schedule_job(const Vehicle& v, const Assignment& a) {
        SimEvent pick;
        pick.time_s = a.pickup_s;
        pick.kind = EventKind::ArrivedAtPickup;
        pick.vehicle = v.id;
        pick.request = a.request;
        pick.version = a.version;
        push(pick);
        const double dl = deadline(a.request);
        if (a.pickup_s > dl) {
            SimEvent ab;
            ab.time_s = dl;
            ab.kind = EventKind::PassengerAbandoned;
            ab.request = a.request;
            ab.version = a.version;
            push(ab);
        }
    }

    void handle(const SimEvent& e) {
        switch (e.kind) {
            case EventKind::TrafficChange: on_traffic_change(e); break;
            case EventKind::Reschedule: on_reschedule(e); break;
            case EventKind::RequestArrival: on_request(e); break;
            case EventKind::ArrivedAtPickup: on_pickup(e); break;
            case EventKind::TripCompleted: on_trip_completed(e); break;
            case EventKind::PassengerAbandoned: on_abandon(e); break;
        }
    }

    void reject(const SimEvent& e, CallRecord& rec, DispatchRejectReason why, const std::string& extra = {}) {
        rec.outcome = CallOutcome::RejectedAtDispatch;
        rec.reason = why;
        ++stats_.rejected;
        record_event(e, "rejected reason=" + std::string(to_string(why)) + extra);
    }

    void on_request(const SimEvent& e) {
        const TripRequest& t = trip(e.request);
        CallRecord& rec = record(e.request);
        const auto pickup = net_.index().nearest(t.pickup, cfg_.snap_radius_m);
        const auto dropoff = net_.index().nearest(t.dropoff, cfg_.snap_radius_m);
        if (!pickup || !dropoff) {
            reject(e, rec, DispatchRejectReason::OffNetwork);
            return;
        }
        const auto located = zones_.locate_or_nearest(t.pickup);
        if (located.fallback) ++stats_.zone_fallbacks;
        const CallSite call{t.id, t.request_time_s, t.party_size, *pickup, *dropoff, located.zone};
        const std::string zone_note = " zone=" + std::to_string(call.zone) + (located.fallback ? "*" : "");

        const auto& trip_route = routes_.route(e.time_s, call.pickup_node, call.dropoff_node);
        if (!trip_route) {
            reject(e, rec, DispatchRejectReason::Unroutable, zone_note);
            return;
        }
        const DispatchDecision d = dispatch(call, fleet_, schedule_, ctx_, e.time_s, cfg_.dispatch);
        const std::string rounds = " rounds=" + format_zone_rounds(d.zones_searched);
        if (!d.assigned()) {
            reject(e, rec, d.reason, zone_note + rounds);
            return;
        }
        Vehicle& v = fleet_.at(d.assignment->vehicle);
        const NodeId start = v.status == VehicleStatus::Idle ? v.node : v.current->dropoff_node;
        const auto& to_pickup = routes_.route(e.time_s, start, call.pickup_node);
        if (!to_pickup) throw ContractViolation("dispatch chose a vehicle that cannot reach the pickup");
        const Assignment& a = assign(v, call, *to_pickup, *trip_route, e.time_s,
                                     cfg_.traffic.multiplier_at(e.time_s), 0);
        std::string extra = "assigned vehicle=" + std::to_string(v.id) + " eta=" +
                            text::format_double(d.assignment->eta_s) + (v.queued ? " queued" : "") + zone_note + rounds;
        if (d.adjacency_updated) {
            ++stats_.adjacency_links_added;
            extra += " linked=" + std::to_string(call.zone) + "-" + std::to_string(*d.linked_zone);
        }
        record_event(e, extra);
        schedule_job(v, a);
    }

    void on_pickup(const SimEvent& e) {
        Vehicle& v = fleet_.at(e.vehicle);
        if (v.status != VehicleStatus::EnRouteToPickup || !v.current || v.current->request != e.request ||
            v.current->version != e.version) {
            return;  // superseded by abandonment or reassignment
        }
        if (e.time_s > deadline(e.request)) throw ContractViolation("pickup after the passenger's deadline");
        set_status(v, VehicleStatus::OnTrip);
        v.node = v.current->pickup_node;
        CallRecord& rec = record(e.request);
        rec.outcome = CallOutcome::PickedUp;
        rec.pickup_time_s = e.time_s;
        rec.vehicle = v.id;
        record_event(e);

        SimEvent done;
        done.time_s = v.current->dropoff_s;
        done.kind = EventKind::TripCompleted;
        done.vehicle = v.id;
        done.request = e.request;
        done.version = e.version;
        push(done);
    }

    void on_trip_completed(const SimEvent& e) {
        Vehicle& v = fleet_.at(e.vehicle);
        if (v.status != VehicleStatus::OnTrip || !v.current || v.current->request != e.request ||
            v.current->version != e.version) {
            throw ContractViolation("trip completion for a vehicle that is not carrying the request");
        }
        CallRecord& rec = record(e.request);
        rec.dropoff_time_s = e.time_s;
        v.node = v.current->dropoff_node;
        if (v.queued) {
            set_status(v, VehicleStatus::EnRouteToPickup);
            v.current = std::move(v.queued);
            v.queued.reset();
            v.busy_until_s = v.current->dropoff_s;
            record_event(e, "next=" + std::to_string(v.current->request));
        } else {
            set_status(v, VehicleStatus::Idle);
            v.current.reset();
            v.busy_until_s = e.time_s;
            record_event(e);
        }
    }

    void on_abandon(const SimEvent& e) {
        for (Vehicle& v : fleet_.vehicles) {
            if (v.status == VehicleStatus::EnRouteToPickup && v.current && v.current->request == e.request &&
                v.current->version == e.version) {
                v.node = v.position_at(e.time_s);
                set_status(v, VehicleStatus::Idle);
                v.current.reset();
                v.busy_until_s = e.time_s;
                finish_abandon(e, v.id, v.node);
                return;
            }
            if (v.queued && v.queued->request == e.request && v.queued->version == e.version) {
                v.queued.reset();
                v.busy_until_s = v.current->dropoff_s;
                finish_abandon(e, v.id, std::nullopt);
                return;
            }
        }
    }

    void finish_abandon(const SimEvent& e, VehicleId v, std::optional<NodeId> released_at) {
        CallRecord& rec = record(e.request);
        rec.outcome = CallOutcome::Abandoned;
        rec.abandon_time_s = e.time_s;
        ++stats_.abandoned;
        record_event(e, "vehicle=" + std::to_string(v) +
                            (released_at ? " released_at=" + std::to_string(*released_at) : " dequeued"));
    }

    void on_traffic_change(const SimEvent& e) {
        record_event(e);
        if (cfg_.dispatch.strategy == Strategy::OSS) {
            SimEvent r;
            r.time_s = e.time_s;
            r.kind = EventKind::Reschedule;
            push(r);
        }
    }

    void on_reschedule(const SimEvent& e) {
        const auto moves = oss_reschedule(fleet_, schedule_, ctx_, e.time_s, cfg_.dispatch);
        std::string extra = "reassigned=" + std::to_string(moves.size());
        for (const auto& m : moves) {
            extra += " " + std::to_string(m.request) + ":" + std::to_string(m.from) + "->" + std::to_string(m.to) +
                     "@" + text::format_double(m.new_eta_s);
        }
        record_event(e, extra);
        stats_.reassignments += moves.size();
        for (const auto& m : moves) {
            const Vehicle& v = fleet_.at(m.to);
            const Assignment& a = (v.queued && v.queued->request == m.request) ? *v.queued : *v.current;
            schedule_job(v, a);
        }
    }

    EngineConfig cfg_;
    const RoadNetwork& net_;
    const ZoneSet& zones_;
    AdjacencySchedule schedule_;
    Fleet fleet_;
    std::span<const TripRequest> demand_;
    RouteCache routes_;
    std::vector<ZoneId> node_zone_;
    DispatchContext ctx_;

    std::priority_queue<SimEvent, std::vector<SimEvent>, EventOrder> queue_;
    std::uint64_t next_seq_ = 0;
    std::vector<CallRecord> records_;
    std::unordered_map<RequestId, std::size_t> index_of_;
    std::vector<std::string> log_;
    RunStats stats_;
};

}  // namespace

RunResult run(const EngineConfig& config, const RoadNetwork& net, const ZoneSet& zones, AdjacencySchedule schedule,
              Fleet fleet, std::span<const TripRequest> demand) {
    Simulation sim(config, net, zones, std::move(schedule), std::move(fleet), demand);
    return sim.execute();
}

}  // namespace amod
