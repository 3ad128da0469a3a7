#include "amod/app.hpp"

#include "amod/error.hpp"
#include "amod/random.hpp"
#include "amod/text.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace amod::app {

using nlohmann::json;

namespace {

// Strict view over one JSON object: every key must be consumed.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(label() + " must be an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    const json* get(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() || it->is_null() ? nullptr : &*it;
    }

    Section sub(const std::string& key) {
        const json* v = get(key);
        if (!v) throw ConfigError("missing required key " + label(key));
        return Section(*v, label(key));
    }

    std::optional<double> number(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_number()) throw ConfigError(label(key) + " must be a number");
        return v->get<double>();
    }

    std::optional<std::uint64_t> unsigned_int(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0))
            throw ConfigError(label(key) + " must be a non-negative integer");
        return v->get<std::uint64_t>();
    }

    std::optional<std::string> string(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) throw ConfigError(label(key) + " must be a string");
        return v->get<std::string>();
    }

    std::optional<bool> boolean(const std::string& key) {
        const json* v = get(key);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) throw ConfigError(label(key) + " must be true or false");
        return v->get<bool>();
    }

    std::string require_string(const std::string& key) {
        auto s = string(key);
        if (!s) throw ConfigError("missing required key " + label(key));
        return *s;
    }

    std::uint64_t require_seed(const std::string& key) {
        auto s = unsigned_int(key);
        if (!s) throw ConfigError("missing required key " + label(key) + " (seeds must be explicit)");
        return *s;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError("unknown key " + label(it.key()));
    }

    std::string label(const std::string& key = {}) const {
        if (key.empty()) return path_.empty() ? "<config>" : path_;
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (!path.is_absolute() && !base.empty()) path = base / path;
    return fs::absolute(path).lexically_normal();
}

GeoBox parse_bbox(Section s) {
    GeoBox b;
    auto req = [&](const char* k) {
        auto v = s.number(k);
        if (!v) throw ConfigError("missing required key " + s.label(k));
        return *v;
    };
    b.lat_min = req("lat_min");
    b.lat_max = req("lat_max");
    b.lon_min = req("lon_min");
    b.lon_max = req("lon_max");
    s.finish();
    if (!(b.lat_min < b.lat_max) || !(b.lon_min < b.lon_max)) throw ConfigError(s.label() + " is empty");
    return b;
}

json bbox_json(const GeoBox& b) {
    return json{{"lat_min", b.lat_min}, {"lat_max", b.lat_max}, {"lon_min", b.lon_min}, {"lon_max", b.lon_max}};
}

std::string path_string(const fs::path& p) { return p.generic_string(); }

std::string file_digest(const fs::path& p) {
    return text::hex64(text::fnv1a64(text::read_file(p)));
}

std::map<std::string, std::string> read_metadata(const fs::path& dir) {
    std::map<std::string, std::string> kv;
    std::ifstream in(dir / "metadata.txt");
    if (!in) return kv;
    std::string line;
    while (std::getline(in, line)) {
        auto pos = line.find(": ");
        if (pos == std::string::npos) continue;
        kv.emplace(line.substr(0, pos), line.substr(pos + 2));
    }
    return kv;
}

template <class Fn>
void write_with(const fs::path& file, Fn&& fn) {
    std::ostringstream os;
    fn(os);
    text::write_file(file, os.str());
}

}  // namespace

RunConfig parse_run_config(const json& doc, const fs::path& base_dir) {
    RunConfig cfg;
    Section root(doc, "");

    {
        Section net = root.sub("network");
        cfg.nodes_file = resolve(base_dir, net.require_string("nodes"));
        cfg.edges_file = resolve(base_dir, net.require_string("edges"));
        if (auto v = net.number("speed_limit_mps")) cfg.speed_limit_mps = *v;
        if (auto v = net.number("snap_radius_m")) cfg.snap_radius_m = *v;
        net.finish();
        if (!(cfg.speed_limit_mps > 0.0)) throw ConfigError("network.speed_limit_mps must be positive");
        if (!(cfg.snap_radius_m > 0.0)) throw ConfigError("network.snap_radius_m must be positive");
    }

    cfg.zones_file = resolve(base_dir, root.require_string("zones"));

    {
        Section fleet = root.sub("fleet");
        if (auto v = fleet.unsigned_int("capacity")) cfg.capacity = static_cast<int>(*v);
        if (cfg.capacity < 1) throw ConfigError("fleet.capacity must be at least 1");
        if (const json* nodes = fleet.get("start_nodes")) {
            if (!nodes->is_array()) throw ConfigError("fleet.start_nodes must be an array");
            std::vector<NodeId> ids;
            for (const auto& n : *nodes) {
                if (!n.is_number_unsigned()) throw ConfigError("fleet.start_nodes entries must be node ids");
                ids.push_back(n.get<NodeId>());
            }
            cfg.fleet_start_nodes = std::move(ids);
            cfg.fleet_size = cfg.fleet_start_nodes->size();
            if (auto v = fleet.unsigned_int("size"); v && *v != cfg.fleet_size)
                throw ConfigError("fleet.size disagrees with the length of fleet.start_nodes");
            cfg.fleet_seed = fleet.unsigned_int("seed");
        } else {
            if (auto v = fleet.unsigned_int("size")) cfg.fleet_size = *v;
            cfg.fleet_seed = fleet.require_seed("seed");
        }
        fleet.finish();
    }

    {
        Section demand = root.sub("demand");
        cfg.parse.capacity = cfg.capacity;
        if (demand.has("trips") == demand.has("generate"))
            throw ConfigError("demand needs exactly one of demand.trips and demand.generate");
        if (demand.has("trips")) {
            cfg.trips_file = resolve(base_dir, demand.require_string("trips"));
            cfg.parse.seed = demand.require_seed("seed");
            if (demand.has("bbox")) cfg.parse.bbox = parse_bbox(demand.sub("bbox"));
            if (const json* cols = demand.get("columns")) {
                if (!cols->is_object()) throw ConfigError("demand.columns must be an object");
                for (auto it = cols->begin(); it != cols->end(); ++it) {
                    if (!it->is_string()) throw ConfigError("demand.columns values must be strings");
                    cfg.parse.column_aliases[it.key()] = it->get<std::string>();
                }
            }
        } else {
            Section gen = demand.sub("generate");
            GeneratorConfig g;
            auto rate = gen.number("rate_per_hour");
            auto dur = gen.number("duration_s");
            if (!rate) throw ConfigError("missing required key demand.generate.rate_per_hour");
            if (!dur) throw ConfigError("missing required key demand.generate.duration_s");
            g.rate_per_hour = *rate;
            g.duration_s = *dur;
            g.seed = gen.require_seed("seed");
            std::string region = gen.string("region").value_or("zones");
            if (region != "zones" && region != "bbox")
                throw ConfigError("demand.generate.region must be \"zones\" or \"bbox\"");
            g.region_is_zones = region == "zones";
            if (gen.has("bbox")) g.bbox = parse_bbox(gen.sub("bbox"));
            if (!g.region_is_zones && !g.bbox) throw ConfigError("demand.generate.region \"bbox\" needs demand.generate.bbox");
            if (const json* w = gen.get("party_weights")) {
                if (!w->is_array() || w->empty()) throw ConfigError("demand.generate.party_weights must be a non-empty array");
                g.party_weights.clear();
                for (const auto& x : *w) {
                    if (!x.is_number()) throw ConfigError("demand.generate.party_weights must be numbers");
                    g.party_weights.push_back(x.get<double>());
                }
            }
            std::string start = gen.string("start").value_or("2013-01-01 00:00:00");
            auto ts = parse_timestamp(start);
            if (!ts) throw ConfigError("demand.generate.start must be YYYY-MM-DD HH:MM:SS");
            g.start_unix_s = *ts;
            gen.finish();
            if (g.rate_per_hour < 0.0) throw ConfigError("demand.generate.rate_per_hour must be non-negative");
            if (!(g.duration_s > 0.0)) throw ConfigError("demand.generate.duration_s must be positive");
            cfg.generator = g;
        }
        demand.finish();
    }

    if (root.has("traffic")) {
        Section traffic = root.sub("traffic");
        if (const json* sched = traffic.get("schedule")) {
            if (!sched->is_array()) throw ConfigError("traffic.schedule must be an array of [start_s, multiplier]");
            for (const auto& bp : *sched) {
                if (!bp.is_array() || bp.size() != 2 || !bp[0].is_number() || !bp[1].is_number())
                    throw ConfigError("traffic.schedule entries must be [start_s, multiplier]");
                cfg.traffic_schedule.push_back({bp[0].get<double>(), bp[1].get<double>()});
            }
            try {
                TrafficState check(cfg.traffic_schedule);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("traffic.schedule: ") + e.what());
            }
        }
        if (traffic.has("random_walk")) {
            Section walk = traffic.sub("random_walk");
            cfg.random_walk.enabled = walk.boolean("enabled").value_or(true);
            if (cfg.random_walk.enabled) cfg.random_walk.seed = walk.require_seed("seed");
            else if (auto s = walk.unsigned_int("seed")) cfg.random_walk.seed = *s;
            if (auto v = walk.number("step_s")) cfg.random_walk.step_s = *v;
            if (auto v = walk.number("sigma")) cfg.random_walk.sigma = *v;
            walk.finish();
            if (!(cfg.random_walk.step_s > 0.0)) throw ConfigError("traffic.random_walk.step_s must be positive");
            if (!(cfg.random_walk.sigma >= 0.0)) throw ConfigError("traffic.random_walk.sigma must be non-negative");
        }
        traffic.finish();
    }

    {
        Section d = root.sub("dispatch");
        cfg.dispatch.strategy = parse_strategy(d.string("strategy").value_or("NSS"));
        if (const json* list = d.get("strategies")) {
            if (!list->is_array() || list->empty()) throw ConfigError("dispatch.strategies must be a non-empty array");
            cfg.matrix_strategies.clear();
            for (const auto& x : *list) {
                if (!x.is_string()) throw ConfigError("dispatch.strategies entries must be strategy names");
                cfg.matrix_strategies.push_back(parse_strategy(x.get<std::string>()));
            }
        }
        cfg.dispatch.eat_enabled = d.boolean("eat").value_or(true);
        cfg.dispatch.global_fallback_after_component = d.boolean("global_fallback").value_or(true);
        if (auto v = d.number("oss_threshold_s")) cfg.dispatch.oss_reassign_threshold_s = *v;
        d.finish();
        try {
            cfg.dispatch.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("dispatch: ") + e.what());
        }
    }

    if (root.has("metrics")) {
        Section m = root.sub("metrics");
        if (auto v = m.number("period_s")) cfg.metrics_period_s = *v;
        m.finish();
        if (!(cfg.metrics_period_s > 0.0)) throw ConfigError("metrics.period_s must be positive");
    }

    if (auto out = root.string("output")) cfg.output_dir = resolve(base_dir, *out);
    else cfg.output_dir = resolve(base_dir, "out");

    root.finish();
    return cfg;
}

RunConfig load_run_config(const fs::path& config_file) {
    std::string content;
    try {
        content = text::read_file(config_file);
    } catch (const LoadError& e) {
        throw ConfigError(e.what());
    }
    json doc;
    try {
        doc = json::parse(content);
    } catch (const json::parse_error& e) {
        throw ConfigError(path_string(config_file) + ": " + e.what());
    }
    try {
        RunConfig cfg = parse_run_config(doc, config_file.parent_path());
        cfg.source = config_file;
        return cfg;
    } catch (const ConfigError& e) {
        throw ConfigError(path_string(config_file) + ": " + e.what());
    }
}

json to_json(const RunConfig& cfg) {
    json j;
    j["network"] = {{"nodes", path_string(cfg.nodes_file)},
                    {"edges", path_string(cfg.edges_file)},
                    {"speed_limit_mps", cfg.speed_limit_mps},
                    {"snap_radius_m", cfg.snap_radius_m}};
    j["zones"] = path_string(cfg.zones_file);
    json demand;
    if (cfg.trips_file) {
        demand["trips"] = path_string(*cfg.trips_file);
        demand["seed"] = cfg.parse.seed;
        demand["bbox"] = bbox_json(cfg.parse.bbox);
        demand["columns"] = json::object();
        for (const auto& [k, v] : cfg.parse.column_aliases) demand["columns"][k] = v;
    } else if (cfg.generator) {
        const auto& g = *cfg.generator;
        json gen{{"rate_per_hour", g.rate_per_hour},
                 {"duration_s", g.duration_s},
                 {"seed", g.seed},
                 {"region", g.region_is_zones ? "zones" : "bbox"},
                 {"party_weights", g.party_weights},
                 {"start", format_timestamp(g.start_unix_s)}};
        if (g.bbox) gen["bbox"] = bbox_json(*g.bbox);
        demand["generate"] = gen;
    }
    j["demand"] = demand;
    json fleet{{"size", cfg.fleet_size}, {"capacity", cfg.capacity}};
    if (cfg.fleet_seed) fleet["seed"] = *cfg.fleet_seed;
    if (cfg.fleet_start_nodes) fleet["start_nodes"] = *cfg.fleet_start_nodes;
    j["fleet"] = fleet;
    json sched = json::array();
    for (const auto& bp : cfg.traffic_schedule) sched.push_back(json::array({bp.start_s, bp.multiplier}));
    j["traffic"] = {{"schedule", sched},
                    {"random_walk",
                     {{"enabled", cfg.random_walk.enabled},
                      {"seed", cfg.random_walk.seed},
                      {"step_s", cfg.random_walk.step_s},
                      {"sigma", cfg.random_walk.sigma}}}};
    j["dispatch"] = {{"strategy", std::string(to_string(cfg.dispatch.strategy))},
                     {"eat", cfg.dispatch.eat_enabled},
                     {"global_fallback", cfg.dispatch.global_fallback_after_component},
                     {"oss_threshold_s", cfg.dispatch.oss_reassign_threshold_s}};
    json strategies = json::array();
    for (Strategy s : cfg.matrix_strategies) strategies.push_back(std::string(to_string(s)));
    j["dispatch"]["strategies"] = strategies;
    j["metrics"] = {{"period_s", cfg.metrics_period_s}};
    j["output"] = path_string(cfg.output_dir);
    return j;
}

std::string config_hash(const RunConfig& cfg) {
    json j = to_json(cfg);
    j.erase("output");
    j["dispatch"].erase("strategies");
    return text::hex64(text::fnv1a64(j.dump()));
}

std::string inputs_fingerprint(const RunConfig& cfg) {
    json j = to_json(cfg);
    j.erase("dispatch");
    j.erase("metrics");
    j.erase("output");
    // Inputs are identified by content so relocated copies still match.
    j["network"]["nodes"] = file_digest(cfg.nodes_file);
    j["network"]["edges"] = file_digest(cfg.edges_file);
    j["zones"] = file_digest(cfg.zones_file);
    if (cfg.trips_file) j["demand"]["trips"] = file_digest(*cfg.trips_file);
    return text::hex64(text::fnv1a64(j.dump()));
}

void apply_seed_override(RunConfig& cfg, std::uint64_t seed) {
    cfg.parse.seed = mix_seed(seed, 1);
    if (cfg.generator) cfg.generator->seed = mix_seed(seed, 2);
    if (!cfg.fleet_start_nodes || cfg.fleet_seed) cfg.fleet_seed = mix_seed(seed, 3);
    cfg.random_walk.seed = mix_seed(seed, 4);
}

Scenario load_scenario(const RunConfig& cfg) {
    RoadNetwork net = load_network(cfg.nodes_file, cfg.edges_file, cfg.speed_limit_mps);
    ZoneMap zones = load_zones(cfg.zones_file);
    if (zones.zones.empty()) throw LoadError(path_string(cfg.zones_file) + ": no zones");

    TripTable demand;
    if (cfg.trips_file) {
        demand = parse_trips(*cfg.trips_file, cfg.parse);
    } else {
        const auto& g = *cfg.generator;
        DemandSpec spec;
        spec.rate_per_hour = g.rate_per_hour;
        spec.duration_s = g.duration_s;
        spec.bbox = g.bbox;
        spec.party_weights = g.party_weights;
        spec.seed = g.seed;
        demand.trips = generate_demand(spec, g.region_is_zones ? &zones.zones : nullptr);
        demand.report.rows_read = demand.trips.size();
        demand.report.rows_kept = demand.trips.size();
        demand.epoch_unix_s = g.start_unix_s;
    }

    Fleet fleet;
    if (cfg.fleet_start_nodes) {
        for (NodeId n : *cfg.fleet_start_nodes)
            if (!net.has_node(n)) throw ConfigError("fleet.start_nodes: unknown node " + std::to_string(n));
        fleet = place_fleet_at(net, *cfg.fleet_start_nodes, cfg.capacity);
    } else {
        fleet = place_fleet(net, cfg.fleet_size, cfg.fleet_seed.value_or(0), cfg.capacity);
    }

    double horizon = demand.trips.empty() ? 0.0 : demand.trips.back().request_time_s;
    horizon += kMaxPatienceS;

    std::vector<std::string> warnings(net.warnings().begin(), net.warnings().end());
    EngineConfig engine{cfg.dispatch, cfg.snap_radius_m, build_traffic(cfg.traffic_schedule, cfg.random_walk, horizon)};
    return Scenario{std::move(net), std::move(zones), std::move(fleet), std::move(demand), std::move(engine),
                    std::move(warnings)};
}

ValidationReport validate(const RunConfig& cfg) {
    ValidationReport rep;
    std::vector<fs::path> files{cfg.nodes_file, cfg.edges_file, cfg.zones_file};
    if (cfg.trips_file) files.push_back(*cfg.trips_file);
    for (const auto& f : files)
        if (!fs::is_regular_file(f)) rep.errors.push_back("missing input file: " + path_string(f));
    if (!rep.ok()) return rep;

    std::optional<Scenario> sc;
    try {
        sc.emplace(load_scenario(cfg));
    } catch (const std::exception& e) {
        rep.errors.push_back(e.what());
        return rep;
    }
    for (const auto& w : sc->warnings) rep.warnings.push_back(path_string(cfg.edges_file) + ": " + w);

    const auto& report = sc->demand.report;
    if (!report.balanced()) rep.errors.push_back("cleaning report does not balance");
    if (report.total_rejected() > 0) {
        std::ostringstream os;
        os << "demand: " << report.total_rejected() << " of " << report.rows_read << " rows rejected ("
           << text::format_fixed(100.0 * static_cast<double>(report.total_rejected()) /
                                     static_cast<double>(std::max<std::size_t>(1, report.rows_read)),
                                 1)
           << "%)";
        for (std::size_t k = 0; k < kRowRejectionCount; ++k)
            if (report.rejected[k] > 0)
                os << ' ' << to_string(static_cast<RowRejection>(k)) << '=' << report.rejected[k];
        rep.warnings.push_back(os.str());
    }
    if (sc->demand.trips.empty()) rep.warnings.push_back("demand: no requests");

    std::size_t outside = 0;
    std::size_t unsnapped = 0;
    for (const auto& t : sc->demand.trips) {
        for (const GeoPoint* p : {&t.pickup, &t.dropoff}) {
            if (!sc->zones.zones.locate(*p)) ++outside;
            if (!sc->network.index().nearest(*p, cfg.snap_radius_m)) ++unsnapped;
        }
    }
    if (outside > 0)
        rep.warnings.push_back("zones: " + std::to_string(outside) +
                               " demand points lie outside every zone and use the nearest zone centroid");
    if (unsnapped > 0)
        rep.warnings.push_back("network: " + std::to_string(unsnapped) + " demand points have no road node within " +
                               text::format_double(cfg.snap_radius_m) + " m");
    if (sc->fleet.size() == 0) rep.warnings.push_back("fleet: no vehicles");
    return rep;
}

std::string system_name(Strategy s, bool eat) {
    return std::string(to_string(s)) + (eat ? "-EAT" : "");
}

RunArtifacts execute_run(const RunConfig& cfg, const fs::path& out_dir) {
    Scenario sc = load_scenario(cfg);
    const std::string hash = config_hash(cfg);
    const std::string fingerprint = inputs_fingerprint(cfg);

    fs::create_directories(out_dir);
    fs::remove(out_dir / "metadata.txt");

    AdjacencySchedule initial = sc.zones.schedule;
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result = run(sc.engine, sc.network, sc.zones.zones, initial, std::move(sc.fleet), sc.demand.trips);
    const double wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::int64_t epoch = sc.demand.epoch_unix_s;

    write_with(out_dir / "calls.csv", [&](std::ostream& os) { write_call_records(os, result.records); });
    write_with(out_dir / "events.log", [&](std::ostream& os) {
        for (const auto& line : result.event_log) os << line << '\n';
    });
    write_with(out_dir / "summary.csv", [&](std::ostream& os) {
        write_summary(os, aggregate(result.records, Bucket::WholeRun, epoch), epoch);
    });
    write_with(out_dir / "summary_daily.csv", [&](std::ostream& os) {
        write_summary(os, aggregate(result.records, Bucket::Daily, epoch), epoch);
    });
    write_with(out_dir / "summary_monthly.csv", [&](std::ostream& os) {
        write_summary(os, aggregate(result.records, Bucket::Monthly, epoch), epoch);
    });
    write_with(out_dir / "periodic.csv", [&](std::ostream& os) {
        double last = 0.0;
        for (const auto& r : result.records) last = std::max(last, r.request_time_s);
        const double horizon = (std::floor(last / cfg.metrics_period_s) + 1.0) * cfg.metrics_period_s;
        periodic_log(os, result.records, cfg.metrics_period_s, horizon, epoch);
    });
    write_with(out_dir / "adjacency_initial.txt", [&](std::ostream& os) { sc.zones.schedule.write(os); });
    write_with(out_dir / "adjacency_final.txt", [&](std::ostream& os) { result.final_schedule.write(os); });
    write_with(out_dir / "cleaning_report.txt", [&](std::ostream& os) { sc.demand.report.write(os); });
    write_with(out_dir / "timing.txt", [&](std::ostream& os) { os << "wall_time_s: " << text::format_fixed(wall_s, 3) << '\n'; });

    // Written last: its presence marks the directory as complete.
    write_with(out_dir / "metadata.txt", [&](std::ostream& os) {
        const auto& st = result.stats;
        os << "status: complete\n"
           << "system: " << system_name(cfg.dispatch.strategy, cfg.dispatch.eat_enabled) << '\n'
           << "strategy: " << to_string(cfg.dispatch.strategy) << '\n'
           << "eat: " << (cfg.dispatch.eat_enabled ? 1 : 0) << '\n'
           << "config_hash: " << hash << '\n'
           << "inputs_fingerprint: " << fingerprint << '\n'
           << "epoch_unix_s: " << epoch << '\n'
           << "epoch: " << format_timestamp(epoch) << '\n'
           << "vehicles: " << cfg.fleet_size << '\n'
           << "requests: " << st.requests << '\n'
           << "picked_up: " << st.picked_up << '\n'
           << "rejected: " << st.rejected << '\n'
           << "abandoned: " << st.abandoned << '\n'
           << "reassignments: " << st.reassignments << '\n'
           << "adjacency_links_added: " << st.adjacency_links_added << '\n'
           << "zone_fallbacks: " << st.zone_fallbacks << '\n'
           << "events_processed: " << st.events_processed << '\n'
           << "last_event_time_s: " << text::format_double(st.last_event_time_s) << '\n';
        for (const auto& w : sc.warnings) os << "warning: " << w << '\n';
        os << "config: " << to_json(cfg).dump() << '\n';
    });

    return RunArtifacts{std::move(result), epoch, out_dir};
}

ReplayReport replay_check(const RunConfig& cfg, const std::vector<std::string>& recorded_log) {
    Scenario sc = load_scenario(cfg);
    RunResult result = run(sc.engine, sc.network, sc.zones.zones, sc.zones.schedule, std::move(sc.fleet),
                           sc.demand.trips);
    return compare_event_logs(recorded_log, result.event_log);
}

std::vector<std::string> read_lines(const fs::path& file) {
    std::vector<std::string> lines;
    std::istringstream in(text::read_file(file));
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

RunDirectory read_run_directory(const fs::path& dir) {
    auto kv = read_metadata(dir);
    if (kv["status"] != "complete") throw LoadError(path_string(dir) + ": not a completed run directory");
    RunDirectory rd;
    rd.system = kv["system"];
    rd.eat = kv["eat"] == "1";
    rd.fingerprint = kv["inputs_fingerprint"];
    rd.config_hash = kv["config_hash"];
    long long epoch = 0;
    if (!text::parse_int(kv["epoch_unix_s"], epoch)) throw LoadError(path_string(dir / "metadata.txt") + ": bad epoch");
    rd.epoch_unix_s = epoch;
    std::ifstream in(dir / "calls.csv");
    if (!in) throw LoadError(path_string(dir / "calls.csv") + ": cannot open");
    rd.records = read_call_records(in);
    return rd;
}

namespace {

struct Paired {
    std::string label;
    MetricsSummary with;
    MetricsSummary without;
};

std::string month_label(std::int64_t epoch, double start_s) {
    return format_timestamp(epoch + static_cast<std::int64_t>(start_s)).substr(0, 7);
}

std::vector<Paired> paired_monthly(const RunDirectory& with, const RunDirectory& without) {
    std::map<std::int64_t, Paired> rows;
    auto key = [](const MetricsSummary& s) { return static_cast<std::int64_t>(s.window_start_s); };
    for (const auto& s : aggregate(with.records, Bucket::Monthly, with.epoch_unix_s)) {
        auto& p = rows[key(s)];
        p.label = month_label(with.epoch_unix_s, s.window_start_s);
        p.with = s;
    }
    for (const auto& s : aggregate(without.records, Bucket::Monthly, without.epoch_unix_s)) {
        auto& p = rows[key(s)];
        p.label = month_label(without.epoch_unix_s, s.window_start_s);
        p.without = s;
    }
    std::vector<Paired> out;
    for (auto& [k, p] : rows) out.push_back(std::move(p));
    Paired all{"all", summarize(with.records, 0.0, 0.0), summarize(without.records, 0.0, 0.0)};
    out.push_back(all);
    return out;
}

std::string rate_pct(std::optional<double> r) {
    return r ? text::format_fixed(*r * 100.0, 2) : std::string("NA");
}

}  // namespace

std::string compare_runs(const fs::path& dir_a, const fs::path& dir_b) {
    RunDirectory a = read_run_directory(dir_a);
    RunDirectory b = read_run_directory(dir_b);
    if (a.fingerprint != b.fingerprint)
        throw ComparisonMismatch("runs do not share demand, fleet and traffic inputs: " + path_string(dir_a) + " (" +
                                 a.fingerprint + ") vs " + path_string(dir_b) + " (" + b.fingerprint + ")");
    const bool swap = !a.eat && b.eat;
    const RunDirectory& with = swap ? b : a;
    const RunDirectory& without = swap ? a : b;

    std::ostringstream os;
    os << "# with: " << with.system << "  without: " << without.system << '\n';
    os << "window,with_calls,with_t_apw_min,with_r_ts_pct,without_calls,without_t_apw_min,without_r_ts_pct,"
          "time_improvement_pct,rate_improvement_pct\n";
    for (const auto& p : paired_monthly(with, without)) {
        ImprovementReport imp = improvement(p.with, p.without);
        os << p.label << ',' << p.with.n_calls << ',' << format_minutes(p.with.t_apw_s()) << ','
           << rate_pct(p.with.r_ts()) << ',' << p.without.n_calls << ',' << format_minutes(p.without.t_apw_s()) << ','
           << rate_pct(p.without.r_ts()) << ',' << format_percent(imp.time_improvement_pct) << ','
           << format_percent(imp.rate_improvement_pct) << '\n';
    }
    return os.str();
}

bool MatrixResult::all_ok() const noexcept {
    return std::all_of(cells.begin(), cells.end(), [](const MatrixCell& c) { return !c.error; });
}

namespace {

void write_matrix_report(std::ostream& os, const std::vector<Strategy>& strategies,
                         const std::map<std::string, RunDirectory>& runs, const std::vector<MatrixCell>& cells) {
    std::set<std::string> labels_seen;
    std::vector<std::string> labels;
    std::map<std::string, std::map<std::string, MetricsSummary>> table;  // label -> system -> summary
    for (const auto& [name, rd] : runs) {
        for (const auto& s : aggregate(rd.records, Bucket::Monthly, rd.epoch_unix_s)) {
            std::string label = month_label(rd.epoch_unix_s, s.window_start_s);
            table[label][name] = s;
            labels_seen.insert(label);
        }
        table["all"][name] = summarize(rd.records, 0.0, 0.0);
    }
    labels.assign(labels_seen.begin(), labels_seen.end());
    labels.push_back("all");

    std::vector<std::string> systems;
    for (Strategy s : strategies)
        for (bool eat : {false, true}) systems.push_back(system_name(s, eat));

    auto cell = [&](const std::string& label, const std::string& sys) -> const MetricsSummary* {
        auto it = table.find(label);
        if (it == table.end()) return nullptr;
        auto jt = it->second.find(sys);
        return jt == it->second.end() ? nullptr : &jt->second;
    };

    os << "Average passenger waiting time (min)\n";
    os << "window";
    for (const auto& s : systems) os << ',' << s;
    os << '\n';
    for (const auto& l : labels) {
        os << l;
        for (const auto& s : systems) {
            const auto* m = cell(l, s);
            os << ',' << (m ? format_minutes(m->t_apw_s()) : std::string("NA"));
        }
        os << '\n';
    }

    os << "\nTrip success rate (%)\n";
    os << "window";
    for (const auto& s : systems) os << ',' << s;
    os << '\n';
    for (const auto& l : labels) {
        os << l;
        for (const auto& s : systems) {
            const auto* m = cell(l, s);
            os << ',' << (m ? rate_pct(m->r_ts()) : std::string("NA"));
        }
        os << '\n';
    }

    os << "\nImprovement with EAT (%)\n";
    os << "window";
    for (Strategy s : strategies) os << ',' << to_string(s) << " time," << to_string(s) << " rate";
    os << '\n';
    for (const auto& l : labels) {
        os << l;
        for (Strategy s : strategies) {
            const auto* w = cell(l, system_name(s, true));
            const auto* wo = cell(l, system_name(s, false));
            if (w && wo) {
                ImprovementReport imp = improvement(*w, *wo);
                os << ',' << format_percent(imp.time_improvement_pct) << ',' << format_percent(imp.rate_improvement_pct);
            } else {
                os << ",NA,NA";
            }
        }
        os << '\n';
    }

    os << "\nCells\n";
    for (const auto& c : cells) {
        os << c.system << ": ";
        if (c.error) os << "FAILED: " << *c.error;
        else os << (c.reused ? "reused" : "ran");
        os << '\n';
    }
}

}  // namespace

MatrixResult run_matrix(const RunConfig& cfg, const std::vector<Strategy>& strategies, const fs::path& out_dir) {
    if (strategies.empty()) throw ConfigError("matrix needs at least one strategy");
    fs::create_directories(out_dir);
    MatrixResult result;
    std::map<std::string, RunDirectory> runs;
    for (Strategy s : strategies) {
        for (bool eat : {false, true}) {
            RunConfig cell_cfg = cfg;
            cell_cfg.dispatch.strategy = s;
            cell_cfg.dispatch.eat_enabled = eat;
            MatrixCell cell{system_name(s, eat), out_dir / system_name(s, eat), false, std::nullopt};
            try {
                auto kv = read_metadata(cell.directory);
                if (kv["status"] == "complete" && kv["config_hash"] == config_hash(cell_cfg)) {
                    cell.reused = true;
                } else {
                    execute_run(cell_cfg, cell.directory);
                }
                runs.emplace(cell.system, read_run_directory(cell.directory));
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
            result.cells.push_back(std::move(cell));
        }
    }

    result.report = out_dir / "report.txt";
    write_with(result.report, [&](std::ostream& os) { write_matrix_report(os, strategies, runs, result.cells); });

    result.daily_series = out_dir / "daily_series.csv";
    write_with(result.daily_series, [&](std::ostream& os) {
        os << "date,system,n_calls,n_success,t_apw_min,r_ts_pct\n";
        for (const auto& c : result.cells) {
            auto it = runs.find(c.system);
            if (it == runs.end()) continue;
            const auto& rd = it->second;
            for (const auto& d : aggregate(rd.records, Bucket::Daily, rd.epoch_unix_s)) {
                os << format_timestamp(rd.epoch_unix_s + static_cast<std::int64_t>(d.window_start_s)).substr(0, 10)
                   << ',' << c.system << ',' << d.n_calls << ',' << d.n_success << ',' << format_minutes(d.t_apw_s())
                   << ',' << rate_pct(d.r_ts()) << '\n';
            }
        }
    });
    return result;
}

}  // namespace amod::app
