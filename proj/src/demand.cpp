#include "amod/demand.hpp"

#include "amod/error.hpp"
#include "amod/text.hpp"
#include "amod/zones.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

namespace amod {
namespace {

std::string normalize_header(std::string_view s) {
    std::string out(text::trim(s));
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool parse_fixed_int(std::string_view s, int& out) {
    if (s.empty()) return false;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace

GeoBox nyc_bounding_box() noexcept { return GeoBox{40.45, 41.00, -74.30, -73.65}; }

std::string_view to_string(RowRejection r) noexcept {
    switch (r) {
        case RowRejection::BadCoordinates: return "bad-coordinates";
        case RowRejection::NonPositiveDuration: return "non-positive-duration";
        case RowRejection::OversizeParty: return "oversize-party";
        case RowRejection::Unparseable: return "unparseable";
        case RowRejection::OutOfBounds: return "out-of-bounds";
    }
    return "unknown";
}

std::size_t CleaningReport::total_rejected() const noexcept {
    return std::accumulate(rejected.begin(), rejected.end(), std::size_t{0});
}

void CleaningReport::write(std::ostream& out) const {
    out << "rows_read: " << rows_read << '\n' << "rows_kept: " << rows_kept << '\n';
    for (std::size_t i = 0; i < kRowRejectionCount; ++i) {
        out << "rejected." << to_string(static_cast<RowRejection>(i)) << ": " << rejected[i] << '\n';
    }
}

std::optional<std::int64_t> parse_timestamp(std::string_view s) {
    s = text::trim(s);
    // YYYY-MM-DD HH:MM:SS
    if (s.size() != 19 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T') || s[13] != ':' ||
        s[16] != ':') {
        return std::nullopt;
    }
    int y, mo, d, h, mi, se;
    if (!parse_fixed_int(s.substr(0, 4), y) || !parse_fixed_int(s.substr(5, 2), mo) ||
        !parse_fixed_int(s.substr(8, 2), d) || !parse_fixed_int(s.substr(11, 2), h) ||
        !parse_fixed_int(s.substr(14, 2), mi) || !parse_fixed_int(s.substr(17, 2), se)) {
        return std::nullopt;
    }
    using namespace std::chrono;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || se > 59) return std::nullopt;
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + se;
}

std::string format_timestamp(std::int64_t unix_s) {
    using namespace std::chrono;
    const std::int64_t day = unix_s >= 0 ? unix_s / 86400 : (unix_s - 86399) / 86400;
    const std::int64_t sod = unix_s - day * 86400;
    const year_month_day ymd{sys_days{days{day}}};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u %02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(sod / 3600), static_cast<int>(sod / 60 % 60), static_cast<int>(sod % 60));
    return buf;
}

double sample_patience(Rng& rng) { return uniform(rng, kMinPatienceS, kMaxPatienceS); }

TripTable parse_trips(std::istream& csv, const ParseOptions& options) {
    std::string line;
    if (!std::getline(csv, line)) throw LoadError("trip file is empty (missing header)");

    std::map<std::string, std::string> aliases;
    for (const auto& [from, to] : options.column_aliases) aliases[normalize_header(from)] = normalize_header(to);

    const auto header = text::split_csv(line);
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header.size(); ++i) {
        std::string name = normalize_header(header[i]);
        if (auto it = aliases.find(name); it != aliases.end()) name = it->second;
        column.emplace(name, i);
    }
    std::array<std::size_t, kTripColumns.size()> idx{};
    for (std::size_t k = 0; k < kTripColumns.size(); ++k) {
        auto it = column.find(std::string(kTripColumns[k]));
        if (it == column.end()) throw LoadError("trip header is missing column '" + std::string(kTripColumns[k]) + "'");
        idx[k] = it->second;
    }
    std::optional<std::size_t> patience_col;
    if (auto it = column.find("patience"); it != column.end()) patience_col = it->second;

    struct Kept {
        TripRequest trip;
        std::int64_t pickup_unix;
    };
    std::vector<Kept> kept;
    TripTable out;
    CleaningReport& rep = out.report;
    Rng rng(options.seed);
    auto reject = [&](RowRejection r) { ++rep.rejected[static_cast<std::size_t>(r)]; };

    RequestId next_id = 0;
    while (std::getline(csv, line)) {
        if (text::trim(line).empty()) continue;
        ++rep.rows_read;
        const RequestId id = next_id++;
        const auto f = text::split_csv(line);
        auto field = [&](std::size_t k) -> std::string_view {
            return idx[k] < f.size() ? std::string_view(f[idx[k]]) : std::string_view{};
        };
        const bool short_row = f.size() < header.size();
        auto t_pick = parse_timestamp(field(1));
        auto t_drop = parse_timestamp(field(2));
        long long party = 0;
        GeoPoint pu, dof;
        double patience = 0.0;
        bool patience_given = false;
        bool ok = !short_row && t_pick && t_drop && text::parse_int(field(3), party) &&
                  text::parse_double(field(4), pu.lon) && text::parse_double(field(5), pu.lat) &&
                  text::parse_double(field(6), dof.lon) && text::parse_double(field(7), dof.lat);
        // A party of zero or fewer passengers is a corrupt count, not an oversize one.
        ok = ok && party >= 1;
        if (ok && patience_col && *patience_col < f.size() && !text::trim(f[*patience_col]).empty()) {
            patience_given = text::parse_double(f[*patience_col], patience);
            ok = patience_given && patience >= kMinPatienceS && patience <= kMaxPatienceS;
        }
        if (!ok) {
            reject(RowRejection::Unparseable);
            continue;
        }
        const bool zero_pu = pu.lat == 0.0 && pu.lon == 0.0;
        const bool zero_do = dof.lat == 0.0 && dof.lon == 0.0;
        if (zero_pu || zero_do || !pu.in_range() || !dof.in_range()) {
            reject(RowRejection::BadCoordinates);
            continue;
        }
        if (!options.bbox.contains(pu) || !options.bbox.contains(dof)) {
            reject(RowRejection::OutOfBounds);
            continue;
        }
        if (*t_drop <= *t_pick) {
            reject(RowRejection::NonPositiveDuration);
            continue;
        }
        if (party > options.capacity) {
            reject(RowRejection::OversizeParty);
            continue;
        }
        TripRequest t;
        t.id = id;
        t.medallion = std::string(text::trim(field(0)));
        t.pickup = pu;
        t.dropoff = dof;
        t.party_size = static_cast<int>(party);
        t.patience_s = patience_given ? patience : sample_patience(rng);
        kept.push_back({std::move(t), *t_pick});
        ++rep.rows_kept;
    }

    if (!kept.empty()) {
        out.epoch_unix_s = std::min_element(kept.begin(), kept.end(), [](const Kept& a, const Kept& b) {
                               return a.pickup_unix < b.pickup_unix;
                           })->pickup_unix;
    }
    out.trips.reserve(kept.size());
    for (auto& k : kept) {
        k.trip.request_time_s = static_cast<double>(k.pickup_unix - out.epoch_unix_s);
        out.trips.push_back(std::move(k.trip));
    }
    std::stable_sort(out.trips.begin(), out.trips.end(), [](const TripRequest& a, const TripRequest& b) {
        return a.request_time_s != b.request_time_s ? a.request_time_s < b.request_time_s : a.id < b.id;
    });
    return out;
}

TripTable parse_trips(const std::filesystem::path& csv_file, const ParseOptions& options) {
    std::ifstream in(csv_file);
    if (!in) throw LoadError("cannot open " + csv_file.string());
    try {
        return parse_trips(in, options);
    } catch (const LoadError& e) {
        throw LoadError(csv_file.string() + ": " + e.what());
    }
}

std::vector<TripRequest> generate_demand(const DemandSpec& spec, const ZoneSet* zones) {
    if (!(spec.rate_per_hour >= 0.0) || !std::isfinite(spec.rate_per_hour)) {
        throw GenerationError("demand rate must be non-negative");
    }
    if (!(spec.duration_s > 0.0) || !std::isfinite(spec.duration_s)) {
        throw GenerationError("demand duration must be positive");
    }
    const bool use_zones = zones != nullptr && !zones->empty();
    GeoBox region{};
    if (use_zones) {
        region = zones->zones().front().box;
        for (const Zone& z : zones->zones()) {
            region.lat_min = std::min(region.lat_min, z.box.lat_min);
            region.lat_max = std::max(region.lat_max, z.box.lat_max);
            region.lon_min = std::min(region.lon_min, z.box.lon_min);
            region.lon_max = std::max(region.lon_max, z.box.lon_max);
        }
    } else if (spec.bbox) {
        region = *spec.bbox;
    } else {
        throw GenerationError("demand region is empty: no zones and no bounding box");
    }
    if (!(region.lat_max > region.lat_min) || !(region.lon_max > region.lon_min)) {
        throw GenerationError("demand region has zero area");
    }
    if (spec.party_weights.empty() ||
        std::any_of(spec.party_weights.begin(), spec.party_weights.end(), [](double w) { return !(w >= 0.0); }) ||
        std::accumulate(spec.party_weights.begin(), spec.party_weights.end(), 0.0) <= 0.0) {
        throw GenerationError("party weights must be non-negative with a positive sum");
    }

    std::vector<TripRequest> out;
    if (spec.rate_per_hour == 0.0) return out;

    Rng rng(spec.seed);
    const double rate_per_s = spec.rate_per_hour / 3600.0;
    const double weight_sum = std::accumulate(spec.party_weights.begin(), spec.party_weights.end(), 0.0);

    auto sample_point = [&]() {
        constexpr int kMaxAttempts = 100000;
        for (int i = 0; i < kMaxAttempts; ++i) {
            GeoPoint p{uniform(rng, region.lat_min, region.lat_max), uniform(rng, region.lon_min, region.lon_max)};
            if (!use_zones || zones->locate(p)) return p;
        }
        throw GenerationError("could not sample a point inside the demand region");
    };
    auto sample_party = [&]() {
        double u = uniform01(rng) * weight_sum;
        for (std::size_t k = 0; k < spec.party_weights.size(); ++k) {
            if (u < spec.party_weights[k]) return static_cast<int>(k + 1);
            u -= spec.party_weights[k];
        }
        return static_cast<int>(spec.party_weights.size());
    };

    double t = 0.0;
    while (true) {
        t += exponential(rng, rate_per_s);
        if (t >= spec.duration_s) break;
        TripRequest r;
        r.id = static_cast<RequestId>(out.size());
        r.medallion = "SYN" + std::to_string(r.id);
        r.request_time_s = t;
        r.pickup = sample_point();
        r.dropoff = sample_point();
        r.party_size = sample_party();
        r.patience_s = sample_patience(rng);
        out.push_back(std::move(r));
    }
    return out;
}

void write_trips_csv(std::ostream& out, const std::vector<TripRequest>& trips, std::int64_t epoch_unix_s) {
    out << "medallion,pickup time,dropoff time,passenger count,pickup log,pickup lat,dropoff log,dropoff lat,patience\n";
    for (const auto& t : trips) {
        const auto pick = epoch_unix_s + static_cast<std::int64_t>(std::floor(t.request_time_s));
        // Nominal dropoff stamp; simulated trip times come from routing.
        const auto drop = pick + 1 + static_cast<std::int64_t>(haversine_m(t.pickup, t.dropoff) / 11.176);
        out << t.medallion << ',' << format_timestamp(pick) << ',' << format_timestamp(drop) << ','
            << t.party_size << ',' << text::format_double(t.pickup.lon) << ',' << text::format_double(t.pickup.lat)
            << ',' << text::format_double(t.dropoff.lon) << ',' << text::format_double(t.dropoff.lat) << ','
            << text::format_double(t.patience_s) << '\n';
    }
}

}  // namespace amod
