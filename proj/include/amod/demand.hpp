// Trip demand: ingestion and cleaning of taxi trip records, patience
// assignment, and a seeded Poisson generator for synthetic cities.
#pragma once

#include "amod/geo.hpp"
#include "amod/random.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace amod {

class ZoneSet;

using RequestId = std::uint32_t;

inline constexpr double kMinPatienceS = 60.0;
inline constexpr double kMaxPatienceS = 3600.0;
inline constexpr int kDefaultCapacity = 4;

struct TripRequest {
    RequestId id = 0;
    std::string medallion;
    double request_time_s = 0.0;
    GeoPoint pickup;
    GeoPoint dropoff;
    int party_size = 1;
    double patience_s = kMinPatienceS;

    friend bool operator==(const TripRequest&, const TripRequest&) = default;
};

/// lon ∈ [-74.30, -73.65], lat ∈ [40.45, 41.00].
GeoBox nyc_bounding_box() noexcept;

enum class RowRejection : std::uint8_t {
    BadCoordinates,
    NonPositiveDuration,
    OversizeParty,
    Unparseable,
    OutOfBounds,
};
inline constexpr std::size_t kRowRejectionCount = 5;

std::string_view to_string(RowRejection r) noexcept;

struct CleaningReport {
    std::size_t rows_read = 0;
    std::size_t rows_kept = 0;
    std::array<std::size_t, kRowRejectionCount> rejected{};

    std::size_t count(RowRejection r) const noexcept { return rejected[static_cast<std::size_t>(r)]; }
    std::size_t total_rejected() const noexcept;
    bool balanced() const noexcept { return rows_read == rows_kept + total_rejected(); }

    /// `key: value` lines.
    void write(std::ostream& out) const;
};

struct ParseOptions {
    GeoBox bbox = nyc_bounding_box();
    int capacity = kDefaultCapacity;
    std::uint64_t seed = 0;
    /// Maps a header spelling found in the file to one of the canonical
    /// column names (`medallion`, `pickup time`, ...).
    std::map<std::string, std::string> column_aliases;
};

struct TripTable {
    std::vector<TripRequest> trips;  // sorted by (request_time_s, id)
    CleaningReport report;
    /// Civil seconds since 1970-01-01 of request time 0 (earliest kept row).
    std::int64_t epoch_unix_s = 0;
};

/// Canonical header columns, in file order.
inline constexpr std::array<std::string_view, 8> kTripColumns = {
    "medallion", "pickup time", "dropoff time", "passenger count",
    "pickup log", "pickup lat", "dropoff log", "dropoff lat"};

/// Reads trip rows. Request time is the pickup timestamp; the dropoff
/// timestamp is only used for the duration sanity check. Each kept row gets
/// a patience drawn uniformly from [60, 3600] s unless an optional `patience`
/// column supplies it. Ids follow data-row order. Throws LoadError for a
/// missing header column; bad rows are counted, never fatal.
TripTable parse_trips(std::istream& csv, const ParseOptions& options);
TripTable parse_trips(const std::filesystem::path& csv_file, const ParseOptions& options);

/// `YYYY-MM-DD HH:MM:SS` to civil seconds since 1970-01-01.
std::optional<std::int64_t> parse_timestamp(std::string_view s);
std::string format_timestamp(std::int64_t unix_s);

double sample_patience(Rng& rng);

struct DemandSpec {
    double rate_per_hour = 0.0;
    double duration_s = 0.0;
    /// Region used when `zones` is null or empty.
    std::optional<GeoBox> bbox;
    /// Party-size weights; entry k is the weight of party size k+1.
    std::vector<double> party_weights{1.0};
    std::uint64_t seed = 0;
};

/// Poisson arrivals with pickup and dropoff uniform over the region (the
/// union of `zones` when given, else `spec.bbox`). Throws GenerationError for
/// a negative rate, a non-positive duration or an empty region.
std::vector<TripRequest> generate_demand(const DemandSpec& spec, const ZoneSet* zones = nullptr);

void write_trips_csv(std::ostream& out, const std::vector<TripRequest>& trips, std::int64_t epoch_unix_s);

}  // namespace amod
