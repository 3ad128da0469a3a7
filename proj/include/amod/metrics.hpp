// Passenger-experience metrics: average waiting time over served calls and
// trip success rate, improvement percentages between paired systems, and
// bucketed / periodic aggregation.
#pragma once

#include "amod/engine.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace amod {

struct MetricsSummary {
    double window_start_s = 0.0;  // relative to the simulation epoch
    double window_end_s = 0.0;
    std::size_t n_calls = 0;
    std::size_t n_success = 0;
    /// Sum of waits over picked-up calls, in whole microseconds so bucket
    /// sums add up exactly.
    std::int64_t total_wait_us = 0;

    /// Mean wait in seconds over picked-up calls; nullopt when none.
    std::optional<double> t_apw_s() const noexcept;
    /// n_success / n_calls; nullopt when there are no calls.
    std::optional<double> r_ts() const noexcept;
};

/// Mean (pickup - request) over PickedUp records. Rejected and abandoned
/// calls are excluded; nullopt when no record was picked up.
std::optional<double> t_apw(std::span<const CallRecord> records);

/// Fraction of records that were picked up; nullopt for an empty span.
std::optional<double> r_ts(std::span<const CallRecord> records);

MetricsSummary summarize(std::span<const CallRecord> records, double window_start_s, double window_end_s);

/// (T_without / T_with - 1) × 100. nullopt when T_with is zero or missing.
std::optional<double> time_improvement_pct(std::optional<double> t_with, std::optional<double> t_without);
/// (R_with / R_without - 1) × 100. nullopt when R_without is zero or missing.
std::optional<double> rate_improvement_pct(std::optional<double> r_with, std::optional<double> r_without);

struct ImprovementReport {
    MetricsSummary with_eat;
    MetricsSummary without_eat;
    std::optional<double> time_improvement_pct;
    std::optional<double> rate_improvement_pct;
};

ImprovementReport improvement(const MetricsSummary& with_eat, const MetricsSummary& without_eat);

enum class Bucket : std::uint8_t { Daily, Monthly, WholeRun };

/// Groups records by request time. Daily and monthly boundaries fall on civil
/// midnights, located through `epoch_unix_s` (the civil time of simulation
/// second 0). Only non-empty buckets are returned, in time order.
std::vector<MetricsSummary> aggregate(std::span<const CallRecord> records, Bucket bucket, std::int64_t epoch_unix_s);

/// `window_start,window_end,n_calls,n_success,r_ts,t_apw_min`; windows as
/// civil timestamps, missing values as NA.
void write_summary(std::ostream& out, std::span<const MetricsSummary> rows, std::int64_t epoch_unix_s);

/// One summary row per `period_s` slice of [0, horizon_s), by request time;
/// the last slice may be partial. An empty record span writes the header
/// only. Throws std::invalid_argument for a non-positive period and
/// std::runtime_error when the stream fails.
void periodic_log(std::ostream& out, std::span<const CallRecord> records, double period_s, double horizon_s,
                  std::int64_t epoch_unix_s);

/// Minutes rounded to two decimals, or NA.
std::string format_minutes(std::optional<double> seconds);
/// Percent with two decimals, or NA.
std::string format_percent(std::optional<double> pct);

}  // namespace amod
