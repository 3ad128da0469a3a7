#include "amod/metrics.hpp"

#include "amod/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace amod {
namespace {

std::int64_t wait_us(const CallRecord& r) { return std::llround(r.wait_s() * 1e6); }

std::int64_t floor_div(std::int64_t a, std::int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

void add(MetricsSummary& s, const CallRecord& r) {
    ++s.n_calls;
    if (r.outcome == CallOutcome::PickedUp) {
        ++s.n_success;
        s.total_wait_us += wait_us(r);
    }
}

}  // namespace

std::optional<double> MetricsSummary::t_apw_s() const noexcept {
    if (n_success == 0) return std::nullopt;
    return static_cast<double>(total_wait_us) / 1e6 / static_cast<double>(n_success);
}

std::optional<double> MetricsSummary::r_ts() const noexcept {
    if (n_calls == 0) return std::nullopt;
    return static_cast<double>(n_success) / static_cast<double>(n_calls);
}

std::optional<double> t_apw(std::span<const CallRecord> records) { return summarize(records, 0, 0).t_apw_s(); }

std::optional<double> r_ts(std::span<const CallRecord> records) { return summarize(records, 0, 0).r_ts(); }

MetricsSummary summarize(std::span<const CallRecord> records, double window_start_s, double window_end_s) {
    MetricsSummary s;
    s.window_start_s = window_start_s;
    s.window_end_s = window_end_s;
    for (const auto& r : records) add(s, r);
    return s;
}

std::optional<double> time_improvement_pct(std::optional<double> t_with, std::optional<double> t_without) {
    if (!t_with || !t_without || *t_with == 0.0) return std::nullopt;
    return (*t_without / *t_with - 1.0) * 100.0;
}

std::optional<double> rate_improvement_pct(std::optional<double> r_with, std::optional<double> r_without) {
    if (!r_with || !r_without || *r_without == 0.0) return std::nullopt;
    return (*r_with / *r_without - 1.0) * 100.0;
}

ImprovementReport improvement(const MetricsSummary& with_eat, const MetricsSummary& without_eat) {
    ImprovementReport rep;
    rep.with_eat = with_eat;
    rep.without_eat = without_eat;
    rep.time_improvement_pct = time_improvement_pct(with_eat.t_apw_s(), without_eat.t_apw_s());
    rep.rate_improvement_pct = rate_improvement_pct(with_eat.r_ts(), without_eat.r_ts());
    return rep;
}

std::vector<MetricsSummary> aggregate(std::span<const CallRecord> records, Bucket bucket, std::int64_t epoch_unix_s) {
    std::vector<MetricsSummary> out;
    if (records.empty()) return out;
    if (bucket == Bucket::WholeRun) {
        double lo = records.front().request_time_s, hi = lo;
        for (const auto& r : records) {
            lo = std::min(lo, r.request_time_s);
            hi = std::max(hi, r.request_time_s);
        }
        out.push_back(summarize(records, lo, hi));
        return out;
    }

    using namespace std::chrono;
    // Bucket key: civil day number, or the day number of the month's first day.
    std::map<std::int64_t, MetricsSummary> buckets;
    for (const auto& r : records) {
        const auto abs_s = epoch_unix_s + static_cast<std::int64_t>(std::floor(r.request_time_s));
        std::int64_t day = floor_div(abs_s, 86400);
        std::int64_t end_day = day + 1;
        if (bucket == Bucket::Monthly) {
            const year_month_day ymd{sys_days{days{day}}};
            const auto first = sys_days{ymd.year() / ymd.month() / 1};
            const auto next = sys_days{(ymd.year() / ymd.month() + months{1}) / 1};
            day = first.time_since_epoch().count();
            end_day = next.time_since_epoch().count();
        }
        auto [it, fresh] = buckets.try_emplace(day);
        if (fresh) {
            it->second.window_start_s = static_cast<double>(day * 86400 - epoch_unix_s);
            it->second.window_end_s = static_cast<double>(end_day * 86400 - epoch_unix_s);
        }
        add(it->second, r);
    }
    for (auto& [_, s] : buckets) out.push_back(s);
    return out;
}

std::string format_minutes(std::optional<double> seconds) {
    return seconds ? text::format_fixed(*seconds / 60.0, 2) : "NA";
}

std::string format_percent(std::optional<double> pct) { return pct ? text::format_fixed(*pct, 2) : "NA"; }

void write_summary(std::ostream& out, std::span<const MetricsSummary> rows, std::int64_t epoch_unix_s) {
    auto stamp = [&](double rel) {
        return format_timestamp(epoch_unix_s + static_cast<std::int64_t>(std::floor(rel)));
    };
    out << "window_start,window_end,n_calls,n_success,r_ts,t_apw_min\n";
    for (const auto& s : rows) {
        const auto r = s.r_ts();
        out << stamp(s.window_start_s) << ',' << stamp(s.window_end_s) << ',' << s.n_calls << ',' << s.n_success
            << ',' << (r ? text::format_fixed(*r, 4) : "NA") << ',' << format_minutes(s.t_apw_s()) << '\n';
    }
}

void periodic_log(std::ostream& out, std::span<const CallRecord> records, double period_s, double horizon_s,
                  std::int64_t epoch_unix_s) {
    if (!(period_s > 0.0) || !std::isfinite(period_s)) throw std::invalid_argument("period must be positive");
    std::vector<MetricsSummary> rows;
    if (!records.empty()) {
        double end = horizon_s;
        for (const auto& r : records) end = std::max(end, r.request_time_s);
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(end / period_s)));
        rows.resize(n);
        for (std::size_t k = 0; k < n; ++k) {
            rows[k].window_start_s = static_cast<double>(k) * period_s;
            rows[k].window_end_s = std::min(static_cast<double>(k + 1) * period_s, std::max(end, period_s * k));
        }
        if (rows.back().window_end_s <= rows.back().window_start_s) rows.back().window_end_s = end;
        for (const auto& r : records) {
            auto k = static_cast<std::size_t>(std::max(0.0, std::floor(r.request_time_s / period_s)));
            add(rows[std::min(k, n - 1)], r);
        }
    }
    write_summary(out, rows, epoch_unix_s);
    if (!out) throw std::runtime_error("periodic log sink is not writable");
}

}  // namespace amod
