#pragma once

#include <chrono>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spillover/calendar.hpp"
#include "spillover/timezone.hpp"

namespace spillover {

using Instant = std::chrono::sys_time<std::chrono::milliseconds>;

Instant parse_rfc3339(std::string_view text);
/// UTC with a trailing 'Z'; milliseconds are printed only when non-zero.
std::string format_rfc3339(Instant t);

struct PriceRecord {
    Instant timestamp;
    std::string symbol;
    double price = 0.0;
};

struct ColumnMapping {
    std::string timestamp = "timestamp";
    std::string symbol = "symbol";
    std::string price = "price";
    char delimiter = 0;  // 0: detect from the header
};

struct ParsedRecords {
    std::map<std::string, std::vector<PriceRecord>> by_symbol;  // each sorted by timestamp
    std::size_t rows = 0;
    std::size_t rejected_nonpositive = 0;
    std::size_t duplicates_replaced = 0;
};

/// Duplicate (symbol, timestamp) pairs keep the record that appears last.
ParsedRecords parse_price_records(std::istream& in, const ColumnMapping& mapping = {});

struct SessionSpec {
    std::chrono::minutes session_start{17 * 60};  // local clock; session opens on the previous day
    std::chrono::minutes session_end{16 * 60};    // local clock on the labeling date, inclusive
    TimeZone zone = TimeZone::fixed(std::chrono::seconds{0}, "UTC");
    HolidayCalendar holidays;

    /// 17:00-16:00 America/Chicago with the CME holiday calendar.
    static SessionSpec cme_default();
    void validate() const;
};

/// Session label for an instant, or nullopt when it falls in the closed gap.
std::optional<Date> session_label(Instant t, const SessionSpec& spec);

struct Session {
    Date date;
    std::vector<Instant> times;
    std::vector<double> prices;
};

struct IntradaySeries {
    std::string symbol;
    std::vector<Session> sessions;  // strictly increasing dates, each with >= 2 prices
};

struct SessionStats {
    std::size_t gap_records = 0;
    std::size_t holiday_records = 0;
    std::vector<Date> holiday_sessions;
    std::vector<Date> short_sessions;
};

struct SessionAssignment {
    IntradaySeries series;
    SessionStats stats;
};

/// `records` must be one symbol sorted by timestamp.
SessionAssignment assign_sessions(std::span<const PriceRecord> records, const SessionSpec& spec);

/// Snaps each session onto a UTC-aligned grid of `step` using the last
/// observation at or before each grid point. Sessions left with fewer than
/// two grid prices are dropped.
IntradaySeries resample(const IntradaySeries& series, std::chrono::minutes step);

/// r_k = ln(p_k) - ln(p_{k-1}).
std::vector<double> log_returns(std::span<const double> prices);

/// Columns symbol,session_date,timestamp,price; rows ordered by symbol then time.
std::string format_sessions(std::span<const IntradaySeries> series);
std::vector<IntradaySeries> parse_sessions(std::istream& in);

}  // namespace spillover
