#pragma once

#include <chrono>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace spillover {

using Date = std::chrono::sys_days;

Date parse_iso_date(std::string_view text);
std::string format_iso_date(Date d);

/// Weekday dates (Mon-Fri) starting at `first`, inclusive when it is a weekday.
std::vector<Date> business_days(Date first, std::size_t count);

/// Observed US federal holidays for a year, including the nominal date when
/// the observed day was shifted off a weekend. Juneteenth is included from 2021.
std::vector<Date> us_federal_holidays(int year);

// Set of date predicates a session label is tested against.
class HolidayCalendar {
public:
    HolidayCalendar() = default;

    /// Federal holidays, Dec 24-26 and Dec 31-Jan 2.
    static HolidayCalendar cme_default();

    HolidayCalendar& with_federal(bool on) { federal_ = on; return *this; }
    HolidayCalendar& with_year_end(bool on) { year_end_ = on; return *this; }
    HolidayCalendar& add(Date d) { extra_.insert(d); return *this; }

    /// Reads one ISO date per line; blank lines and text after '#' are ignored.
    HolidayCalendar& add_file(const std::string& path);

    bool is_holiday(Date d) const;

    bool federal() const noexcept { return federal_; }
    bool year_end() const noexcept { return year_end_; }
    const std::set<Date>& extra() const noexcept { return extra_; }

private:
    bool federal_ = false;
    bool year_end_ = false;
    std::set<Date> extra_;
};

}  // namespace spillover
