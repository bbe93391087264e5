#include "spillover/calendar.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>

#include "spillover/error.hpp"

namespace spillover {

using namespace std::chrono;

namespace {

int parse_fixed(std::string_view s, std::size_t pos, std::size_t len, std::string_view whole) {
    int v = 0;
    if (pos + len > s.size()) throw InputError("malformed date '" + std::string(whole) + "'");
    auto res = std::from_chars(s.data() + pos, s.data() + pos + len, v);
    if (res.ec != std::errc{} || res.ptr != s.data() + pos + len) {
        throw InputError("malformed date '" + std::string(whole) + "'");
    }
    return v;
}

// Saturday holidays are observed on Friday, Sunday ones on Monday.
Date observed(Date d) {
    const weekday wd{d};
    if (wd == Saturday) return d - days{1};
    if (wd == Sunday) return d + days{1};
    return d;
}

void push_fixed(std::vector<Date>& out, Date d) {
    out.push_back(d);
    const Date obs = observed(d);
    if (obs != d) out.push_back(obs);
}

}  // namespace

Date parse_iso_date(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw InputError("malformed date '" + std::string(text) + "'");
    }
    const int y = parse_fixed(text, 0, 4, text);
    const int m = parse_fixed(text, 5, 2, text);
    const int d = parse_fixed(text, 8, 2, text);
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw InputError("invalid calendar date '" + std::string(text) + "'");
    return sys_days{ymd};
}

std::string format_iso_date(Date d) {
    const year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::vector<Date> business_days(Date first, std::size_t count) {
    std::vector<Date> out;
    out.reserve(count);
    for (Date d = first; out.size() < count; d += days{1}) {
        const weekday wd{d};
        if (wd != Saturday && wd != Sunday) out.push_back(d);
    }
    return out;
}

std::vector<Date> us_federal_holidays(int y) {
    const year yr{y};
    std::vector<Date> out;
    push_fixed(out, sys_days{yr / January / 1});
    out.push_back(sys_days{yr / January / Monday[3]});
    out.push_back(sys_days{yr / February / Monday[3]});
    out.push_back(sys_days{yr / May / Monday[last]});
    if (y >= 2021) push_fixed(out, sys_days{yr / June / 19});
    push_fixed(out, sys_days{yr / July / 4});
    out.push_back(sys_days{yr / September / Monday[1]});
    out.push_back(sys_days{yr / October / Monday[2]});
    push_fixed(out, sys_days{yr / November / 11});
    out.push_back(sys_days{yr / November / Thursday[4]});
    push_fixed(out, sys_days{yr / December / 25});
    // New Year's Day of the following year observed on Dec 31.
    const Date next_ny{sys_days{year{y + 1} / January / 1}};
    if (observed(next_ny) != next_ny && year_month_day{observed(next_ny)}.year() == yr) {
        out.push_back(observed(next_ny));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

HolidayCalendar HolidayCalendar::cme_default() {
    HolidayCalendar cal;
    cal.federal_ = true;
    cal.year_end_ = true;
    return cal;
}

HolidayCalendar& HolidayCalendar::add_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open holiday file '" + path + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        auto first = std::find_if_not(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
        auto last = std::find_if_not(line.rbegin(), line.rend(), [](unsigned char c) { return std::isspace(c); }).base();
        if (first >= last) continue;
        try {
            extra_.insert(parse_iso_date(std::string_view(&*first, static_cast<std::size_t>(last - first))));
        } catch (const InputError& e) {
            throw ParseError(lineno, std::string(e.what()) + " in '" + path + "'");
        }
    }
    return *this;
}

bool HolidayCalendar::is_holiday(Date d) const {
    if (extra_.count(d)) return true;
    const year_month_day ymd{d};
    if (year_end_) {
        const unsigned m = static_cast<unsigned>(ymd.month());
        const unsigned dd = static_cast<unsigned>(ymd.day());
        if (m == 12 && (dd == 24 || dd == 25 || dd == 26 || dd == 31)) return true;
        if (m == 1 && (dd == 1 || dd == 2)) return true;
    }
    if (federal_) {
        const auto hols = us_federal_holidays(static_cast<int>(ymd.year()));
        if (std::binary_search(hols.begin(), hols.end(), d)) return true;
    }
    return false;
}

}  // namespace spillover
