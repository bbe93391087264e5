#include "spillover/timezone.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "spillover/error.hpp"

namespace spillover {

using namespace std::chrono;

namespace {

std::int64_t read_be(std::string_view s, std::size_t pos, std::size_t width) {
    if (pos + width > s.size()) throw InputError("truncated TZif data");
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < width; ++i) v = (v << 8) | static_cast<unsigned char>(s[pos + i]);
    if (width == 4) return static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
    return static_cast<std::int64_t>(v);
}

// Parses [+-]hh[:mm[:ss]] and returns seconds.
std::int64_t parse_hms(std::string_view s, std::size_t& pos) {
    int sign = 1;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        sign = s[pos] == '-' ? -1 : 1;
        ++pos;
    }
    std::int64_t parts[3] = {0, 0, 0};
    for (int i = 0; i < 3; ++i) {
        std::size_t start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (start == pos) throw InputError("malformed POSIX TZ time in '" + std::string(s) + "'");
        parts[i] = std::stoll(std::string(s.substr(start, pos - start)));
        if (i < 2 && pos < s.size() && s[pos] == ':') {
            ++pos;
        } else {
            break;
        }
    }
    return sign * (parts[0] * 3600 + parts[1] * 60 + parts[2]);
}

void skip_abbrev(std::string_view s, std::size_t& pos) {
    if (pos < s.size() && s[pos] == '<') {
        auto close = s.find('>', pos);
        if (close == std::string_view::npos) throw InputError("malformed POSIX TZ '" + std::string(s) + "'");
        pos = close + 1;
        return;
    }
    std::size_t start = pos;
    while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos - start < 3) throw InputError("malformed POSIX TZ '" + std::string(s) + "'");
}

int parse_int(std::string_view s, std::size_t& pos) {
    std::size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (start == pos) throw InputError("malformed POSIX TZ rule in '" + std::string(s) + "'");
    return std::stoi(std::string(s.substr(start, pos - start)));
}

TimeZone::RuleDate parse_rule_date(std::string_view s, std::size_t& pos) {
    TimeZone::RuleDate r;
    if (pos < s.size() && s[pos] == 'M') {
        ++pos;
        r.month = parse_int(s, pos);
        if (pos >= s.size() || s[pos] != '.') throw InputError("malformed POSIX TZ rule");
        ++pos;
        r.week = parse_int(s, pos);
        if (pos >= s.size() || s[pos] != '.') throw InputError("malformed POSIX TZ rule");
        ++pos;
        r.weekday = parse_int(s, pos);
        if (r.month < 1 || r.month > 12 || r.week < 1 || r.week > 5 || r.weekday > 6) {
            throw InputError("out-of-range POSIX TZ rule");
        }
    } else if (pos < s.size() && s[pos] == 'J') {
        ++pos;
        r.kind = TimeZone::RuleDate::Kind::Julian1;
        r.julian = parse_int(s, pos);
    } else {
        r.kind = TimeZone::RuleDate::Kind::Julian0;
        r.julian = parse_int(s, pos);
    }
    if (pos < s.size() && s[pos] == '/') {
        ++pos;
        r.time = parse_hms(s, pos);
    }
    return r;
}

// Local midnight (as days since epoch) on which a rule fires in year y.
sys_days rule_day(const TimeZone::RuleDate& r, int y) {
    const year yr{y};
    switch (r.kind) {
        case TimeZone::RuleDate::Kind::MonthWeekDay: {
            const month m{static_cast<unsigned>(r.month)};
            const weekday wd{static_cast<unsigned>(r.weekday)};
            if (r.week == 5) return sys_days{yr / m / wd[last]};
            return sys_days{yr / m / wd[static_cast<unsigned>(r.week)]};
        }
        case TimeZone::RuleDate::Kind::Julian1: {
            // 1..365, February 29 never counted.
            sys_days d = sys_days{yr / January / 1} + days{r.julian - 1};
            if (yr.is_leap() && r.julian >= 60) d += days{1};
            return d;
        }
        case TimeZone::RuleDate::Kind::Julian0:
            return sys_days{yr / January / 1} + days{r.julian};
    }
    return sys_days{yr / January / 1};
}

std::int64_t footer_offset(const TimeZone::PosixRule& rule, std::int64_t t) {
    if (!rule.dst_offset) return rule.std_offset;
    const auto local_std = sys_seconds{seconds{t + rule.std_offset}};
    const int y = static_cast<int>(year_month_day{floor<days>(local_std)}.year());
    const std::int64_t dst = *rule.dst_offset;
    const std::int64_t start =
        sys_seconds{rule_day(rule.start, y)}.time_since_epoch().count() + rule.start.time - rule.std_offset;
    const std::int64_t end =
        sys_seconds{rule_day(rule.end, y)}.time_since_epoch().count() + rule.end.time - dst;
    bool in_dst;
    if (start < end) {
        in_dst = t >= start && t < end;
    } else {
        in_dst = !(t >= end && t < start);
    }
    return in_dst ? dst : rule.std_offset;
}

std::string zoneinfo_dir() {
    if (const char* env = std::getenv("TZDIR"); env && *env) return env;
    return "/usr/share/zoneinfo";
}

}  // namespace

TimeZone::PosixRule TimeZone::parse_posix(std::string_view s) {
    PosixRule rule;
    std::size_t pos = 0;
    skip_abbrev(s, pos);
    // POSIX offsets count hours west of UTC.
    rule.std_offset = -parse_hms(s, pos);
    if (pos == s.size()) return rule;
    skip_abbrev(s, pos);
    if (pos < s.size() && s[pos] != ',') {
        rule.dst_offset = -parse_hms(s, pos);
    } else {
        rule.dst_offset = rule.std_offset + 3600;
    }
    if (pos == s.size()) {
        // US rules are the POSIX default when none is given.
        rule.start = RuleDate{RuleDate::Kind::MonthWeekDay, 3, 2, 0, 0, 7200};
        rule.end = RuleDate{RuleDate::Kind::MonthWeekDay, 11, 1, 0, 0, 7200};
        return rule;
    }
    if (s[pos] != ',') throw InputError("malformed POSIX TZ '" + std::string(s) + "'");
    ++pos;
    rule.start = parse_rule_date(s, pos);
    if (pos >= s.size() || s[pos] != ',') throw InputError("malformed POSIX TZ '" + std::string(s) + "'");
    ++pos;
    rule.end = parse_rule_date(s, pos);
    if (pos != s.size()) throw InputError("trailing characters in POSIX TZ '" + std::string(s) + "'");
    return rule;
}

TimeZone TimeZone::fixed(seconds offset, std::string name) {
    TimeZone tz;
    tz.name_ = std::move(name);
    tz.initial_offset_ = static_cast<std::int32_t>(offset.count());
    return tz;
}

TimeZone TimeZone::from_tzif(std::string_view b, std::string name) {
    if (b.size() < 44 || b.substr(0, 4) != "TZif") throw InputError("not a TZif file: " + name);
    auto counts = [&](std::size_t base) {
        std::int64_t c[6];
        for (int i = 0; i < 6; ++i) c[i] = read_be(b, base + 20 + 4 * static_cast<std::size_t>(i), 4);
        return std::to_array(c);
    };
    const char version = b[4];
    std::size_t base = 0;
    std::size_t tsize = 4;
    auto c = counts(0);
    if (version >= '2') {
        // Skip the legacy 32-bit block; the 64-bit block follows its own header.
        const std::size_t v1 = static_cast<std::size_t>(c[3] * 4 + c[3] + c[4] * 6 + c[5] + c[2] * 8 + c[1] + c[0]);
        base = 44 + v1;
        tsize = 8;
        c = counts(base);
        if (b.substr(base, 4) != "TZif") throw InputError("corrupt TZif v2 header: " + name);
    }
    const auto isutcnt = static_cast<std::size_t>(c[0]);
    const auto isstdcnt = static_cast<std::size_t>(c[1]);
    const auto leapcnt = static_cast<std::size_t>(c[2]);
    const auto timecnt = static_cast<std::size_t>(c[3]);
    const auto typecnt = static_cast<std::size_t>(c[4]);
    const auto charcnt = static_cast<std::size_t>(c[5]);
    if (typecnt == 0) throw InputError("TZif without local time types: " + name);

    std::size_t pos = base + 44;
    TimeZone tz;
    tz.name_ = std::move(name);
    std::vector<std::size_t> idx(timecnt);
    tz.transitions_.resize(timecnt);
    for (std::size_t i = 0; i < timecnt; ++i) tz.transitions_[i] = read_be(b, pos + i * tsize, tsize);
    pos += timecnt * tsize;
    for (std::size_t i = 0; i < timecnt; ++i) idx[i] = static_cast<unsigned char>(b.at(pos + i));
    pos += timecnt;
    std::vector<std::int32_t> utoff(typecnt);
    std::vector<bool> isdst(typecnt);
    for (std::size_t i = 0; i < typecnt; ++i) {
        utoff[i] = static_cast<std::int32_t>(read_be(b, pos + i * 6, 4));
        isdst[i] = b.at(pos + i * 6 + 4) != 0;
    }
    pos += typecnt * 6 + charcnt + leapcnt * (tsize + 4) + isstdcnt + isutcnt;
    tz.offsets_.resize(timecnt);
    for (std::size_t i = 0; i < timecnt; ++i) {
        if (idx[i] >= typecnt) throw InputError("corrupt TZif type index: " + tz.name_);
        tz.offsets_[i] = utoff[idx[i]];
    }
    // Before the first transition: the first standard-time type.
    std::size_t first = 0;
    while (first < typecnt && isdst[first]) ++first;
    tz.initial_offset_ = utoff[first < typecnt ? first : 0];

    if (version >= '2' && pos < b.size() && b[pos] == '\n') {
        const auto close = b.find('\n', pos + 1);
        if (close != std::string_view::npos && close > pos + 1) {
            tz.footer_ = parse_posix(b.substr(pos + 1, close - pos - 1));
        }
    }
    return tz;
}

TimeZone TimeZone::load(std::string_view name) {
    if (name == "UTC" || name == "Z") return fixed(seconds{0}, "UTC");
    if (name.size() > 3 && name.substr(0, 3) == "UTC" && (name[3] == '+' || name[3] == '-')) {
        std::size_t pos = 3;
        const auto off = parse_hms(name, pos);
        if (pos != name.size() || off > 18 * 3600 || off < -18 * 3600) {
            throw ConfigError("malformed fixed-offset zone '" + std::string(name) + "'");
        }
        return fixed(seconds{off}, std::string(name));
    }
    if (name.empty() || name.find("..") != std::string_view::npos || name.front() == '/') {
        throw ConfigError("invalid time zone name '" + std::string(name) + "'");
    }
    const std::string path = zoneinfo_dir() + "/" + std::string(name);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("unknown time zone '" + std::string(name) + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_tzif(bytes, std::string(name));
}

seconds TimeZone::offset_at(sys_seconds t) const {
    const std::int64_t s = t.time_since_epoch().count();
    if (transitions_.empty()) {
        if (footer_) return seconds{footer_offset(*footer_, s)};
        return seconds{initial_offset_};
    }
    if (s < transitions_.front()) return seconds{initial_offset_};
    if (s >= transitions_.back() && footer_) return seconds{footer_offset(*footer_, s)};
    const auto it = std::upper_bound(transitions_.begin(), transitions_.end(), s);
    return seconds{offsets_[static_cast<std::size_t>(it - transitions_.begin()) - 1]};
}

}  // namespace spillover
