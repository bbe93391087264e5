#include "spillover/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "spillover/csv.hpp"
#include "spillover/error.hpp"
#include "spillover/numeric.hpp"

namespace spillover {

using namespace std::chrono;

namespace {

bool read_digits(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return true;
}

double parse_price(std::string_view s, bool& ok) {
    double v = 0.0;
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    ok = res.ec == std::errc{} && res.ptr == s.data() + s.size() && std::isfinite(v);
    return v;
}

}  // namespace

Instant parse_rfc3339(std::string_view s) {
    auto fail = [&]() -> Instant { throw InputError("malformed RFC 3339 timestamp '" + std::string(s) + "'"); };
    int y, mo, d, h, mi, sec;
    if (!read_digits(s, 0, 4, y) || s.size() < 19 || s[4] != '-' || !read_digits(s, 5, 2, mo) || s[7] != '-' ||
        !read_digits(s, 8, 2, d) || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || !read_digits(s, 11, 2, h) ||
        s[13] != ':' || !read_digits(s, 14, 2, mi) || s[16] != ':' || !read_digits(s, 17, 2, sec)) {
        return fail();
    }
    std::size_t pos = 19;
    int millis = 0;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
            if (digits < 3) millis = millis * 10 + (s[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) return fail();
        for (int k = digits; k < 3; ++k) millis *= 10;
    }
    if (pos >= s.size()) return fail();
    int offset_min = 0;
    if (s[pos] == 'Z' || s[pos] == 'z') {
        ++pos;
    } else if (s[pos] == '+' || s[pos] == '-') {
        const int sign = s[pos] == '-' ? -1 : 1;
        int oh, om;
        if (!read_digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
            !read_digits(s, pos + 4, 2, om)) {
            return fail();
        }
        offset_min = sign * (oh * 60 + om);
        pos += 6;
    } else {
        return fail();
    }
    if (pos != s.size()) return fail();
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return fail();
    const auto local = sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{millis};
    return Instant{local - minutes{offset_min}};
}

std::string format_rfc3339(Instant t) {
    const auto day_start = floor<days>(t);
    const year_month_day ymd{day_start};
    const hh_mm_ss<milliseconds> tod{t - day_start};
    char buf[40];
    const auto ms = tod.subseconds().count();
    if (ms == 0) {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                      static_cast<int>(tod.seconds().count()));
    } else {
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                      static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                      static_cast<int>(tod.seconds().count()), static_cast<int>(ms));
    }
    return buf;
}

ParsedRecords parse_price_records(std::istream& in, const ColumnMapping& mapping) {
    ParsedRecords out;
    const DelimitedTable table = read_delimited(in, mapping.delimiter);
    if (table.header.empty()) return out;
    const std::size_t ts_col = table.column(mapping.timestamp);
    const std::size_t sym_col = table.column(mapping.symbol);
    const std::size_t px_col = table.column(mapping.price);

    // (record, input order) so that sorting keeps later duplicates last.
    std::map<std::string, std::vector<std::pair<PriceRecord, std::size_t>>> staged;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::size_t line = table.line_numbers[i];
        ++out.rows;
        PriceRecord rec;
        try {
            rec.timestamp = parse_rfc3339(row[ts_col]);
        } catch (const InputError& e) {
            throw ParseError(line, e.what());
        }
        rec.symbol = row[sym_col];
        if (rec.symbol.empty()) throw ParseError(line, "empty symbol");
        bool ok = false;
        rec.price = parse_price(row[px_col], ok);
        if (!ok) throw ParseError(line, "malformed price '" + row[px_col] + "'");
        if (rec.price <= 0.0) {
            ++out.rejected_nonpositive;
            continue;
        }
        staged[rec.symbol].emplace_back(std::move(rec), i);
    }
    for (auto& [symbol, recs] : staged) {
        std::stable_sort(recs.begin(), recs.end(),
                         [](const auto& a, const auto& b) { return a.first.timestamp < b.first.timestamp; });
        auto& dest = out.by_symbol[symbol];
        dest.reserve(recs.size());
        for (auto& [rec, order] : recs) {
            if (!dest.empty() && dest.back().timestamp == rec.timestamp) {
                dest.back() = std::move(rec);
                ++out.duplicates_replaced;
            } else {
                dest.push_back(std::move(rec));
            }
        }
    }
    return out;
}

SessionSpec SessionSpec::cme_default() {
    SessionSpec spec;
    spec.zone = TimeZone::load("America/Chicago");
    spec.holidays = HolidayCalendar::cme_default();
    return spec;
}

void SessionSpec::validate() const {
    const auto in_day = [](minutes m) { return m >= minutes{0} && m < minutes{24 * 60}; };
    if (!in_day(session_start) || !in_day(session_end)) {
        throw ConfigError("session clock times must lie in [00:00, 24:00)");
    }
}

std::optional<Date> session_label(Instant t, const SessionSpec& spec) {
    const auto offset = spec.zone.offset_at(floor<seconds>(t));
    const auto local = local_time<milliseconds>{t.time_since_epoch() + offset};
    const auto local_day = floor<days>(local);
    const milliseconds tod = local - local_day;
    const Date date{local_day.time_since_epoch()};
    const milliseconds s = spec.session_start;
    const milliseconds e = spec.session_end;
    if (s > e) {
        if (tod >= s) return date + days{1};
        if (tod <= e) return date;
        return std::nullopt;
    }
    if (s < e) {
        if (tod >= s && tod <= e) return date;
        return std::nullopt;
    }
    // Equal clocks: a full 24 hour session with no gap.
    if (s.count() == 0) return date;
    return tod >= s ? date + days{1} : date;
}

SessionAssignment assign_sessions(std::span<const PriceRecord> records, const SessionSpec& spec) {
    spec.validate();
    SessionAssignment out;
    if (!records.empty()) out.series.symbol = records.front().symbol;
    std::vector<Session> raw;
    for (const auto& rec : records) {
        if (rec.symbol != out.series.symbol) throw InputError("assign_sessions expects a single symbol");
        if (!raw.empty() && rec.timestamp < raw.back().times.back()) {
            throw InputError("records for '" + rec.symbol + "' are not sorted by timestamp");
        }
        const auto label = session_label(rec.timestamp, spec);
        if (!label) {
            ++out.stats.gap_records;
            continue;
        }
        if (raw.empty() || raw.back().date != *label) {
            raw.push_back(Session{*label, {}, {}});
        }
        raw.back().times.push_back(rec.timestamp);
        raw.back().prices.push_back(rec.price);
    }
    for (auto& s : raw) {
        if (spec.holidays.is_holiday(s.date)) {
            out.stats.holiday_records += s.prices.size();
            out.stats.holiday_sessions.push_back(s.date);
            continue;
        }
        if (s.prices.size() < 2) {
            out.stats.short_sessions.push_back(s.date);
            continue;
        }
        out.series.sessions.push_back(std::move(s));
    }
    return out;
}

IntradaySeries resample(const IntradaySeries& series, minutes step) {
    if (step <= minutes{0}) throw ConfigError("resample step must be positive");
    const milliseconds grid = step;
    IntradaySeries out;
    out.symbol = series.symbol;
    for (const auto& s : series.sessions) {
        Session g{s.date, {}, {}};
        const auto first = s.times.front().time_since_epoch().count();
        const auto g_ms = grid.count();
        auto aligned = (first / g_ms) * g_ms;
        if (aligned < first) aligned += g_ms;
        auto t = Instant{milliseconds{aligned}};
        std::size_t k = 0;
        for (; t <= s.times.back(); t += grid) {
            while (k + 1 < s.times.size() && s.times[k + 1] <= t) ++k;
            g.times.push_back(t);
            g.prices.push_back(s.prices[k]);
        }
        if (g.prices.size() >= 2) out.sessions.push_back(std::move(g));
    }
    return out;
}

std::vector<double> log_returns(std::span<const double> prices) {
    if (prices.size() < 2) throw InputError("log_returns needs at least two prices");
    std::vector<double> r;
    r.reserve(prices.size() - 1);
    for (double p : prices) {
        if (!(p > 0.0)) throw InputError("log_returns requires strictly positive prices");
    }
    for (std::size_t k = 1; k < prices.size(); ++k) r.push_back(std::log(prices[k]) - std::log(prices[k - 1]));
    return r;
}

std::string format_sessions(std::span<const IntradaySeries> series) {
    std::ostringstream os;
    os << "symbol,session_date,timestamp,price\n";
    for (const auto& ser : series) {
        for (const auto& s : ser.sessions) {
            const std::string date = format_iso_date(s.date);
            for (std::size_t i = 0; i < s.prices.size(); ++i) {
                os << ser.symbol << ',' << date << ',' << format_rfc3339(s.times[i]) << ','
                   << format_double(s.prices[i]) << '\n';
            }
        }
    }
    return os.str();
}

std::vector<IntradaySeries> parse_sessions(std::istream& in) {
    const DelimitedTable table = read_delimited(in);
    std::vector<IntradaySeries> out;
    if (table.header.empty()) return out;
    const std::size_t sym = table.column("symbol");
    const std::size_t date = table.column("session_date");
    const std::size_t ts = table.column("timestamp");
    const std::size_t px = table.column("price");
    std::map<std::string, IntradaySeries> by_symbol;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        try {
            auto& ser = by_symbol[row[sym]];
            ser.symbol = row[sym];
            const Date d = parse_iso_date(row[date]);
            if (ser.sessions.empty() || ser.sessions.back().date != d) {
                if (!ser.sessions.empty() && d < ser.sessions.back().date) {
                    throw InputError("session dates out of order");
                }
                ser.sessions.push_back(Session{d, {}, {}});
            }
            bool ok = false;
            const double p = parse_price(row[px], ok);
            if (!ok || p <= 0.0) throw InputError("invalid price '" + row[px] + "'");
            ser.sessions.back().times.push_back(parse_rfc3339(row[ts]));
            ser.sessions.back().prices.push_back(p);
        } catch (const ParseError&) {
            throw;
        } catch (const InputError& e) {
            throw ParseError(table.line_numbers[i], e.what());
        }
    }
    for (auto& [name, ser] : by_symbol) {
        std::erase_if(ser.sessions, [](const Session& s) { return s.prices.size() < 2; });
        out.push_back(std::move(ser));
    }
    return out;
}

}  // namespace spillover
