#include "spillover/realized.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "spillover/csv.hpp"
#include "spillover/error.hpp"
#include "spillover/numeric.hpp"

namespace spillover {

namespace {

double parse_number(const std::string& s, std::size_t line) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseError(line, "malformed number '" + s + "'");
    }
    return v;
}

}  // namespace

DailyMeasures realized_measures(std::span<const double> returns, Date session_date) {
    if (returns.empty()) throw InputError("realized_measures needs at least one return");
    CompensatedSum neg;
    CompensatedSum pos;
    for (double r : returns) {
        if (!std::isfinite(r)) throw InputError("non-finite intraday return");
        if (r < 0.0) {
            neg.add(r * r);
        } else {
            pos.add(r * r);
        }
    }
    DailyMeasures m;
    m.session_date = session_date;
    m.rs_minus = neg.value();
    m.rs_plus = pos.value();
    m.rv = m.rs_minus + m.rs_plus;
    m.n_returns = returns.size();
    return m;
}

std::vector<DailyMeasures> daily_measures(const IntradaySeries& series) {
    std::vector<DailyMeasures> out;
    out.reserve(series.sessions.size());
    for (const auto& s : series.sessions) {
        const auto r = log_returns(s.prices);
        out.push_back(realized_measures(r, s.date));
    }
    return out;
}

Measure parse_measure(std::string_view name) {
    if (name == "rv") return Measure::RV;
    if (name == "rs_minus") return Measure::RSMinus;
    if (name == "rs_plus") return Measure::RSPlus;
    throw ConfigError("unknown measure '" + std::string(name) + "' (expected rv, rs_minus or rs_plus)");
}

std::string_view measure_name(Measure m) {
    switch (m) {
        case Measure::RV: return "rv";
        case Measure::RSMinus: return "rs_minus";
        case Measure::RSPlus: return "rs_plus";
    }
    return "rv";
}

Transform parse_transform(std::string_view name) {
    if (name == "raw") return Transform::Raw;
    if (name == "log") return Transform::Log;
    throw ConfigError("unknown transform '" + std::string(name) + "' (expected raw or log)");
}

std::string_view transform_name(Transform t) { return t == Transform::Log ? "log" : "raw"; }

double measure_value(const DailyMeasures& d, Measure m) {
    switch (m) {
        case Measure::RV: return d.rv;
        case Measure::RSMinus: return d.rs_minus;
        case Measure::RSPlus: return d.rs_plus;
    }
    return d.rv;
}

RealizedPanel RealizedPanel::slice(std::size_t first, std::size_t count) const {
    if (first + count > rows()) throw InputError("panel slice out of range");
    RealizedPanel p;
    p.dates.assign(dates.begin() + static_cast<std::ptrdiff_t>(first),
                   dates.begin() + static_cast<std::ptrdiff_t>(first + count));
    p.assets = assets;
    p.values = values.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
    p.transform = transform;
    return p;
}

PanelBuild build_panel(std::span<const MeasureSeries> series, Measure measure, Transform transform, double log_floor) {
    if (series.size() < 2) throw InputError("a panel needs at least two assets");
    if (transform == Transform::Log && !(log_floor > 0.0)) throw ConfigError("log_floor must be positive");
    std::map<Date, std::size_t> seen;
    for (const auto& s : series) {
        if (s.days.empty()) throw InputError("asset '" + s.asset + "' has no daily measures");
        for (std::size_t i = 1; i < s.days.size(); ++i) {
            if (!(s.days[i - 1].session_date < s.days[i].session_date)) {
                throw InputError("asset '" + s.asset + "' has non-increasing dates");
            }
        }
        for (const auto& d : s.days) ++seen[d.session_date];
    }
    PanelBuild out;
    for (const auto& [date, count] : seen) {
        if (count == series.size()) {
            out.panel.dates.push_back(date);
        } else {
            out.dropped_dates.push_back(date);
        }
    }
    if (out.panel.dates.empty()) throw InputError("assets share no common dates");
    const auto T = static_cast<Eigen::Index>(out.panel.dates.size());
    out.panel.values.resize(T, static_cast<Eigen::Index>(series.size()));
    out.panel.transform = transform;
    for (std::size_t j = 0; j < series.size(); ++j) {
        out.panel.assets.push_back(series[j].asset);
        Eigen::Index t = 0;
        for (const auto& d : series[j].days) {
            if (t < T && d.session_date == out.panel.dates[static_cast<std::size_t>(t)]) {
                double v = measure_value(d, measure);
                if (transform == Transform::Log) v = std::log(std::max(v, log_floor));
                out.panel.values(t, static_cast<Eigen::Index>(j)) = v;
                ++t;
            }
        }
    }
    return out;
}

std::string format_panel(const RealizedPanel& panel) {
    std::ostringstream os;
    os << "date";
    for (const auto& a : panel.assets) os << ',' << a;
    os << '\n';
    for (std::size_t t = 0; t < panel.rows(); ++t) {
        os << format_iso_date(panel.dates[t]);
        for (std::size_t j = 0; j < panel.cols(); ++j) {
            os << ',' << format_double(panel.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)));
        }
        os << '\n';
    }
    return os.str();
}

RealizedPanel parse_panel(std::istream& in) {
    const DelimitedTable table = read_delimited(in);
    if (table.header.size() < 2) throw InputError("panel needs a date column and at least one asset column");
    if (table.header[0] != "date") throw InputError("panel's first column must be 'date'");
    RealizedPanel p;
    p.assets.assign(table.header.begin() + 1, table.header.end());
    for (std::size_t j = 0; j < p.assets.size(); ++j) {
        if (std::find(p.assets.begin(), p.assets.begin() + static_cast<std::ptrdiff_t>(j), p.assets[j]) !=
            p.assets.begin() + static_cast<std::ptrdiff_t>(j)) {
            throw InputError("duplicate asset column '" + p.assets[j] + "'");
        }
    }
    p.values.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(p.assets.size()));
    for (std::size_t t = 0; t < table.rows.size(); ++t) {
        const auto& row = table.rows[t];
        const std::size_t line = table.line_numbers[t];
        Date d;
        try {
            d = parse_iso_date(row[0]);
        } catch (const InputError& e) {
            throw ParseError(line, e.what());
        }
        if (!p.dates.empty() && !(p.dates.back() < d)) throw ParseError(line, "panel dates must be strictly increasing");
        p.dates.push_back(d);
        for (std::size_t j = 0; j < p.assets.size(); ++j) {
            p.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = parse_number(row[j + 1], line);
        }
    }
    return p;
}

RealizedPanel read_panel_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open panel '" + path + "'");
    return parse_panel(in);
}

std::string format_measures(std::span<const MeasureSeries> series) {
    std::ostringstream os;
    os << "asset,date,rv,rs_minus,rs_plus,n_returns\n";
    for (const auto& s : series) {
        for (const auto& d : s.days) {
            os << s.asset << ',' << format_iso_date(d.session_date) << ',' << format_double(d.rv) << ','
               << format_double(d.rs_minus) << ',' << format_double(d.rs_plus) << ',' << d.n_returns << '\n';
        }
    }
    return os.str();
}

std::vector<MeasureSeries> parse_measures(std::istream& in) {
    const DelimitedTable table = read_delimited(in);
    std::vector<MeasureSeries> out;
    if (table.header.empty()) return out;
    const std::size_t ca = table.column("asset");
    const std::size_t cd = table.column("date");
    const std::size_t crv = table.column("rv");
    const std::size_t cm = table.column("rs_minus");
    const std::size_t cp = table.column("rs_plus");
    const std::size_t cn = table.column("n_returns");
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        const std::size_t line = table.line_numbers[i];
        auto [it, inserted] = index.try_emplace(row[ca], out.size());
        if (inserted) out.push_back(MeasureSeries{row[ca], {}});
        DailyMeasures d;
        try {
            d.session_date = parse_iso_date(row[cd]);
        } catch (const InputError& e) {
            throw ParseError(line, e.what());
        }
        d.rv = parse_number(row[crv], line);
        d.rs_minus = parse_number(row[cm], line);
        d.rs_plus = parse_number(row[cp], line);
        d.n_returns = static_cast<std::size_t>(parse_number(row[cn], line));
        out[it->second].days.push_back(d);
    }
    return out;
}

}  // namespace spillover
