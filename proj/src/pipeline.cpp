#include "spillover/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include "json.hpp"
#include "spillover/connectedness.hpp"
#include "spillover/csv.hpp"
#include "spillover/numeric.hpp"
#include "spillover/spectral.hpp"

namespace spillover {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return std::string(s);
}

template <class T>
T parse_num(const std::string& key, const std::string& v) {
    T out{};
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ConfigError("invalid value '" + v + "' for " + key);
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("invalid boolean '" + v + "' for " + key);
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

char parse_delim(const std::string& v) {
    if (v == "auto") return 0;
    if (v == "comma") return ',';
    if (v == "tab") return '\t';
    throw ConfigError("delimiter must be auto, comma or tab");
}

std::string delim_text(char c) {
    if (c == ',') return "comma";
    if (c == '\t') return "tab";
    return "auto";
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += ',';
        out += s;
    }
    return out;
}

using Setter = std::function<void(PipelineConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"input.prices", [](auto& c, auto&, auto& v) { c.prices = split_list(v); }},
        {"input.timestamp_column", [](auto& c, auto&, auto& v) { c.columns.timestamp = v; }},
        {"input.symbol_column", [](auto& c, auto&, auto& v) { c.columns.symbol = v; }},
        {"input.price_column", [](auto& c, auto&, auto& v) { c.columns.price = v; }},
        {"input.delimiter", [](auto& c, auto&, auto& v) { c.columns.delimiter = parse_delim(v); }},
        {"input.rv_panel", [](auto& c, auto&, auto& v) { c.rv_panel = v; }},
        {"input.rs_minus_panel", [](auto& c, auto&, auto& v) { c.rs_minus_panel = v; }},
        {"input.rs_plus_panel", [](auto& c, auto&, auto& v) { c.rs_plus_panel = v; }},
        {"session.start", [](auto& c, auto&, auto& v) { c.session_start = v; }},
        {"session.end", [](auto& c, auto&, auto& v) { c.session_end = v; }},
        {"session.timezone", [](auto& c, auto&, auto& v) { c.timezone = v; }},
        {"session.federal_holidays", [](auto& c, auto& k, auto& v) { c.federal_holidays = parse_bool(k, v); }},
        {"session.year_end_holidays", [](auto& c, auto& k, auto& v) { c.year_end_holidays = parse_bool(k, v); }},
        {"session.holidays_file", [](auto& c, auto&, auto& v) { c.holidays_file = v; }},
        {"session.resample",
         [](auto& c, auto& k, auto& v) { c.resample_minutes = v == "off" ? 0 : parse_num<int>(k, v); }},
        {"measures.measure", [](auto& c, auto&, auto& v) { c.measure = parse_measure(v); }},
        {"measures.transform", [](auto& c, auto&, auto& v) { c.transform = parse_transform(v); }},
        {"measures.log_floor", [](auto& c, auto& k, auto& v) { c.log_floor = parse_num<double>(k, v); }},
        {"rolling.window", [](auto& c, auto& k, auto& v) { c.rolling.window = parse_num<std::size_t>(k, v); }},
        {"rolling.horizon", [](auto& c, auto& k, auto& v) { c.rolling.horizon = parse_num<std::size_t>(k, v); }},
        {"rolling.lag", [](auto& c, auto& k, auto& v) { c.rolling.lag = parse_num<int>(k, v); }},
        {"rolling.select_lag", [](auto& c, auto& k, auto& v) { c.rolling.select_lag = parse_bool(k, v); }},
        {"rolling.max_lag", [](auto& c, auto& k, auto& v) { c.rolling.max_lag = parse_num<int>(k, v); }},
        {"rolling.step", [](auto& c, auto& k, auto& v) { c.rolling.step = parse_num<std::size_t>(k, v); }},
        {"rolling.threads", [](auto& c, auto& k, auto& v) { c.rolling.threads = parse_num<unsigned>(k, v); }},
        {"bands.ranges",
         [](auto& c, auto&, auto& v) { c.rolling.bands = v.empty() ? std::vector<DayRange>{} : parse_day_ranges(v); }},
        {"bands.resolution",
         [](auto& c, auto& k, auto& v) { c.rolling.spectral_resolution = parse_num<std::size_t>(k, v); }},
        {"bootstrap.enabled", [](auto& c, auto& k, auto& v) { c.bootstrap = parse_bool(k, v); }},
        {"bootstrap.replicates", [](auto& c, auto& k, auto& v) { c.boot.replicates = parse_num<std::size_t>(k, v); }},
        {"bootstrap.block_length",
         [](auto& c, auto& k, auto& v) { c.boot.block_length = parse_num<std::size_t>(k, v); }},
        {"bootstrap.level", [](auto& c, auto& k, auto& v) { c.boot.level = parse_num<double>(k, v); }},
        {"output.directory", [](auto& c, auto&, auto& v) { c.output_dir = v; }},
        {"run.seed", [](auto& c, auto& k, auto& v) { c.seed = parse_num<std::uint64_t>(k, v); }},
    };
    return table;
}

void set_key(PipelineConfig& c, const std::string& key, const std::string& value) {
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError("unknown configuration key '" + key + "'");
    it->second(c, key, value);
}

}  // namespace

std::vector<std::string> split_list(std::string_view text, char sep) {
    std::vector<std::string> out;
    if (trim(text).empty()) return out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto next = text.find(sep, pos);
        if (next == std::string_view::npos) next = text.size();
        out.push_back(trim(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    return out;
}

namespace {

// ';' or '#' after whitespace starts a trailing comment.
std::string strip_inline_comment(const std::string& value) {
    for (std::size_t i = 1; i < value.size(); ++i) {
        if ((value[i] == ';' || value[i] == '#') && (value[i - 1] == ' ' || value[i - 1] == '\t')) {
            return value.substr(0, i);
        }
    }
    return value;
}

}  // namespace

PipelineConfig PipelineConfig::parse(std::string_view text) {
    boost::property_tree::ptree tree;
    std::istringstream in{std::string(text)};
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("malformed configuration: ") + e.what());
    }
    PipelineConfig cfg;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            throw ConfigError("key '" + section + "' must belong to a section");
        }
        for (const auto& [key, value] : body) set_key(cfg, section + "." + key, trim(strip_inline_comment(value.data())));
    }
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open configuration '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string PipelineConfig::to_text() const {
    std::ostringstream os;
    os << "[input]\n"
       << "prices = " << join(prices) << '\n'
       << "timestamp_column = " << columns.timestamp << '\n'
       << "symbol_column = " << columns.symbol << '\n'
       << "price_column = " << columns.price << '\n'
       << "delimiter = " << delim_text(columns.delimiter) << '\n'
       << "rv_panel = " << rv_panel << '\n'
       << "rs_minus_panel = " << rs_minus_panel << '\n'
       << "rs_plus_panel = " << rs_plus_panel << "\n\n";
    os << "[session]\n"
       << "start = " << session_start << '\n'
       << "end = " << session_end << '\n'
       << "timezone = " << timezone << '\n'
       << "federal_holidays = " << bool_text(federal_holidays) << '\n'
       << "year_end_holidays = " << bool_text(year_end_holidays) << '\n'
       << "holidays_file = " << holidays_file << '\n'
       << "resample = " << (resample_minutes ? std::to_string(resample_minutes) : "off") << "\n\n";
    os << "[measures]\n"
       << "measure = " << measure_name(measure) << '\n'
       << "transform = " << transform_name(transform) << '\n'
       << "log_floor = " << format_double(log_floor) << "\n\n";
    os << "[rolling]\n"
       << "window = " << rolling.window << '\n'
       << "horizon = " << rolling.horizon << '\n'
       << "lag = " << rolling.lag << '\n'
       << "select_lag = " << bool_text(rolling.select_lag) << '\n'
       << "max_lag = " << rolling.max_lag << '\n'
       << "step = " << rolling.step << '\n'
       << "threads = " << rolling.threads << "\n\n";
    os << "[bands]\n"
       << "ranges = " << format_day_ranges(rolling.bands) << '\n'
       << "resolution = " << rolling.spectral_resolution << "\n\n";
    os << "[bootstrap]\n"
       << "enabled = " << bool_text(bootstrap) << '\n'
       << "replicates = " << boot.replicates << '\n'
       << "block_length = " << boot.block_length << '\n'
       << "level = " << format_double(boot.level) << "\n\n";
    os << "[output]\n"
       << "directory = " << output_dir << "\n\n";
    os << "[run]\n"
       << "seed = " << seed << '\n';
    return os.str();
}

void PipelineConfig::apply_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' lacks '='");
    set_key(*this, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void PipelineConfig::validate() const {
    if (prices.empty() && rv_panel.empty() && rs_minus_panel.empty() && rs_plus_panel.empty()) {
        throw ConfigError("no input: set input.prices or at least one panel");
    }
    if (!prices.empty() && !(rv_panel.empty() && rs_minus_panel.empty() && rs_plus_panel.empty())) {
        throw ConfigError("input.prices and pre-computed panels are mutually exclusive");
    }
    if (prices.empty()) {
        const std::string& main = measure == Measure::RV ? rv_panel
                                  : measure == Measure::RSMinus ? rs_minus_panel
                                                                : rs_plus_panel;
        if (main.empty()) throw ConfigError("no panel supplied for measure '" + std::string(measure_name(measure)) + "'");
    }
    parse_clock(session_start);
    parse_clock(session_end);
    if (resample_minutes < 0) throw ConfigError("resample must be off or a positive number of minutes");
    if (transform == Transform::Log && !(log_floor > 0.0)) throw ConfigError("log_floor must be positive");
    // One variable is the weakest sample-size requirement; the real count is checked once inputs are read.
    rolling.validate(1);
    if (bootstrap) boot.validate();
    if (output_dir.empty()) throw ConfigError("output.directory must be set");
}

bool PipelineConfig::operator==(const PipelineConfig& o) const { return to_text() == o.to_text(); }

std::chrono::minutes parse_clock(std::string_view s) {
    const std::string t = trim(s);
    if (t.size() != 5 || t[2] != ':') throw ConfigError("clock time '" + t + "' must be HH:MM");
    const int h = parse_num<int>("clock hour", t.substr(0, 2));
    const int m = parse_num<int>("clock minute", t.substr(3, 2));
    if (h > 23 || m > 59) throw ConfigError("clock time '" + t + "' out of range");
    return std::chrono::minutes{h * 60 + m};
}

SessionSpec build_session_spec(const PipelineConfig& cfg) {
    SessionSpec spec;
    spec.session_start = parse_clock(cfg.session_start);
    spec.session_end = parse_clock(cfg.session_end);
    spec.zone = TimeZone::load(cfg.timezone);
    spec.holidays.with_federal(cfg.federal_holidays).with_year_end(cfg.year_end_holidays);
    if (!cfg.holidays_file.empty()) spec.holidays.add_file(cfg.holidays_file);
    return spec;
}

Eigen::MatrixXd parse_matrix(std::string_view text) {
    const auto rows = split_list(text, ';');
    if (rows.empty()) throw ConfigError("empty matrix");
    std::vector<std::vector<double>> vals;
    for (const auto& r : rows) {
        std::vector<double> row;
        for (const auto& item : split_list(r, ',')) row.push_back(parse_num<double>("matrix entry", item));
        vals.push_back(std::move(row));
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(vals.size()), static_cast<Eigen::Index>(vals.front().size()));
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (vals[i].size() != vals.front().size()) throw ConfigError("matrix rows differ in length");
        for (std::size_t j = 0; j < vals[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = vals[i][j];
        }
    }
    return m;
}

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw NumericError("SHA-256 digest failed");
    }
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof(buf), "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Input: return 3;
        case ErrorKind::Numeric: return 4;
    }
    return 4;
}

std::string_view status_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return "config-error";
        case ErrorKind::Input: return "input-error";
        case ErrorKind::Numeric: return "numeric-failure";
    }
    return "numeric-failure";
}

std::string error_report(ErrorKind kind, std::string_view stage, std::string_view message) {
    nlohmann::json j;
    j["status"] = status_name(kind);
    j["exit_code"] = exit_code(kind);
    j["stage"] = stage;
    j["message"] = message;
    return j.dump();
}

namespace {

struct LoadedData {
    std::vector<MeasureSeries> measures;  // empty when panels were supplied
    std::map<Measure, RealizedPanel> panels;
    nlohmann::json dropped = nlohmann::json::object();
};

LoadedData load_inputs(const PipelineConfig& cfg) {
    LoadedData data;
    const auto require = [](const std::string& p) {
        if (!p.empty() && !fs::is_regular_file(p)) throw InputError("input file '" + p + "' does not exist");
    };
    for (const auto& p : cfg.prices) require(p);
    require(cfg.rv_panel);
    require(cfg.rs_minus_panel);
    require(cfg.rs_plus_panel);
    require(cfg.holidays_file);

    if (!cfg.prices.empty()) {
        const SessionSpec spec = build_session_spec(cfg);
        std::map<std::string, std::vector<PriceRecord>> merged;
        std::size_t rejected = 0;
        std::size_t duplicates = 0;
        for (const auto& path : cfg.prices) {
            std::ifstream in(path);
            if (!in) throw InputError("cannot open '" + path + "'");
            ParsedRecords parsed;
            try {
                parsed = parse_price_records(in, cfg.columns);
            } catch (const ParseError& e) {
                throw InputError(path + ": " + e.what());
            }
            rejected += parsed.rejected_nonpositive;
            duplicates += parsed.duplicates_replaced;
            for (auto& [sym, recs] : parsed.by_symbol) {
                if (merged.count(sym)) throw InputError("symbol '" + sym + "' appears in more than one price file");
                merged[sym] = std::move(recs);
            }
        }
        data.dropped["rejected_nonpositive_prices"] = rejected;
        data.dropped["duplicate_timestamps_replaced"] = duplicates;
        for (const auto& [sym, recs] : merged) {
            auto assigned = assign_sessions(recs, spec);
            IntradaySeries series = std::move(assigned.series);
            if (cfg.resample_minutes > 0) series = resample(series, std::chrono::minutes{cfg.resample_minutes});
            nlohmann::json d;
            d["gap_records"] = assigned.stats.gap_records;
            d["holiday_records"] = assigned.stats.holiday_records;
            d["holiday_sessions"] = assigned.stats.holiday_sessions.size();
            d["short_sessions"] = assigned.stats.short_sessions.size();
            data.dropped["symbols"][sym] = d;
            if (series.sessions.empty()) throw InputError("symbol '" + sym + "' has no usable sessions");
            data.measures.push_back(MeasureSeries{sym, daily_measures(series)});
        }
        for (Measure m : {Measure::RV, Measure::RSMinus, Measure::RSPlus}) {
            auto built = build_panel(data.measures, m, cfg.transform, cfg.log_floor);
            data.dropped["unaligned_dates"] = built.dropped_dates.size();
            data.panels.emplace(m, std::move(built.panel));
        }
    } else {
        const std::pair<Measure, const std::string*> files[] = {
            {Measure::RV, &cfg.rv_panel}, {Measure::RSMinus, &cfg.rs_minus_panel}, {Measure::RSPlus, &cfg.rs_plus_panel}};
        for (const auto& [m, path] : files) {
            if (path->empty()) continue;
            try {
                RealizedPanel p = read_panel_file(*path);
                if (p.cols() < 2) throw InputError("panel needs at least two assets");
                if (p.rows() == 0) throw InputError("panel has no rows");
                data.panels.emplace(m, std::move(p));
            } catch (const ParseError& e) {
                throw InputError(*path + ": " + e.what());
            }
        }
    }
    return data;
}

}  // namespace

RunReport run_pipeline(const PipelineConfig& cfg) {
    RunReport rep;
    const auto fail_early = [&](const Error& e, std::string_view stage) {
        rep.exit_code = exit_code(e.kind());
        rep.error_json = error_report(e.kind(), stage, e.what());
        rep.stages.push_back(StageStatus{std::string(stage), false, e.what()});
        return rep;
    };
    try {
        cfg.validate();
    } catch (const Error& e) {
        return fail_early(e, "config");
    }
    LoadedData data;
    try {
        data = load_inputs(cfg);
    } catch (const Error& e) {
        return fail_early(e, "input");
    }
    rep.stages.push_back(StageStatus{"input", true, {}});

    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) {
        return fail_early(InputError("cannot create output directory '" + cfg.output_dir + "': " + ec.message()),
                          "output");
    }
    nlohmann::json files = nlohmann::json::array();
    const auto emit = [&](const std::string& name, const std::string& content) {
        write_file_atomic((fs::path(cfg.output_dir) / name).string(), content);
        files.push_back({{"name", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
        rep.files.push_back(name);
    };
    const auto stage = [&](const std::string& name, const std::function<void()>& body) {
        try {
            body();
            rep.stages.push_back(StageStatus{name, true, {}});
        } catch (const Error& e) {
            rep.stages.push_back(StageStatus{name, false, e.what()});
            if (rep.exit_code == 0) {
                rep.exit_code = exit_code(e.kind());
                rep.error_json = error_report(e.kind(), name, e.what());
            }
        }
    };

    const std::string config_text = cfg.to_text();
    emit("config.ini", config_text);

    stage("measures", [&] {
        if (!data.measures.empty()) emit("measures.csv", format_measures(data.measures));
        for (const auto& [m, panel] : data.panels) emit(std::string(measure_name(m)) + ".csv", format_panel(panel));
    });

    RollingConfig rolling = cfg.rolling;
    nlohmann::json failed_windows = nlohmann::json::object();
    stage("connect", [&] {
        const RealizedPanel& panel = data.panels.at(cfg.measure);
        const std::vector<BandSpec> bands =
            rolling.bands.empty() ? std::vector<BandSpec>{} : make_bands(rolling.bands, rolling.spectral_resolution);
        rolling.validate(panel.cols());
        const WindowAnalysis full = analyze_window(panel.values, rolling, bands, panel.assets);
        emit("table.csv", format_table(full.table));
        emit("table.json", table_json(full.table));
        emit("model.json", var_model_json(full.model, panel.assets));
        if (!bands.empty()) {
            std::string text;
            for (std::size_t b = 0; b < bands.size(); ++b) {
                std::string part = format_table(full.band_tables[b], bands[b].name);
                if (b > 0) part.erase(0, part.find('\n') + 1);
                text += part;
            }
            emit("bands_table.csv", text);
        }
        const SpilloverSeries series = rolling_connectedness(panel, rolling);
        std::size_t failed = 0;
        for (const auto& r : series.rows) failed += r.ok() ? 0 : 1;
        failed_windows["spillover"] = failed;
        emit("spillover.csv", format_spillover_series(series));
        emit("spillover.json", spillover_series_json(series));
    });

    if (data.panels.count(Measure::RSPlus) && data.panels.count(Measure::RSMinus)) {
        stage("sam", [&] {
            const RealizedPanel& plus = data.panels.at(Measure::RSPlus);
            const RealizedPanel& minus = data.panels.at(Measure::RSMinus);
            SamSeries sam;
            if (cfg.bootstrap) {
                BootstrapConfig boot = cfg.boot;
                boot.seed = cfg.seed;
                sam = bootstrap_sam_test(plus, minus, rolling, boot);
            } else {
                sam = spillover_asymmetry(plus, minus, rolling);
            }
            std::size_t failed = 0;
            for (const auto& r : sam.rows) failed += r.ok() ? 0 : 1;
            failed_windows["sam"] = failed;
            emit("sam.csv", format_sam_series(sam));
            emit("sam.json", sam_series_json(sam));
        });
    }

    nlohmann::json manifest;
    manifest["version"] = kVersion;
    manifest["config_sha256"] = sha256_hex(config_text);
    manifest["seed"] = cfg.seed;
    manifest["dropped"] = data.dropped;
    manifest["failed_windows"] = failed_windows;
    manifest["stages"] = nlohmann::json::array();
    for (const auto& s : rep.stages) {
        manifest["stages"].push_back({{"name", s.name}, {"status", s.ok ? "complete" : "failed"}, {"message", s.message}});
    }
    manifest["files"] = files;
    manifest["exit_code"] = rep.exit_code;
    if (rep.exit_code != 0) manifest["error"] = nlohmann::json::parse(rep.error_json);
    try {
        write_file_atomic((fs::path(cfg.output_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
    } catch (const Error& e) {
        return fail_early(e, "manifest");
    }
    return rep;
}

}  // namespace spillover
