#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spillover/csv.hpp"
#include "spillover/pipeline.hpp"
#include "spillover/regress.hpp"
#include "spillover/rolling.hpp"
#include "spillover/synth.hpp"

using namespace spillover;

namespace {

struct SessionOpts {
    std::vector<std::string> inputs;
    std::string timestamp = "timestamp", symbol = "symbol", price = "price";
    std::string start = "17:00", end = "16:00", zone = "America/Chicago";
    std::string holidays;
    bool no_federal = false, no_year_end = false;
    std::string resample = "off";

    void add(CLI::App* app) {
        app->add_option("--input,-i", inputs, "Price files (timestamp, symbol, price)")->required();
        app->add_option("--timestamp-column", timestamp);
        app->add_option("--symbol-column", symbol);
        app->add_option("--price-column", price);
        app->add_option("--session-start", start, "Local session open HH:MM");
        app->add_option("--session-end", end, "Local session close HH:MM (inclusive)");
        app->add_option("--timezone", zone, "IANA zone, UTC or UTC+HH:MM");
        app->add_option("--holidays", holidays, "File of ISO dates to exclude");
        app->add_flag("--no-federal-holidays", no_federal);
        app->add_flag("--no-year-end-holidays", no_year_end);
        app->add_option("--resample", resample, "Grid step in minutes, or off");
    }

    PipelineConfig config() const {
        PipelineConfig cfg;
        cfg.prices = inputs;
        cfg.columns = ColumnMapping{timestamp, symbol, price, 0};
        cfg.session_start = start;
        cfg.session_end = end;
        cfg.timezone = zone;
        cfg.holidays_file = holidays;
        cfg.federal_holidays = !no_federal;
        cfg.year_end_holidays = !no_year_end;
        cfg.apply_override("session.resample=" + resample);
        return cfg;
    }
};

struct RollingOpts {
    RollingConfig cfg;
    std::string bands;

    void add(CLI::App* app, bool with_bands) {
        app->add_option("--window,-w", cfg.window, "Rolling window length in days");
        app->add_option("--horizon,-H", cfg.horizon, "Forecast horizon");
        app->add_option("--lag,-p", cfg.lag, "VAR lag order");
        app->add_flag("--select-lag", cfg.select_lag, "Choose the lag by AIC in each window");
        app->add_option("--max-lag", cfg.max_lag);
        app->add_option("--step", cfg.step);
        app->add_option("--threads", cfg.threads, "0: all cores");
        if (with_bands) {
            app->add_option("--bands", bands, "Day ranges, e.g. 1-5,5-20,20-300");
            app->add_option("--resolution", cfg.spectral_resolution, "Fourier grid points");
        }
    }

    RollingConfig resolved() const {
        RollingConfig out = cfg;
        if (!bands.empty()) out.bands = parse_day_ranges(bands);
        return out;
    }
};

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
    } else {
        write_file_atomic(path, content);
    }
}

std::vector<IntradaySeries> load_sessions(const SessionOpts& opts) {
    const PipelineConfig cfg = opts.config();
    const SessionSpec spec = build_session_spec(cfg);
    std::vector<IntradaySeries> out;
    std::set<std::string> seen;
    for (const auto& path : opts.inputs) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open '" + path + "'");
        ParsedRecords parsed = parse_price_records(in, cfg.columns);
        for (const auto& [sym, recs] : parsed.by_symbol) {
            if (!seen.insert(sym).second) throw InputError("symbol '" + sym + "' appears in more than one file");
            auto assigned = assign_sessions(recs, spec);
            IntradaySeries s = std::move(assigned.series);
            if (cfg.resample_minutes > 0) s = resample(s, std::chrono::minutes{cfg.resample_minutes});
            std::cerr << sym << ": " << s.sessions.size() << " sessions, " << assigned.stats.gap_records
                      << " records outside session hours, " << assigned.stats.holiday_sessions.size()
                      << " holiday sessions dropped\n";
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<Eigen::MatrixXd> parse_phi(const std::string& text, Eigen::Index n) {
    std::vector<Eigen::MatrixXd> phi;
    for (const auto& part : split_list(text, '|')) {
        Eigen::MatrixXd m = parse_matrix(part);
        if (m.rows() != n || m.cols() != n) throw ConfigError("coefficient matrices must match sigma's size");
        phi.push_back(std::move(m));
    }
    return phi;
}

// Reads a date-keyed table; rows whose listed columns hold NA are skipped.
std::map<std::string, std::vector<double>> read_keyed(const std::string& path,
                                                      const std::vector<std::string>& columns) {
    const DelimitedTable t = read_delimited_file(path);
    const std::size_t date_col = t.column("date");
    std::vector<std::size_t> idx;
    for (const auto& c : columns) idx.push_back(t.column(c));
    std::map<std::string, std::vector<double>> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        std::vector<double> vals;
        bool ok = true;
        for (std::size_t i : idx) {
            const std::string& cell = t.rows[r][i];
            if (cell == "NA" || cell.empty()) {
                ok = false;
                break;
            }
            try {
                std::size_t used = 0;
                vals.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError(t.line_numbers[r], "non-numeric value '" + cell + "'");
            }
        }
        if (ok) out[t.rows[r][date_col]] = std::move(vals);
    }
    return out;
}

int report(const Error& e, const std::string& stage) {
    std::cerr << error_report(e.kind(), stage, e.what()) << '\n';
    return exit_code(e.kind());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Volatility connectedness from intraday prices"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    // ingest
    SessionOpts ingest_opts;
    std::string ingest_out;
    auto* ingest = app.add_subcommand("ingest", "Label prices with trading sessions");
    ingest_opts.add(ingest);
    ingest->add_option("--output,-o", ingest_out, "Session file (default stdout)");

    // measures
    SessionOpts measures_opts;
    std::string sessions_file;
    std::string measures_dir = ".";
    std::string transform = "raw";
    double log_floor = 1e-12;
    auto* measures = app.add_subcommand("measures", "Daily realized variance and semivariances");
    measures->add_option("--sessions", sessions_file, "Session file written by ingest");
    measures_opts.add(measures);
    measures->get_option("--input")->required(false);
    measures->add_option("--output-dir,-o", measures_dir);
    measures->add_option("--transform", transform, "raw or log");
    measures->add_option("--log-floor", log_floor);

    // connect
    std::string connect_panel, connect_out, connect_table, connect_model, connect_json, connect_sweep;
    std::vector<std::size_t> sweep_windows, sweep_horizons;
    std::vector<int> sweep_lags;
    RollingOpts connect_opts;
    auto* connect = app.add_subcommand("connect", "Rolling total and directional connectedness");
    connect->add_option("--panel", connect_panel, "Panel file (date + assets)")->required();
    connect_opts.add(connect, false);
    connect->add_option("--output,-o", connect_out, "Spillover series (default stdout)");
    connect->add_option("--json", connect_json, "Spillover series as JSON");
    connect->add_option("--table", connect_table, "Full-sample connectedness table");
    connect->add_option("--model-json", connect_model, "Full-sample VAR estimates");
    connect->add_option("--sweep", connect_sweep, "Sensitivity sweep output");
    connect->add_option("--sweep-windows", sweep_windows)->delimiter(',');
    connect->add_option("--sweep-horizons", sweep_horizons)->delimiter(',');
    connect->add_option("--sweep-lags", sweep_lags)->delimiter(',');

    // bands
    std::string bands_panel, bands_out, bands_table, bands_json;
    RollingOpts bands_opts;
    bands_opts.bands = "1-5,5-20,20-300";
    auto* bands = app.add_subcommand("bands", "Frequency-band connectedness");
    bands->add_option("--panel", bands_panel)->required();
    bands_opts.add(bands, true);
    bands->add_option("--output,-o", bands_out, "Rolling band series (default stdout)");
    bands->add_option("--json", bands_json);
    bands->add_option("--table", bands_table, "Full-sample per-band tables");

    // sam
    std::string sam_plus, sam_minus, sam_out, sam_json;
    RollingOpts sam_opts;
    BootstrapConfig boot;
    bool no_bootstrap = false;
    auto* sam = app.add_subcommand("sam", "Spillover asymmetry from semivariance panels");
    sam->add_option("--plus", sam_plus, "Positive semivariance panel")->required();
    sam->add_option("--minus", sam_minus, "Negative semivariance panel")->required();
    sam_opts.add(sam, false);
    sam->add_flag("--no-bootstrap", no_bootstrap);
    sam->add_option("--replicates,-B", boot.replicates);
    sam->add_option("--block-length", boot.block_length, "0: cube root of the window");
    sam->add_option("--level", boot.level);
    sam->add_option("--seed", boot.seed);
    sam->add_option("--output,-o", sam_out);
    sam->add_option("--json", sam_json);

    // simulate
    std::string sim_phi, sim_sigma, sim_out, sim_assets, sim_start = "2004-01-02";
    DgpSpec dgp;
    auto* simulate = app.add_subcommand("simulate", "Simulate a Gaussian VAR panel");
    simulate->add_option("--phi", sim_phi, "Coefficient matrices 'a,b;c,d|e,f;g,h'; empty for white noise");
    simulate->add_option("--sigma", sim_sigma, "Innovation covariance 'a,b;c,d'")->required();
    simulate->add_option("--length,-T", dgp.length);
    simulate->add_option("--burn-in", dgp.burn_in);
    simulate->add_option("--seed", dgp.seed);
    simulate->add_option("--assets", sim_assets, "Comma-separated names");
    simulate->add_option("--start-date", sim_start);
    simulate->add_option("--output,-o", sim_out);

    // regress
    std::string reg_y, reg_ycol = "total", reg_x, reg_out, reg_json;
    std::vector<std::string> reg_xcols;
    bool standardize = false;
    auto* regress = app.add_subcommand("regress", "OLS of a connectedness series on regressors");
    regress->add_option("--y", reg_y, "Series file with a date column")->required();
    regress->add_option("--y-column", reg_ycol);
    regress->add_option("--x", reg_x, "Regressor file with a date column")->required();
    regress->add_option("--x-columns", reg_xcols)->delimiter(',')->required();
    regress->add_flag("--standardize", standardize);
    regress->add_option("--output,-o", reg_out);
    regress->add_option("--json", reg_json);

    // run
    std::string run_config;
    std::vector<std::string> overrides;
    auto* run = app.add_subcommand("run", "Full pipeline from a configuration file");
    run->add_option("--config,-c", run_config)->required();
    run->add_option("--set", overrides, "section.key=value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << error_report(ErrorKind::Config, "arguments", e.what()) << '\n';
        return exit_code(ErrorKind::Config);
    }

    std::string stage = app.get_subcommands().front()->get_name();
    try {
        if (*ingest) {
            emit(ingest_out, format_sessions(load_sessions(ingest_opts)));
        } else if (*measures) {
            std::vector<IntradaySeries> series;
            if (!sessions_file.empty()) {
                if (!measures_opts.inputs.empty()) throw ConfigError("use either --sessions or --input");
                std::ifstream in(sessions_file);
                if (!in) throw InputError("cannot open '" + sessions_file + "'");
                series = parse_sessions(in);
            } else if (!measures_opts.inputs.empty()) {
                series = load_sessions(measures_opts);
            } else {
                throw ConfigError("measures needs --sessions or --input");
            }
            std::vector<MeasureSeries> daily;
            for (const auto& s : series) daily.push_back(MeasureSeries{s.symbol, daily_measures(s)});
            const Transform tr = parse_transform(transform);
            std::filesystem::create_directories(measures_dir);
            const auto dir = std::filesystem::path(measures_dir);
            write_file_atomic((dir / "measures.csv").string(), format_measures(daily));
            for (Measure m : {Measure::RV, Measure::RSMinus, Measure::RSPlus}) {
                auto built = build_panel(daily, m, tr, log_floor);
                write_file_atomic((dir / (std::string(measure_name(m)) + ".csv")).string(), format_panel(built.panel));
                if (m == Measure::RV && !built.dropped_dates.empty()) {
                    std::cerr << built.dropped_dates.size() << " dates not shared by every asset dropped\n";
                }
            }
        } else if (*connect || *bands) {
            const bool banded = bands->parsed();
            const RollingConfig cfg = banded ? bands_opts.resolved() : connect_opts.resolved();
            const RealizedPanel panel = read_panel_file(banded ? bands_panel : connect_panel);
            cfg.validate(panel.cols());
            const std::vector<BandSpec> specs =
                cfg.bands.empty() ? std::vector<BandSpec>{} : make_bands(cfg.bands, cfg.spectral_resolution);
            const std::string& table_path = banded ? bands_table : connect_table;
            if (!table_path.empty() || (!banded && !connect_model.empty())) {
                const WindowAnalysis full = analyze_window(panel.values, cfg, specs, panel.assets);
                if (!banded && !connect_model.empty()) emit(connect_model, var_model_json(full.model, panel.assets));
                if (!table_path.empty()) {
                    std::string text;
                    if (banded) {
                        for (std::size_t b = 0; b < specs.size(); ++b) {
                            std::string part = format_table(full.band_tables[b], specs[b].name);
                            if (b > 0) part.erase(0, part.find('\n') + 1);
                            text += part;
                        }
                    } else {
                        text = format_table(full.table);
                    }
                    emit(table_path, text);
                }
            }
            const SpilloverSeries series = rolling_connectedness(panel, cfg);
            emit(banded ? bands_out : connect_out, format_spillover_series(series));
            const std::string& json_path = banded ? bands_json : connect_json;
            if (!json_path.empty()) emit(json_path, spillover_series_json(series));
            if (!banded && !connect_sweep.empty()) {
                emit(connect_sweep, format_sweep(sensitivity_sweep(panel, cfg, sweep_windows, sweep_horizons, sweep_lags)));
            }
        } else if (*sam) {
            const RollingConfig cfg = sam_opts.resolved();
            const RealizedPanel plus = read_panel_file(sam_plus);
            const RealizedPanel minus = read_panel_file(sam_minus);
            cfg.validate(plus.cols());
            const SamSeries result =
                no_bootstrap ? spillover_asymmetry(plus, minus, cfg) : bootstrap_sam_test(plus, minus, cfg, boot);
            emit(sam_out, format_sam_series(result));
            if (!sam_json.empty()) emit(sam_json, sam_series_json(result));
        } else if (*simulate) {
            dgp.sigma = parse_matrix(sim_sigma);
            dgp.phi = parse_phi(sim_phi, dgp.sigma.rows());
            std::vector<std::string> names = split_list(sim_assets);
            if (names.empty()) {
                for (Eigen::Index i = 0; i < dgp.dim(); ++i) names.push_back("A" + std::to_string(i + 1));
            }
            if (static_cast<Eigen::Index>(names.size()) != dgp.dim()) {
                throw ConfigError("--assets must name every variable");
            }
            emit(sim_out, format_panel(simulate_panel(dgp, names, parse_iso_date(sim_start))));
        } else if (*regress) {
            const auto ys = read_keyed(reg_y, {reg_ycol});
            const auto xs = read_keyed(reg_x, reg_xcols);
            std::vector<std::string> dates;
            for (const auto& [d, v] : ys) {
                if (xs.count(d)) dates.push_back(d);
            }
            if (dates.empty()) throw InputError("no dates shared by the series and the regressors");
            Eigen::VectorXd y(static_cast<Eigen::Index>(dates.size()));
            Eigen::MatrixXd x(static_cast<Eigen::Index>(dates.size()), static_cast<Eigen::Index>(reg_xcols.size()));
            for (std::size_t r = 0; r < dates.size(); ++r) {
                const auto row = static_cast<Eigen::Index>(r);
                y(row) = ys.at(dates[r])[0];
                const auto& xv = xs.at(dates[r]);
                for (std::size_t c = 0; c < xv.size(); ++c) x(row, static_cast<Eigen::Index>(c)) = xv[c];
            }
            const OlsResult fit = ols_regress(y, x, reg_xcols, standardize);
            emit(reg_out, format_ols(fit));
            if (!reg_json.empty()) emit(reg_json, ols_json(fit));
        } else if (*run) {
            stage = "config";
            PipelineConfig cfg = PipelineConfig::load(run_config);
            for (const auto& o : overrides) cfg.apply_override(o);
            const RunReport rep = run_pipeline(cfg);
            for (const auto& s : rep.stages) {
                std::cerr << s.name << ": " << (s.ok ? "complete" : "failed: " + s.message) << '\n';
            }
            if (rep.exit_code != 0) std::cerr << rep.error_json << '\n';
            return rep.exit_code;
        }
    } catch (const ParseError& e) {
        return report(e, stage);
    } catch (const Error& e) {
        return report(e, stage);
    } catch (const std::filesystem::filesystem_error& e) {
        return report(InputError(e.what()), stage);
    }
    return 0;
}
