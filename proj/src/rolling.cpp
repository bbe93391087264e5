#include "spillover/rolling.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "spillover/error.hpp"
#include "spillover/numeric.hpp"

namespace spillover {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Work items are claimed through an atomic counter; each writes only its
// own output slot, so aggregation order is the index order.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    unsigned workers = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= count) return;
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(mu);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
    }
    if (failure) std::rethrow_exception(failure);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

int effective_lag(const RollingConfig& cfg) { return cfg.select_lag ? cfg.max_lag : cfg.lag; }

double total_of(const VarModel& m, std::size_t horizon) {
    const auto fevd = gfevd(ma_coefficients(m, horizon), m.sigma);
    return connectedness_table(fevd.normalized).total;
}

double total_connectedness(const Eigen::MatrixXd& window, int lag, std::size_t horizon) {
    return total_of(fit_var(window, lag), horizon);
}

// Regression rows t = first .. T-1 of one panel: the day and its own lags.
struct Tuples {
    Eigen::MatrixXd x;
    Eigen::MatrixXd y;
};

Tuples regression_tuples(const Eigen::MatrixXd& window, int lag, Eigen::Index first) {
    return Tuples{lagged_design(window, lag, first), window.bottomRows(window.rows() - first)};
}

void check_pair(const RealizedPanel& plus, const RealizedPanel& minus) {
    if (plus.dates != minus.dates) throw InputError("plus and minus panels must share identical dates");
    if (plus.assets != minus.assets) throw InputError("plus and minus panels must share identical assets");
}

std::uint64_t window_seed(std::uint64_t seed, std::size_t end_index) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(end_index), static_cast<std::uint32_t>(end_index >> 32)};
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace

void RollingConfig::validate(std::size_t n_assets) const {
    if (lag < 1) throw ConfigError("lag must be at least 1");
    if (select_lag && max_lag < 1) throw ConfigError("max_lag must be at least 1");
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    if (step < 1) throw ConfigError("step must be at least 1");
    if (spectral_resolution < 4) throw ConfigError("spectral resolution must be at least 4");
    const auto p = static_cast<std::size_t>(effective_lag(*this));
    if (window <= p || window - p <= n_assets * p + 1) {
        throw ConfigError("window of " + std::to_string(window) + " is too short for a VAR(" + std::to_string(p) +
                          ") in " + std::to_string(n_assets) + " variables");
    }
    if (!bands.empty()) make_bands(bands, spectral_resolution);
}

WindowAnalysis analyze_window(const Eigen::MatrixXd& window, const RollingConfig& cfg,
                              const std::vector<BandSpec>& bands, const std::vector<std::string>& labels) {
    const int lag = cfg.select_lag ? select_lag_aic(window, cfg.max_lag) : cfg.lag;
    WindowAnalysis out;
    out.model = fit_var(window, lag);
    const std::size_t terms = bands.empty() ? cfg.horizon : std::max(cfg.horizon, cfg.spectral_resolution);
    MaCoefficients ma = ma_coefficients(out.model, terms);
    MaCoefficients head;
    head.psi.assign(ma.psi.begin(), ma.psi.begin() + static_cast<std::ptrdiff_t>(cfg.horizon));
    out.table = connectedness_table(gfevd(head, out.model.sigma, labels));
    if (!bands.empty()) {
        const auto grid = frequency_response(ma, cfg.spectral_resolution);
        out.band_tables = band_connectedness(band_fevd(grid, out.model.sigma, bands), labels);
        CompensatedSum s;
        for (const auto& t : out.band_tables) s.add(t.total);
        out.spectral_total = s.value();
    }
    return out;
}

std::size_t window_count(std::size_t rows, std::size_t window, std::size_t step) {
    if (rows < window || step == 0) return 0;
    return (rows - window) / step + 1;
}

SpilloverSeries rolling_connectedness(const RealizedPanel& panel, const RollingConfig& cfg) {
    cfg.validate(panel.cols());
    if (panel.rows() < cfg.window) {
        throw InputError("panel has " + std::to_string(panel.rows()) + " rows, fewer than the window of " +
                         std::to_string(cfg.window));
    }
    const std::vector<BandSpec> bands =
        cfg.bands.empty() ? std::vector<BandSpec>{} : make_bands(cfg.bands, cfg.spectral_resolution);
    SpilloverSeries out;
    out.assets = panel.assets;
    for (const auto& b : bands) out.band_names.push_back(b.name);
    const std::size_t count = window_count(panel.rows(), cfg.window, cfg.step);
    out.rows.resize(count);
    const auto n = static_cast<Eigen::Index>(panel.cols());
    parallel_for(count, cfg.threads, [&](std::size_t i) {
        SpilloverRow& row = out.rows[i];
        const std::size_t first = i * cfg.step;
        row.end_index = first + cfg.window - 1;
        row.date = panel.dates[row.end_index];
        try {
            const Eigen::MatrixXd w =
                panel.values.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(cfg.window));
            const WindowAnalysis a = analyze_window(w, cfg, bands, panel.assets);
            row.total = a.table.total;
            row.from = a.table.from;
            row.to = a.table.to;
            for (const auto& t : a.band_tables) row.band_totals.push_back(t.total);
            row.spectral_total = a.spectral_total;
            row.lag = a.model.p;
            row.stable = a.model.stable;
        } catch (const Error& e) {
            row.error = e.what();
            row.total = kNaN;
            row.from = Eigen::VectorXd::Constant(n, kNaN);
            row.to = Eigen::VectorXd::Constant(n, kNaN);
            row.band_totals.assign(bands.size(), kNaN);
            row.spectral_total = kNaN;
        }
    });
    return out;
}

std::string format_spillover_series(const SpilloverSeries& s) {
    std::ostringstream os;
    os << "date,total";
    for (const auto& a : s.assets) os << ",FROM_" << a;
    for (const auto& a : s.assets) os << ",TO_" << a;
    for (const auto& b : s.band_names) os << ",band_" << b;
    if (!s.band_names.empty()) os << ",spectral_total";
    os << ",lag,stable,error\n";
    for (const auto& r : s.rows) {
        os << format_iso_date(r.date) << ',' << format_double(r.total);
        for (Eigen::Index j = 0; j < r.from.size(); ++j) os << ',' << format_double(r.from(j));
        for (Eigen::Index j = 0; j < r.to.size(); ++j) os << ',' << format_double(r.to(j));
        for (double b : r.band_totals) os << ',' << format_double(b);
        if (!s.band_names.empty()) os << ',' << format_double(r.spectral_total);
        os << ',' << (r.ok() ? std::to_string(r.lag) : "NA") << ',' << (r.ok() ? (r.stable ? "1" : "0") : "NA") << ','
           << csv_field(r.error) << '\n';
    }
    return os.str();
}

std::string spillover_series_json(const SpilloverSeries& s) {
    nlohmann::json j;
    j["assets"] = s.assets;
    j["bands"] = s.band_names;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : s.rows) {
        nlohmann::json row;
        row["date"] = format_iso_date(r.date);
        row["total"] = r.total;
        for (std::size_t a = 0; a < s.assets.size(); ++a) {
            row["from"][s.assets[a]] = r.from(static_cast<Eigen::Index>(a));
            row["to"][s.assets[a]] = r.to(static_cast<Eigen::Index>(a));
        }
        if (!s.band_names.empty()) {
            for (std::size_t b = 0; b < s.band_names.size(); ++b) row["bands"][s.band_names[b]] = r.band_totals[b];
            row["spectral_total"] = r.spectral_total;
        }
        row["lag"] = r.lag;
        row["stable"] = r.stable;
        row["error"] = r.error;
        j["rows"].push_back(std::move(row));
    }
    return j.dump(2);
}

void BootstrapConfig::validate() const {
    if (replicates < 100) throw ConfigError("bootstrap needs at least 100 replicates");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("bootstrap level must lie in (0, 1)");
    if (!(max_failure_share >= 0.0 && max_failure_share <= 1.0)) throw ConfigError("max_failure_share must lie in [0, 1]");
}

std::vector<std::size_t> circular_block_indices(std::size_t n, std::size_t block_length, std::mt19937_64& rng) {
    if (n == 0 || block_length == 0) throw ConfigError("block bootstrap needs n >= 1 and block length >= 1");
    std::uniform_int_distribution<std::size_t> start(0, n - 1);
    std::vector<std::size_t> idx;
    idx.reserve(n);
    while (idx.size() < n) {
        const std::size_t s = start(rng);
        for (std::size_t k = 0; k < block_length && idx.size() < n; ++k) idx.push_back((s + k) % n);
    }
    return idx;
}

double percentile(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return kNaN;
    const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

SamSeries spillover_asymmetry(const RealizedPanel& plus, const RealizedPanel& minus, const RollingConfig& cfg) {
    check_pair(plus, minus);
    cfg.validate(plus.cols());
    if (plus.rows() < cfg.window) throw InputError("panels are shorter than the window");
    SamSeries out;
    const std::size_t count = window_count(plus.rows(), cfg.window, cfg.step);
    out.rows.resize(count);
    parallel_for(count, cfg.threads, [&](std::size_t i) {
        SamRow& row = out.rows[i];
        const std::size_t first = i * cfg.step;
        row.end_index = first + cfg.window - 1;
        row.date = plus.dates[row.end_index];
        try {
            const auto f = static_cast<Eigen::Index>(first);
            const auto w = static_cast<Eigen::Index>(cfg.window);
            const Eigen::MatrixXd wp = plus.values.middleRows(f, w);
            const Eigen::MatrixXd wm = minus.values.middleRows(f, w);
            const int lp = cfg.select_lag ? select_lag_aic(wp, cfg.max_lag) : cfg.lag;
            const int lm = cfg.select_lag ? select_lag_aic(wm, cfg.max_lag) : cfg.lag;
            row.s_plus = total_connectedness(wp, lp, cfg.horizon);
            row.s_minus = total_connectedness(wm, lm, cfg.horizon);
            row.sam = row.s_plus - row.s_minus;
        } catch (const Error& e) {
            row.error = e.what();
            row.s_plus = row.s_minus = row.sam = kNaN;
        }
    });
    return out;
}

SamSeries bootstrap_sam_test(const RealizedPanel& plus, const RealizedPanel& minus, const RollingConfig& cfg,
                             const BootstrapConfig& boot) {
    check_pair(plus, minus);
    cfg.validate(plus.cols());
    boot.validate();
    if (plus.rows() < cfg.window) throw InputError("panels are shorter than the window");
    const std::size_t block =
        boot.block_length ? boot.block_length
                          : static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(cfg.window)) - 1e-9));
    SamSeries out;
    out.bootstrapped = true;
    out.level = boot.level;
    const std::size_t count = window_count(plus.rows(), cfg.window, cfg.step);
    out.rows.resize(count);
    const auto n = static_cast<Eigen::Index>(plus.cols());
    const auto w = static_cast<Eigen::Index>(cfg.window);
    parallel_for(count, cfg.threads, [&](std::size_t i) {
        SamRow& row = out.rows[i];
        const std::size_t first = i * cfg.step;
        row.end_index = first + cfg.window - 1;
        row.date = plus.dates[row.end_index];
        const auto f = static_cast<Eigen::Index>(first);
        const Eigen::MatrixXd wp = plus.values.middleRows(f, w);
        const Eigen::MatrixXd wm = minus.values.middleRows(f, w);
        int lp = cfg.lag;
        int lm = cfg.lag;
        try {
            if (cfg.select_lag) {
                lp = select_lag_aic(wp, cfg.max_lag);
                lm = select_lag_aic(wm, cfg.max_lag);
            }
            row.s_plus = total_connectedness(wp, lp, cfg.horizon);
            row.s_minus = total_connectedness(wm, lm, cfg.horizon);
            row.sam = row.s_plus - row.s_minus;
        } catch (const Error& e) {
            row.error = e.what();
            row.s_plus = row.s_minus = row.sam = kNaN;
            return;
        }
        // Days are resampled together with their lag vectors so block joins
        // do not create spurious lag pairs.
        const Eigen::Index skip = std::max(lp, lm);
        const Tuples tp = regression_tuples(wp, lp, skip);
        const Tuples tm = regression_tuples(wm, lm, skip);
        const auto rows = static_cast<std::size_t>(w - skip);
        std::mt19937_64 rng(window_seed(boot.seed, row.end_index));
        std::vector<double> draws;
        draws.reserve(boot.replicates);
        Tuples bp{Eigen::MatrixXd(tp.x.rows(), tp.x.cols()), Eigen::MatrixXd(tp.y.rows(), n)};
        Tuples bm{Eigen::MatrixXd(tm.x.rows(), tm.x.cols()), Eigen::MatrixXd(tm.y.rows(), n)};
        for (std::size_t b = 0; b < boot.replicates; ++b) {
            const auto idx = circular_block_indices(rows, block, rng);
            for (std::size_t t = 0; t < rows; ++t) {
                const auto dst = static_cast<Eigen::Index>(t);
                const auto src = static_cast<Eigen::Index>(idx[t]);
                bp.x.row(dst) = tp.x.row(src);
                bp.y.row(dst) = tp.y.row(src);
                bm.x.row(dst) = tm.x.row(src);
                bm.y.row(dst) = tm.y.row(src);
            }
            try {
                draws.push_back(total_of(fit_var_design(bp.x, bp.y, lp), cfg.horizon) -
                                total_of(fit_var_design(bm.x, bm.y, lm), cfg.horizon));
            } catch (const Error&) {
                ++row.failed_replicates;
            }
        }
        if (static_cast<double>(row.failed_replicates) > boot.max_failure_share * static_cast<double>(boot.replicates)) {
            row.error = "bootstrap unusable: " + std::to_string(row.failed_replicates) + " of " +
                        std::to_string(boot.replicates) + " replicates failed";
            return;
        }
        std::sort(draws.begin(), draws.end());
        const double alpha = 1.0 - boot.level;
        row.lower = percentile(draws, alpha / 2.0);
        row.upper = percentile(draws, 1.0 - alpha / 2.0);
        row.reject = !(*row.lower <= 0.0 && 0.0 <= *row.upper);
    });
    return out;
}

std::string format_sam_series(const SamSeries& s) {
    std::ostringstream os;
    os << "date,s_plus,s_minus,sam,sam_lo,sam_hi,reject,failed_replicates,error\n";
    for (const auto& r : s.rows) {
        os << format_iso_date(r.date) << ',' << format_double(r.s_plus) << ',' << format_double(r.s_minus) << ','
           << format_double(r.sam) << ',' << (r.lower ? format_double(*r.lower) : "NA") << ','
           << (r.upper ? format_double(*r.upper) : "NA") << ',';
        if (s.bootstrapped && r.lower) {
            os << (r.reject ? '1' : '0');
        } else {
            os << "NA";
        }
        os << ',' << r.failed_replicates << ',' << csv_field(r.error) << '\n';
    }
    return os.str();
}

std::string sam_series_json(const SamSeries& s) {
    nlohmann::json j;
    j["bootstrapped"] = s.bootstrapped;
    if (s.bootstrapped) j["level"] = s.level;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : s.rows) {
        nlohmann::json row;
        row["date"] = format_iso_date(r.date);
        row["s_plus"] = r.s_plus;
        row["s_minus"] = r.s_minus;
        row["sam"] = r.sam;
        row["sam_lo"] = r.lower ? nlohmann::json(*r.lower) : nlohmann::json(nullptr);
        row["sam_hi"] = r.upper ? nlohmann::json(*r.upper) : nlohmann::json(nullptr);
        row["reject"] = s.bootstrapped && r.lower ? nlohmann::json(r.reject) : nlohmann::json(nullptr);
        row["failed_replicates"] = r.failed_replicates;
        row["error"] = r.error;
        j["rows"].push_back(std::move(row));
    }
    return j.dump(2);
}

std::vector<SweepRun> sensitivity_sweep(const RealizedPanel& panel, const RollingConfig& base,
                                        const std::vector<std::size_t>& windows,
                                        const std::vector<std::size_t>& horizons, const std::vector<int>& lags) {
    std::vector<SweepRun> out;
    RollingConfig cfg = base;
    cfg.bands.clear();
    for (std::size_t w : windows) {
        RollingConfig c = cfg;
        c.window = w;
        out.push_back(SweepRun{"window", w, rolling_connectedness(panel, c)});
    }
    for (std::size_t h : horizons) {
        RollingConfig c = cfg;
        c.horizon = h;
        out.push_back(SweepRun{"horizon", h, rolling_connectedness(panel, c)});
    }
    for (int l : lags) {
        RollingConfig c = cfg;
        c.lag = l;
        c.select_lag = false;
        out.push_back(SweepRun{"lag", static_cast<std::size_t>(l), rolling_connectedness(panel, c)});
    }
    return out;
}

std::string format_sweep(const std::vector<SweepRun>& runs) {
    std::ostringstream os;
    os << "parameter,value,date,total\n";
    for (const auto& run : runs) {
        for (const auto& r : run.series.rows) {
            os << run.parameter << ',' << run.value << ',' << format_iso_date(r.date) << ',' << format_double(r.total)
               << '\n';
        }
    }
    return os.str();
}

}  // namespace spillover
