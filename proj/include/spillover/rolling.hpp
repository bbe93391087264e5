#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spillover/connectedness.hpp"
#include "spillover/realized.hpp"
#include "spillover/spectral.hpp"
#include "spillover/varmodel.hpp"

namespace spillover {

struct RollingConfig {
    std::size_t window = 200;
    std::size_t horizon = 10;
    int lag = 2;
    bool select_lag = false;  // per-window AIC up to max_lag instead of `lag`
    int max_lag = 4;
    std::size_t step = 1;
    std::vector<DayRange> bands;          // empty: no frequency decomposition
    std::size_t spectral_resolution = 100;  // Fourier points, independent of horizon
    Measure measure = Measure::RV;
    unsigned threads = 0;  // 0: hardware concurrency

    /// Throws ConfigError; `n_assets` enters the sample-size requirement.
    void validate(std::size_t n_assets) const;
};

// Everything computed for one estimation sample.
struct WindowAnalysis {
    VarModel model;
    ConnectednessTable table;
    std::vector<ConnectednessTable> band_tables;  // empty without bands
    double spectral_total = 0.0;  // sum of band totals; the all-frequency total at the spectral resolution
};

WindowAnalysis analyze_window(const Eigen::MatrixXd& window, const RollingConfig& cfg,
                              const std::vector<BandSpec>& bands, const std::vector<std::string>& labels);

struct SpilloverRow {
    Date date;               // window end date
    std::size_t end_index = 0;
    double total = 0.0;
    Eigen::VectorXd from;
    Eigen::VectorXd to;
    std::vector<double> band_totals;
    double spectral_total = 0.0;
    int lag = 0;
    bool stable = false;
    std::string error;  // non-empty: the fit failed and the numeric fields are NaN

    bool ok() const noexcept { return error.empty(); }
};

struct SpilloverSeries {
    std::vector<std::string> assets;
    std::vector<std::string> band_names;
    std::vector<SpilloverRow> rows;
};

std::size_t window_count(std::size_t rows, std::size_t window, std::size_t step);

/// One row per window [t - window + 1, t], t advancing by cfg.step. A window
/// whose fit fails yields a tagged row and the run continues.
SpilloverSeries rolling_connectedness(const RealizedPanel& panel, const RollingConfig& cfg);

/// Columns date,total,FROM_<a>..,TO_<a>..,band_<name>..,spectral_total,lag,stable,error.
std::string format_spillover_series(const SpilloverSeries& series);
std::string spillover_series_json(const SpilloverSeries& series);

struct BootstrapConfig {
    std::size_t replicates = 500;
    std::size_t block_length = 0;  // 0: ceil(window^(1/3))
    double level = 0.95;
    std::uint64_t seed = 0;
    double max_failure_share = 0.2;

    void validate() const;
};

struct SamRow {
    Date date;
    std::size_t end_index = 0;
    double s_plus = 0.0;
    double s_minus = 0.0;
    double sam = 0.0;
    std::optional<double> lower;
    std::optional<double> upper;
    bool reject = false;
    std::size_t failed_replicates = 0;
    std::string error;

    bool ok() const noexcept { return error.empty(); }
};

struct SamSeries {
    std::vector<SamRow> rows;
    bool bootstrapped = false;
    double level = 0.0;
};

/// SAM = S+ - S- per window, each index from its own N-variable VAR.
SamSeries spillover_asymmetry(const RealizedPanel& plus, const RealizedPanel& minus, const RollingConfig& cfg);

/// Adds circular block bootstrap percentile bands. Day blocks are drawn
/// jointly for both panels, each day carrying its own lagged values into the
/// replicate regression. Each window seeds its own generator from
/// (seed, window end index), so results do not depend on step or threads.
SamSeries bootstrap_sam_test(const RealizedPanel& plus, const RealizedPanel& minus, const RollingConfig& cfg,
                             const BootstrapConfig& boot);

/// Row indices of one circular block bootstrap sample of length n.
std::vector<std::size_t> circular_block_indices(std::size_t n, std::size_t block_length, std::mt19937_64& rng);

/// Linear interpolation between order statistics; `sorted` ascending.
double percentile(const std::vector<double>& sorted, double q);

/// Columns date,s_plus,s_minus,sam,sam_lo,sam_hi,reject,failed_replicates,error.
std::string format_sam_series(const SamSeries& series);
std::string sam_series_json(const SamSeries& series);

struct SweepRun {
    std::string parameter;  // "window", "horizon" or "lag"
    std::size_t value = 0;
    SpilloverSeries series;
};

/// Reruns the rolling analysis varying one parameter at a time.
std::vector<SweepRun> sensitivity_sweep(const RealizedPanel& panel, const RollingConfig& base,
                                        const std::vector<std::size_t>& windows,
                                        const std::vector<std::size_t>& horizons, const std::vector<int>& lags);

/// Long format: parameter,value,date,total.
std::string format_sweep(const std::vector<SweepRun>& runs);

}  // namespace spillover
