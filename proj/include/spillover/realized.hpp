#pragma once

#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spillover/calendar.hpp"
#include "spillover/ingest.hpp"

namespace spillover {

struct DailyMeasures {
    Date session_date;
    double rv = 0.0;
    double rs_minus = 0.0;
    double rs_plus = 0.0;
    std::size_t n_returns = 0;
};

/// Realized variance and signed semivariances of one session. Zero returns
/// count towards rs_plus. rv is formed as rs_minus + rs_plus, so the
/// decomposition holds exactly; it equals the plain sum of squares up to
/// rounding.
DailyMeasures realized_measures(std::span<const double> returns, Date session_date = Date{});

std::vector<DailyMeasures> daily_measures(const IntradaySeries& series);

enum class Measure { RV, RSMinus, RSPlus };
enum class Transform { Raw, Log };

Measure parse_measure(std::string_view name);
std::string_view measure_name(Measure m);
Transform parse_transform(std::string_view name);
std::string_view transform_name(Transform t);
double measure_value(const DailyMeasures& d, Measure m);

struct MeasureSeries {
    std::string asset;
    std::vector<DailyMeasures> days;  // strictly increasing dates
};

struct RealizedPanel {
    std::vector<Date> dates;
    std::vector<std::string> assets;
    Eigen::MatrixXd values;  // dates x assets
    Transform transform = Transform::Raw;

    std::size_t rows() const noexcept { return dates.size(); }
    std::size_t cols() const noexcept { return assets.size(); }
    /// Rows [first, first + count).
    RealizedPanel slice(std::size_t first, std::size_t count) const;
};

struct PanelBuild {
    RealizedPanel panel;
    std::vector<Date> dropped_dates;  // present for some but not all assets
};

/// Aligns assets on the dates common to all of them. With Transform::Log
/// every value v becomes ln(max(v, log_floor)).
PanelBuild build_panel(std::span<const MeasureSeries> series, Measure measure, Transform transform = Transform::Raw,
                       double log_floor = 1e-12);

/// First column "date" (ISO), then one column per asset.
std::string format_panel(const RealizedPanel& panel);
RealizedPanel parse_panel(std::istream& in);
RealizedPanel read_panel_file(const std::string& path);

/// Columns asset,date,rv,rs_minus,rs_plus,n_returns.
std::string format_measures(std::span<const MeasureSeries> series);
std::vector<MeasureSeries> parse_measures(std::istream& in);

}  // namespace spillover
