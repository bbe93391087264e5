#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "spillover/error.hpp"
#include "spillover/ingest.hpp"
#include "spillover/realized.hpp"
#include "spillover/rolling.hpp"

namespace spillover {

inline constexpr std::string_view kVersion = "1.0.0";

// Declarative description of a full run, read from an INI-style file with
// sections [input] [session] [measures] [rolling] [bands] [bootstrap]
// [output] [run].
struct PipelineConfig {
    // [input]: either raw price files or pre-computed panels.
    std::vector<std::string> prices;
    ColumnMapping columns;
    std::string rv_panel;
    std::string rs_minus_panel;
    std::string rs_plus_panel;

    // [session]
    std::string session_start = "17:00";
    std::string session_end = "16:00";
    std::string timezone = "America/Chicago";
    bool federal_holidays = true;
    bool year_end_holidays = true;
    std::string holidays_file;
    int resample_minutes = 0;  // 0: off

    // [measures]
    Measure measure = Measure::RV;
    Transform transform = Transform::Raw;
    double log_floor = 1e-12;

    // [rolling] and [bands]
    RollingConfig rolling;

    // [bootstrap]
    bool bootstrap = true;
    BootstrapConfig boot;

    std::string output_dir = "out";
    std::uint64_t seed = 0;

    static PipelineConfig parse(std::string_view text);
    static PipelineConfig load(const std::string& path);
    /// Canonical text form; parse(to_text()) reproduces the config.
    std::string to_text() const;
    /// "section.key=value".
    void apply_override(std::string_view assignment);
    /// Structural checks; paths are checked by run_pipeline.
    void validate() const;

    bool operator==(const PipelineConfig&) const;
};

std::chrono::minutes parse_clock(std::string_view hhmm);
SessionSpec build_session_spec(const PipelineConfig& cfg);

/// "a,b;c,d" -> 2x2 matrix, rows separated by ';'.
Eigen::MatrixXd parse_matrix(std::string_view text);
std::vector<std::string> split_list(std::string_view text, char sep = ',');

std::string sha256_hex(std::string_view data);

int exit_code(ErrorKind kind);
std::string_view status_name(ErrorKind kind);
/// {"status": ..., "stage": ..., "message": ...}
std::string error_report(ErrorKind kind, std::string_view stage, std::string_view message);

struct StageStatus {
    std::string name;
    bool ok = true;
    std::string message;
};

struct RunReport {
    int exit_code = 0;
    std::vector<StageStatus> stages;
    std::string error_json;  // set when exit_code != 0
    std::vector<std::string> files;  // written, relative to the output directory
};

/// Validates config and inputs before writing anything; then runs every
/// stage, writing files atomically. A failing later stage leaves earlier
/// outputs in place and is recorded in manifest.json.
RunReport run_pipeline(const PipelineConfig& cfg);

}  // namespace spillover
