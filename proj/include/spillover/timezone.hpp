#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spillover {

// UTC-offset rules for one zone, read from the system TZif database
// (TZDIR, else /usr/share/zoneinfo). Instants after the last stored
// transition follow the file's POSIX TZ footer.
class TimeZone {
public:
    /// Accepts an IANA name ("America/Chicago"), "UTC", or a fixed offset
    /// written "UTC+05:30" / "UTC-06:00".
    static TimeZone load(std::string_view name);
    static TimeZone fixed(std::chrono::seconds offset, std::string name);
    /// Parses an in-memory TZif image; exposed for tests.
    static TimeZone from_tzif(std::string_view bytes, std::string name);

    std::chrono::seconds offset_at(std::chrono::sys_seconds t) const;
    std::chrono::local_seconds to_local(std::chrono::sys_seconds t) const {
        return std::chrono::local_seconds{t.time_since_epoch() + offset_at(t)};
    }
    const std::string& name() const noexcept { return name_; }

    // One rule endpoint of a POSIX TZ string.
    struct RuleDate {
        enum class Kind { MonthWeekDay, Julian1, Julian0 } kind = Kind::MonthWeekDay;
        int month = 0;
        int week = 0;
        int weekday = 0;
        int julian = 0;
        std::int64_t time = 7200;  // local seconds after midnight
    };
    struct PosixRule {
        std::int64_t std_offset = 0;  // seconds east of UTC
        std::optional<std::int64_t> dst_offset;
        RuleDate start;
        RuleDate end;
    };
    static PosixRule parse_posix(std::string_view tz);

private:
    std::string name_;
    std::vector<std::int64_t> transitions_;
    std::vector<std::int32_t> offsets_;  // offset in effect from transitions_[i]
    std::int32_t initial_offset_ = 0;
    std::optional<PosixRule> footer_;
};

}  // namespace spillover
