#pragma once

#include <chrono>
#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace trendwatch {

using Timestamp = std::chrono::sys_seconds;

/// A UTC calendar date.
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int year, unsigned month, unsigned day);

    /// Parses "YYYY-MM-DD". Returns nullopt on malformed or impossible dates.
    static std::optional<Date> parse(std::string_view s);
    static Date of(Timestamp t);

    std::chrono::sys_days days() const { return days_; }
    Timestamp midnight() const { return Timestamp{days_}; }
    std::string str() const;

    Date operator+(int n) const { return Date{days_ + std::chrono::days{n}}; }
    int operator-(Date other) const { return (days_ - other.days_).count(); }

    auto operator<=>(const Date&) const = default;

private:
    std::chrono::sys_days days_{};
};

/// Parses an RFC 3339 timestamp ("2020-04-01T12:30:00Z", "+02:00" offsets,
/// optional fractional seconds which are truncated). A missing offset is
/// read as UTC. A space is accepted in place of 'T'.
std::optional<Timestamp> parse_timestamp(std::string_view s);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);

Timestamp now_utc();

}  // namespace trendwatch
