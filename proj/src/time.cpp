#include "trendwatch/time.hpp"

#include <charconv>
#include <cstdio>

namespace trendwatch {

namespace {

std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t n) {
    if (pos + n > s.size()) return std::nullopt;
    int value = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') return std::nullopt;
        value = value * 10 + (s[i] - '0');
    }
    return value;
}

std::optional<std::chrono::year_month_day> parse_ymd(std::string_view s) {
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    const auto y = digits(s, 0, 4);
    const auto m = digits(s, 5, 2);
    const auto d = digits(s, 8, 2);
    if (!y || !m || !d) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{*y},
                                          std::chrono::month{static_cast<unsigned>(*m)},
                                          std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return ymd;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day)
    : days_(std::chrono::year_month_day{std::chrono::year{year}, std::chrono::month{month},
                                        std::chrono::day{day}}) {}

std::optional<Date> Date::parse(std::string_view s) {
    if (s.size() != 10) return std::nullopt;
    const auto ymd = parse_ymd(s);
    if (!ymd) return std::nullopt;
    return Date{std::chrono::sys_days{*ymd}};
}

Date Date::of(Timestamp t) { return Date{std::chrono::floor<std::chrono::days>(t)}; }

std::string Date::str() const {
    const std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
    const auto ymd = parse_ymd(s);
    if (!ymd) return std::nullopt;
    if (s.size() < 19 || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') || s[13] != ':' ||
        s[16] != ':') {
        return std::nullopt;
    }
    const auto hh = digits(s, 11, 2);
    const auto mm = digits(s, 14, 2);
    const auto ss = digits(s, 17, 2);
    // 60 is a leap second; fold it into the next minute.
    if (!hh || !mm || !ss || *hh > 23 || *mm > 59 || *ss > 60) return std::nullopt;
    std::size_t pos = 19;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        const std::size_t frac_start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == frac_start) return std::nullopt;
    }
    std::chrono::seconds offset{0};
    if (pos < s.size()) {
        const char z = s[pos];
        if (z == 'Z' || z == 'z') {
            ++pos;
        } else if (z == '+' || z == '-') {
            if (pos + 6 != s.size() || s[pos + 3] != ':') return std::nullopt;
            const auto oh = digits(s, pos + 1, 2);
            const auto om = digits(s, pos + 4, 2);
            if (!oh || !om || *oh > 23 || *om > 59) return std::nullopt;
            offset = std::chrono::hours{*oh} + std::chrono::minutes{*om};
            if (z == '-') offset = -offset;
            pos += 6;
        } else {
            return std::nullopt;
        }
    }
    if (pos != s.size()) return std::nullopt;
    const Timestamp local = std::chrono::sys_days{*ymd} + std::chrono::hours{*hh} +
                            std::chrono::minutes{*mm} + std::chrono::seconds{*ss};
    return local - offset;
}

std::string format_timestamp(Timestamp t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::hh_mm_ss hms{t - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", Date{day}.str().c_str(),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

Timestamp now_utc() {
    return std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
}

}  // namespace trendwatch
