#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendwatch/time.hpp"

namespace trendwatch::events {

enum class EventKind { PostIngested, MentionAdded, RollupDone, Flagged, ClaimDecided, TweetReviewed, ConfigChanged };

std::string_view to_string(EventKind kind);
std::optional<EventKind> parse_kind(std::string_view s);

struct EventRecord {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::ConfigChanged;
    nlohmann::json payload;
    Timestamp at{};

    /// One line of the log, without the newline.
    std::string line() const;
    static EventRecord from_json(const nlohmann::json& j);
    /// Equal ignoring `at`.
    bool same_content(const EventRecord& other) const;
};

/// Append-only JSONL event log. seq starts at 1 and has no gaps. Each
/// record is written with a single write(2); sync() makes everything
/// appended so far durable. On open, a final line without its newline (a
/// torn write) is dropped and truncated away; any other unreadable line is
/// fatal.
class EventLog {
public:
    EventLog() = default;  // in memory only
    ~EventLog();
    EventLog(EventLog&& other) noexcept;
    EventLog& operator=(EventLog&& other) noexcept;
    EventLog(const EventLog&) = delete;
    EventLog& operator=(const EventLog&) = delete;

    /// Opens or creates `path`. Warnings (dropped torn tail) are appended to
    /// `warnings` when given. Throws IoError on unreadable or corrupt logs.
    static EventLog open(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr);

    /// Reads a log without opening it for writing (e.g. an export). The
    /// stream may start at any seq but must be gapless from there.
    static std::vector<EventRecord> read(std::istream& in, std::vector<std::string>* warnings = nullptr);

    const EventRecord& append(EventKind kind, nlohmann::json payload, Timestamp at, bool sync = true);
    void sync();

    const std::vector<EventRecord>& records() const { return records_; }
    std::uint64_t last_seq() const { return records_.empty() ? 0 : records_.back().seq; }
    bool persistent() const { return fd_ >= 0; }
    const std::filesystem::path& path() const { return path_; }

    void write_jsonl(std::ostream& out, std::uint64_t after = 0) const;

private:
    int fd_ = -1;
    std::filesystem::path path_;
    std::vector<EventRecord> records_;
    bool dirty_ = false;
};

}  // namespace trendwatch::events
