#include "trendwatch/events.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "trendwatch/errors.hpp"

namespace trendwatch::events {

namespace {

constexpr std::pair<EventKind, std::string_view> kKinds[] = {
    {EventKind::PostIngested, "POST_INGESTED"}, {EventKind::MentionAdded, "MENTION_ADDED"},
    {EventKind::RollupDone, "ROLLUP_DONE"},     {EventKind::Flagged, "FLAGGED"},
    {EventKind::ClaimDecided, "CLAIM_DECIDED"}, {EventKind::TweetReviewed, "TWEET_REVIEWED"},
    {EventKind::ConfigChanged, "CONFIG_CHANGED"},
};

std::string errno_text() { return std::strerror(errno); }

struct Parsed {
    std::vector<EventRecord> records;
    std::size_t good_bytes = 0;  // prefix holding complete records
    bool torn = false;
};

Parsed parse(const std::string& data, const std::string& origin, bool from_one) {
    Parsed out;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < data.size()) {
        const auto nl = data.find('\n', pos);
        ++line_no;
        if (nl == std::string::npos) {
            out.torn = true;
            break;
        }
        const std::string_view line(data.data() + pos, nl - pos);
        if (!line.empty()) {
            EventRecord rec;
            try {
                rec = EventRecord::from_json(nlohmann::json::parse(line));
            } catch (const std::exception& e) {
                throw IoError(origin + ":" + std::to_string(line_no) + ": corrupt event: " + e.what());
            }
            const std::uint64_t expected =
                out.records.empty() ? (from_one ? 1 : std::max<std::uint64_t>(rec.seq, 1)) : out.records.back().seq + 1;
            if (rec.seq != expected) {
                throw IoError(origin + ":" + std::to_string(line_no) + ": expected seq " + std::to_string(expected) +
                              ", found " + std::to_string(rec.seq));
            }
            out.records.push_back(std::move(rec));
        }
        pos = nl + 1;
        out.good_bytes = pos;
    }
    return out;
}

}  // namespace

std::string_view to_string(EventKind kind) {
    for (const auto& [k, name] : kKinds) {
        if (k == kind) return name;
    }
    return "CONFIG_CHANGED";
}

std::optional<EventKind> parse_kind(std::string_view s) {
    for (const auto& [k, name] : kKinds) {
        if (name == s) return k;
    }
    return std::nullopt;
}

std::string EventRecord::line() const {
    nlohmann::json j = {{"seq", seq}, {"kind", to_string(kind)}, {"at", format_timestamp(at)}, {"payload", payload}};
    return j.dump();
}

EventRecord EventRecord::from_json(const nlohmann::json& j) {
    EventRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    const auto kind = parse_kind(j.at("kind").get<std::string>());
    if (!kind) throw ValidationError("unknown event kind " + j.at("kind").get<std::string>());
    r.kind = *kind;
    const auto at = parse_timestamp(j.at("at").get<std::string>());
    if (!at) throw ValidationError("bad event timestamp");
    r.at = *at;
    r.payload = j.at("payload");
    return r;
}

bool EventRecord::same_content(const EventRecord& other) const {
    return seq == other.seq && kind == other.kind && payload == other.payload;
}

EventLog::~EventLog() {
    if (fd_ >= 0) {
        if (dirty_) ::fsync(fd_);
        ::close(fd_);
    }
}

EventLog::EventLog(EventLog&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)),
      path_(std::move(other.path_)),
      records_(std::move(other.records_)),
      dirty_(std::exchange(other.dirty_, false)) {}

EventLog& EventLog::operator=(EventLog&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = std::exchange(other.fd_, -1);
        path_ = std::move(other.path_);
        records_ = std::move(other.records_);
        dirty_ = std::exchange(other.dirty_, false);
    }
    return *this;
}

EventLog EventLog::open(const std::filesystem::path& path, std::vector<std::string>* warnings) {
    EventLog log;
    log.path_ = path;
    log.fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (log.fd_ < 0) throw IoError("cannot open event log " + path.string() + ": " + errno_text());

    std::string data;
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read event log " + path.string());
        data.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    auto parsed = parse(data, path.string(), true);
    if (parsed.torn) {
        if (warnings) {
            warnings->push_back("dropped a torn final record (" + std::to_string(data.size() - parsed.good_bytes) +
                                " bytes) from " + path.string());
        }
        if (::ftruncate(log.fd_, static_cast<off_t>(parsed.good_bytes)) != 0) {
            throw IoError("cannot truncate torn event log tail: " + errno_text());
        }
        ::fsync(log.fd_);
    }
    log.records_ = std::move(parsed.records);
    return log;
}

std::vector<EventRecord> EventLog::read(std::istream& in, std::vector<std::string>* warnings) {
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    auto parsed = parse(data, "event stream", false);
    if (parsed.torn && warnings) warnings->push_back("dropped a torn final record from the event stream");
    return std::move(parsed.records);
}

const EventRecord& EventLog::append(EventKind kind, nlohmann::json payload, Timestamp at, bool sync_now) {
    EventRecord rec;
    rec.seq = last_seq() + 1;
    rec.kind = kind;
    rec.payload = std::move(payload);
    rec.at = at;
    if (fd_ >= 0) {
        const std::string line = rec.line() + "\n";
        std::size_t done = 0;
        while (done < line.size()) {
            const auto n = ::write(fd_, line.data() + done, line.size() - done);
            if (n < 0) {
                if (errno == EINTR) continue;
                throw IoError("event log write failed: " + errno_text());
            }
            done += static_cast<std::size_t>(n);
        }
        dirty_ = true;
        if (sync_now) sync();
    }
    records_.push_back(std::move(rec));
    return records_.back();
}

void EventLog::sync() {
    if (fd_ < 0 || !dirty_) return;
    if (::fsync(fd_) != 0) throw IoError("event log fsync failed: " + errno_text());
    dirty_ = false;
}

void EventLog::write_jsonl(std::ostream& out, std::uint64_t after) const {
    for (const auto& r : records_) {
        if (r.seq > after) out << r.line() << '\n';
    }
}

}  // namespace trendwatch::events
