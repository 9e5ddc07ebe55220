#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <mutex>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendwatch/aggregation.hpp"
#include "trendwatch/events.hpp"
#include "trendwatch/ingest.hpp"
#include "trendwatch/metrics.hpp"
#include "trendwatch/review.hpp"
#include "trendwatch/stance.hpp"
#include "trendwatch/trend.hpp"

namespace trendwatch::store {

using aggregation::ClusterId;

struct RunConfig {
    double alpha = trend::kDefaultAlpha;
    double jaccard_threshold = 0.5;
    int warmup_days = 31;
    std::uint64_t min_day_count = 1;
    std::size_t history_depth = 100;
    std::size_t sample_n = 10;
    std::uint64_t seed = 20200401;
    std::vector<std::string> keywords{"cure", "prevention"};
    std::string approved_version;
    std::size_t overlap_every = 3;
    review::Adjudication adjudication = review::Adjudication::First;
    Date debunk_window_start{2020, 4, 1};
    std::string extractor = "pattern";
    std::string stance = "lexicon-baseline";

    trend::TrendConfig trend() const;
    review::ReviewConfig review() const;
    /// Throws ValidationError on out-of-range values.
    void validate() const;

    nlohmann::json to_json() const;
    /// Missing keys keep their defaults.
    static RunConfig from_json(const nlohmann::json& j);
    bool operator==(const RunConfig&) const = default;
};

struct Mention {
    std::string post_id;
    std::size_t index = 0;  // position within the post's mentions
    extraction::ClaimSpan span;
    stance::StanceLabel stance = stance::StanceLabel::NoStance;
    double confidence = 1.0;
    Date date;
    bool indexed = false;  // supporting and not approved
    ClusterId cluster;     // as assigned when added; 0 when not indexed
    std::vector<ClusterId> absorbed;

    nlohmann::json to_json() const;
    static Mention from_json(const nlohmann::json& j);
};

struct FlagInfo {
    ClusterId cluster;
    Date date;
    double p_value = 1.0;
    double z = 0.0;
    std::size_t rank = 0;
    std::string canonical;

    nlohmann::json to_json() const;
    static FlagInfo from_json(const nlohmann::json& j);
};

/// Everything derivable from the event log. Mutated only by apply().
struct State {
    std::optional<RunConfig> config;
    std::string run_id;
    std::uint64_t seq = 0;

    std::map<std::string, ingest::Post> posts;
    std::map<std::string, std::vector<Mention>> mentions;  // by post id
    aggregation::ClaimIndex index{0.5};
    std::map<ClusterId, ClusterId> alias;  // absorbed -> survivor (one hop)
    std::map<Date, std::map<ClusterId, std::uint64_t>> pending_counts;  // days not yet rolled up
    trend::TrendState trend;
    std::map<Date, std::vector<trend::TrendRecord>> records;
    std::set<Date> rolled_up;
    std::set<Date> flag_days;
    std::vector<FlagInfo> flags;
    review::ReviewQueue review;

    ClusterId resolve(ClusterId id) const;
    std::optional<Date> last_rollup() const;
    /// Posts of the (resolved) cluster as review candidates, by post id.
    std::vector<review::CandidatePost> candidates(ClusterId cluster) const;
    std::vector<trend::DayCount> day_counts(Date date) const;
    const FlagInfo* flag_info(ClusterId cluster) const;

    /// Applies one event. Throws ValidationError/ConflictError if the event
    /// does not fit the state; the state is then unspecified.
    void apply(const events::EventRecord& event);

    nlohmann::json to_json() const;
    static State from_json(const nlohmann::json& j);
};

/// Trend CSV of every rolled-up day (or just `date`), in date then rank order.
void write_trend_csv(const State& state, std::ostream& out, std::optional<Date> date = std::nullopt);

/// Flagged claims with their post counts, plus all decisions and reviews.
metrics::ReportInput report_input(const State& state);

struct StoreOptions {
    /// Write `<log>.snapshot.json` after this many events since the last one
    /// (0 disables).
    std::uint64_t snapshot_every = 5000;
    std::function<Timestamp()> clock = now_utc;
};

struct DecisionResult {
    review::ClaimDecision decision;
    std::vector<std::string> sample;
    std::uint64_t seq = 0;
};

/// Durable state: validate, append, apply. Writers are serialised;
/// readers share a lock and see only applied events.
class Store {
public:
    /// In-memory store.
    explicit Store(StoreOptions options = {});
    /// Opens or creates a log at `path`, restoring from the snapshot when it
    /// matches the log. Throws IoError on a corrupt log.
    static std::unique_ptr<Store> open(const std::filesystem::path& path, StoreOptions options = {});
    /// Replays exported events into a fresh in-memory store.
    static std::unique_ptr<Store> replay(std::span<const events::EventRecord> events, StoreOptions options = {});

    const std::vector<std::string>& warnings() const { return warnings_; }

    // --- writes (each appends exactly one event) ---
    void configure(const RunConfig& config, const std::string& run_id, bool sync = true);
    void ingest_post(const ingest::Post& post, bool sync = true);
    Mention add_mention(Mention mention, bool sync = true);
    std::vector<trend::TrendRecord> rollup(Date date, bool sync = true);
    std::vector<FlagInfo> flag(Date date, bool sync = true);
    DecisionResult decide(review::ClaimDecision decision);
    review::TweetReview review(review::TweetReview review);
    void sync();

    // --- reads ---
    template <class F>
    auto read(F&& f) const {
        std::shared_lock lock(mutex_);
        return f(static_cast<const State&>(state_));
    }
    std::uint64_t last_seq() const;
    void export_events(std::ostream& out, std::uint64_t after = 0) const;
    std::vector<events::EventRecord> events() const;
    void write_snapshot();

private:
    const events::EventRecord& commit(events::EventKind kind, nlohmann::json payload, bool sync);
    void maybe_snapshot();
    void snapshot_locked();
    std::filesystem::path snapshot_path() const;

    StoreOptions options_;
    events::EventLog log_;
    State state_;
    std::uint64_t snapshot_seq_ = 0;
    std::vector<std::string> warnings_;
    mutable std::shared_mutex mutex_;
    std::mutex write_mutex_;
};

}  // namespace trendwatch::store
