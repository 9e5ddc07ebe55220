#include "trendwatch/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <fstream>
#include <iterator>
#include <mutex>

#include "trendwatch/errors.hpp"
#include "trendwatch/hash.hpp"

namespace trendwatch::store {

using events::EventKind;
using events::EventRecord;
using nlohmann::json;

namespace {

Date date_from(const json& j) {
    const auto d = Date::parse(j.get<std::string>());
    if (!d) throw ValidationError("bad date '" + j.get<std::string>() + "'");
    return *d;
}

ClusterId cluster_from(const json& j) { return ClusterId{j.get<std::uint64_t>()}; }

std::string_view adjudication_name(review::Adjudication a) {
    return a == review::Adjudication::First ? "first" : "any_unapproved";
}

review::Adjudication parse_adjudication(const std::string& s) {
    if (s == "first") return review::Adjudication::First;
    if (s == "any_unapproved") return review::Adjudication::AnyUnapproved;
    throw ValidationError("unknown adjudication rule '" + s + "'");
}

std::uint64_t line_hash(const EventRecord& e) { return fnv1a64(e.line()); }

json records_json(const std::vector<trend::TrendRecord>& records) {
    json out = json::array();
    for (const auto& r : records) out.push_back(r.to_json());
    return out;
}

std::vector<trend::TrendRecord> records_from(const json& j) {
    std::vector<trend::TrendRecord> out;
    for (const auto& r : j) out.push_back(trend::TrendRecord::from_json(r));
    return out;
}

json counts_json(const std::vector<trend::DayCount>& counts) {
    json out = json::array();
    for (const auto& c : counts) out.push_back({c.cluster.value, c.count, c.canonical});
    return out;
}

void write_file_atomically(const std::filesystem::path& path, const std::string& data) {
    const auto tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw IoError("cannot write " + tmp);
    std::size_t done = 0;
    while (done < data.size()) {
        const auto n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            throw IoError("write failed on " + tmp);
        }
        done += static_cast<std::size_t>(n);
    }
    ::fsync(fd);
    ::close(fd);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename snapshot: " + ec.message());
}

}  // namespace

// --- RunConfig -----------------------------------------------------------------

trend::TrendConfig RunConfig::trend() const {
    trend::TrendConfig c;
    c.alpha = alpha;
    c.warmup_days = warmup_days;
    c.min_day_count = min_day_count;
    c.history_depth = history_depth;
    return c;
}

review::ReviewConfig RunConfig::review() const {
    review::ReviewConfig c;
    c.overlap_every = overlap_every;
    c.sample_n = sample_n;
    c.seed = seed;
    c.debunk_window_start = debunk_window_start;
    c.adjudication = adjudication;
    return c;
}

void RunConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (!(jaccard_threshold > 0.0 && jaccard_threshold <= 1.0)) {
        throw ValidationError("jaccard_threshold must lie in (0, 1]");
    }
    if (warmup_days < 0) throw ValidationError("warmup_days must be >= 0");
    if (history_depth == 0) throw ValidationError("history_depth must be >= 1");
    if (sample_n == 0) throw ValidationError("sample_n must be >= 1");
    if (keywords.empty()) throw ValidationError("keyword set must not be empty");
}

json RunConfig::to_json() const {
    return {{"alpha", alpha},
            {"jaccard_threshold", jaccard_threshold},
            {"warmup_days", warmup_days},
            {"min_day_count", min_day_count},
            {"history_depth", history_depth},
            {"sample_n", sample_n},
            {"seed", seed},
            {"keywords", keywords},
            {"approved_version", approved_version},
            {"overlap_every", overlap_every},
            {"adjudication", adjudication_name(adjudication)},
            {"debunk_window_start", debunk_window_start.str()},
            {"extractor", extractor},
            {"stance", stance}};
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    try {
        c.alpha = j.value("alpha", c.alpha);
        c.jaccard_threshold = j.value("jaccard_threshold", c.jaccard_threshold);
        c.warmup_days = j.value("warmup_days", c.warmup_days);
        c.min_day_count = j.value("min_day_count", c.min_day_count);
        c.history_depth = j.value("history_depth", c.history_depth);
        c.sample_n = j.value("sample_n", c.sample_n);
        c.seed = j.value("seed", c.seed);
        c.keywords = j.value("keywords", c.keywords);
        c.approved_version = j.value("approved_version", c.approved_version);
        c.overlap_every = j.value("overlap_every", c.overlap_every);
        if (j.contains("adjudication")) c.adjudication = parse_adjudication(j.at("adjudication").get<std::string>());
        if (j.contains("debunk_window_start")) c.debunk_window_start = date_from(j.at("debunk_window_start"));
        c.extractor = j.value("extractor", c.extractor);
        c.stance = j.value("stance", c.stance);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad run config: ") + e.what());
    }
    return c;
}

// --- Mention / FlagInfo ----------------------------------------------------------

json Mention::to_json() const {
    json absorbed_ids = json::array();
    for (const auto& a : absorbed) absorbed_ids.push_back(a.value);
    return {{"post_id", post_id},
            {"index", index},
            {"surface", span.surface},
            {"char_start", span.char_start},
            {"char_end", span.char_end},
            {"key", span.normalized},
            {"stance", stance::to_string(stance)},
            {"confidence", confidence},
            {"date", date.str()},
            {"indexed", indexed},
            {"cluster_id", cluster.value},
            {"absorbed", absorbed_ids}};
}

Mention Mention::from_json(const json& j) {
    Mention m;
    m.post_id = j.at("post_id").get<std::string>();
    m.index = j.at("index").get<std::size_t>();
    m.span.post_id = m.post_id;
    m.span.surface = j.at("surface").get<std::string>();
    m.span.char_start = j.at("char_start").get<std::size_t>();
    m.span.char_end = j.at("char_end").get<std::size_t>();
    m.span.normalized = j.at("key").get<std::string>();
    const auto label = stance::parse_label(j.at("stance").get<std::string>());
    if (!label) throw ValidationError("bad stance label");
    m.stance = *label;
    m.confidence = j.at("confidence").get<double>();
    m.date = date_from(j.at("date"));
    m.indexed = j.at("indexed").get<bool>();
    m.cluster = cluster_from(j.at("cluster_id"));
    for (const auto& a : j.at("absorbed")) m.absorbed.push_back(cluster_from(a));
    return m;
}

json FlagInfo::to_json() const {
    return {{"cluster_id", cluster.value}, {"date", date.str()},      {"p_value", p_value},
            {"z", z},                      {"rank", rank},            {"canonical", canonical}};
}

FlagInfo FlagInfo::from_json(const json& j) {
    FlagInfo f;
    f.cluster = cluster_from(j.at("cluster_id"));
    f.date = date_from(j.at("date"));
    f.p_value = j.at("p_value").get<double>();
    f.z = j.at("z").get<double>();
    f.rank = j.at("rank").get<std::size_t>();
    f.canonical = j.at("canonical").get<std::string>();
    return f;
}

// --- State -------------------------------------------------------------------------

ClusterId State::resolve(ClusterId id) const {
    const auto it = alias.find(id);
    return it == alias.end() ? id : it->second;
}

std::optional<Date> State::last_rollup() const {
    if (rolled_up.empty()) return std::nullopt;
    return *rolled_up.rbegin();
}

std::vector<review::CandidatePost> State::candidates(ClusterId cluster) const {
    std::vector<review::CandidatePost> out;
    const auto id = resolve(cluster);
    if (!index.clusters().contains(id)) return out;
    std::set<std::string> seen;
    for (const auto& ref : index.cluster(id).posts) {
        if (!seen.insert(ref.post_id).second) continue;
        const auto it = posts.find(ref.post_id);
        if (it != posts.end()) out.push_back({it->second.post_id, it->second.text});
    }
    return out;
}

std::vector<trend::DayCount> State::day_counts(Date date) const {
    std::vector<trend::DayCount> out;
    const auto it = pending_counts.find(date);
    if (it == pending_counts.end()) return out;
    for (const auto& [id, count] : it->second) {
        out.push_back({id, count, index.cluster(id).canonical()});
    }
    return out;
}

const FlagInfo* State::flag_info(ClusterId cluster) const {
    for (const auto& f : flags) {
        if (f.cluster == cluster) return &f;
    }
    return nullptr;
}

namespace {

// Validation and mutation share one code path; `dry` stops before mutating.
struct Applier {
    State& s;
    bool dry;

    const RunConfig& config() const {
        if (!s.config) throw ValidationError("store has no run config");
        return *s.config;
    }

    void config_changed(const json& p) {
        auto cfg = RunConfig::from_json(p.at("config"));
        cfg.validate();
        if (!s.index.clusters().empty() && cfg.jaccard_threshold != s.index.threshold()) {
            throw ValidationError("jaccard_threshold cannot change once claims are indexed");
        }
        if (dry) return;
        s.run_id = p.at("run_id").get<std::string>();
        if (s.index.clusters().empty()) s.index = aggregation::ClaimIndex(cfg.jaccard_threshold);
        auto q = s.review.to_json();
        q["config"] = cfg.review().to_json();
        s.review = review::ReviewQueue::from_json(q);
        s.config = std::move(cfg);
    }

    void post_ingested(const json& p) {
        auto post = ingest::post_from_json(p);
        if (post.post_id.empty()) throw ValidationError("post without id");
        if (s.posts.contains(post.post_id)) throw ConflictError("post " + post.post_id + " already ingested");
        if (const auto last = s.last_rollup(); last && post.date() <= *last) {
            throw ValidationError("post " + post.post_id + " falls on an already rolled-up day");
        }
        if (dry) return;
        s.posts.emplace(post.post_id, std::move(post));
    }

    void mention_added(const json& p) {
        config();
        const auto m = Mention::from_json(p);
        const auto post = s.posts.find(m.post_id);
        if (post == s.posts.end()) throw NotFoundError("mention for unknown post " + m.post_id);
        if (post->second.date() != m.date) throw ValidationError("mention date differs from its post");
        const auto have = s.mentions.contains(m.post_id) ? s.mentions.at(m.post_id).size() : 0;
        if (m.index != have) throw ConflictError("mention " + std::to_string(m.index) + " of " + m.post_id +
                                                 " out of order (have " + std::to_string(have) + ")");
        const aggregation::KeyedMention km{m.span.normalized, m.post_id, m.date};
        if (m.indexed) {
            const auto expect = s.index.preview(km);
            if (expect.cluster != m.cluster || expect.absorbed != m.absorbed) {
                throw ValidationError("mention cluster assignment does not replay");
            }
        } else if (m.cluster.value != 0 || !m.absorbed.empty()) {
            throw ValidationError("unindexed mention carries a cluster");
        }
        if (dry) return;
        if (m.indexed) {
            s.index.apply(km, m.cluster, m.absorbed);
            for (const auto& from : m.absorbed) {
                for (auto& [a, survivor] : s.alias) {
                    if (survivor == from) survivor = m.cluster;
                }
                s.alias[from] = m.cluster;
                s.trend.merge(from, m.cluster);
                for (auto& [day, counts] : s.pending_counts) {
                    const auto it = counts.find(from);
                    if (it == counts.end()) continue;
                    counts[m.cluster] += it->second;
                    counts.erase(from);
                }
            }
            ++s.pending_counts[m.date][m.cluster];
        }
        s.mentions[m.post_id].push_back(m);
    }

    void rollup_done(const json& p) {
        const auto& cfg = config();
        const auto date = date_from(p.at("date"));
        if (const auto last = s.last_rollup(); last && date <= *last) {
            throw ConflictError("day " + date.str() + " already rolled up");
        }
        if (!s.pending_counts.empty() && s.pending_counts.begin()->first < date) {
            throw ValidationError("day " + s.pending_counts.begin()->first.str() + " has not been rolled up");
        }
        const auto counts = s.day_counts(date);
        if (counts_json(counts) != p.at("counts")) throw ValidationError("rollup counts do not replay");
        auto trend = s.trend;
        auto records = trend::daily_rollup(trend, date, counts, cfg.trend());
        if (records_json(records) != p.at("records")) throw ValidationError("rollup records do not replay");
        if (dry) return;
        s.trend = std::move(trend);
        s.records[date] = std::move(records);
        s.rolled_up.insert(date);
        s.pending_counts.erase(date);
    }

    void flagged(const json& p) {
        const auto date = date_from(p.at("date"));
        if (!s.rolled_up.contains(date)) throw ValidationError("day " + date.str() + " not rolled up");
        if (s.flag_days.contains(date)) throw ConflictError("day " + date.str() + " already flagged");
        std::vector<FlagInfo> expected;
        if (const auto it = s.records.find(date); it != s.records.end()) {
            for (const auto& r : it->second) {
                if (r.novel) expected.push_back({r.cluster, date, r.p_value, r.z, r.rank, r.canonical});
            }
        }
        json expect = json::array();
        for (const auto& f : expected) expect.push_back(f.to_json());
        if (expect != p.at("flags")) throw ValidationError("flags do not replay");
        if (expected.empty()) throw ValidationError("nothing to flag on " + date.str());
        if (dry) return;
        std::vector<ClusterId> ids;
        for (const auto& f : expected) ids.push_back(f.cluster);
        s.review.enqueue_flagged(ids, date,
                                 [&](ClusterId id) { return s.index.clusters().contains(s.resolve(id)); });
        s.flags.insert(s.flags.end(), expected.begin(), expected.end());
        s.flag_days.insert(date);
    }

    void claim_decided(const json& p) {
        const auto& cfg = config();
        const auto decision = review::ClaimDecision::from_json(p.at("decision"));
        decision.validate(cfg.debunk_window_start);
        const bool spawns = s.review.check_decision(decision);
        const auto sample = p.at("sample").get<std::vector<std::string>>();
        if (spawns) {
            const auto posts = s.candidates(decision.cluster);
            const auto expect = review::sample_tweets(decision.cluster, posts, cfg.sample_n, cfg.seed);
            if (expect != sample) throw ValidationError("stage-2 sample does not replay");
        } else if (!sample.empty()) {
            throw ValidationError("decision carries a sample it does not open");
        }
        if (dry) return;
        s.review.apply_decision(decision, sample);
    }

    void tweet_reviewed(const json& p) {
        const auto r = review::TweetReview::from_json(p);
        r.validate();
        if (s.review.check_review(r) != r.cluster) throw ValidationError("review cluster mismatch");
        if (dry) return;
        s.review.apply_review(r);
    }

    void run(EventKind kind, const json& p) {
        switch (kind) {
            case EventKind::ConfigChanged: return config_changed(p);
            case EventKind::PostIngested: return post_ingested(p);
            case EventKind::MentionAdded: return mention_added(p);
            case EventKind::RollupDone: return rollup_done(p);
            case EventKind::Flagged: return flagged(p);
            case EventKind::ClaimDecided: return claim_decided(p);
            case EventKind::TweetReviewed: return tweet_reviewed(p);
        }
    }
};

void check_event(State& s, EventKind kind, const json& payload) {
    try {
        Applier{s, true}.run(kind, payload);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed payload: ") + e.what());
    }
}

}  // namespace

void State::apply(const EventRecord& event) {
    if (event.seq != seq + 1) {
        throw ValidationError("event seq " + std::to_string(event.seq) + " after " + std::to_string(seq));
    }
    try {
        Applier{*this, false}.run(event.kind, event.payload);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed payload: ") + e.what());
    }
    seq = event.seq;
}

json State::to_json() const {
    json j;
    j["config"] = config ? config->to_json() : json(nullptr);
    j["run_id"] = run_id;
    j["seq"] = seq;
    json ps = json::array();
    for (const auto& [id, post] : posts) ps.push_back(ingest::to_json(post));
    j["posts"] = std::move(ps);
    json ms = json::array();
    for (const auto& [id, list] : mentions) {
        for (const auto& m : list) ms.push_back(m.to_json());
    }
    j["mentions"] = std::move(ms);
    j["index"] = index.to_json();
    json al = json::array();
    for (const auto& [from, to] : alias) al.push_back({from.value, to.value});
    j["alias"] = std::move(al);
    json pc = json::array();
    for (const auto& [day, counts] : pending_counts) {
        for (const auto& [id, n] : counts) pc.push_back({day.str(), id.value, n});
    }
    j["pending_counts"] = std::move(pc);
    j["trend"] = trend.to_json();
    json rs = json::object();
    for (const auto& [day, list] : records) rs[day.str()] = records_json(list);
    j["records"] = std::move(rs);
    json ru = json::array();
    for (const auto& d : rolled_up) ru.push_back(d.str());
    j["rolled_up"] = std::move(ru);
    json fd = json::array();
    for (const auto& d : flag_days) fd.push_back(d.str());
    j["flag_days"] = std::move(fd);
    json fl = json::array();
    for (const auto& f : flags) fl.push_back(f.to_json());
    j["flags"] = std::move(fl);
    j["review"] = review.to_json();
    return j;
}

State State::from_json(const json& j) {
    State s;
    try {
        if (!j.at("config").is_null()) s.config = RunConfig::from_json(j.at("config"));
        s.run_id = j.at("run_id").get<std::string>();
        s.seq = j.at("seq").get<std::uint64_t>();
        for (const auto& p : j.at("posts")) {
            auto post = ingest::post_from_json(p);
            s.posts.emplace(post.post_id, std::move(post));
        }
        for (const auto& mj : j.at("mentions")) {
            auto m = Mention::from_json(mj);
            s.mentions[m.post_id].push_back(std::move(m));
        }
        s.index = aggregation::ClaimIndex::from_json(j.at("index"));
        for (const auto& a : j.at("alias")) s.alias[cluster_from(a.at(0))] = cluster_from(a.at(1));
        for (const auto& c : j.at("pending_counts")) {
            s.pending_counts[date_from(c.at(0))][cluster_from(c.at(1))] = c.at(2).get<std::uint64_t>();
        }
        s.trend = trend::TrendState::from_json(j.at("trend"));
        for (const auto& [day, list] : j.at("records").items()) s.records[date_from(json(day))] = records_from(list);
        for (const auto& d : j.at("rolled_up")) s.rolled_up.insert(date_from(d));
        for (const auto& d : j.at("flag_days")) s.flag_days.insert(date_from(d));
        for (const auto& f : j.at("flags")) s.flags.push_back(FlagInfo::from_json(f));
        s.review = review::ReviewQueue::from_json(j.at("review"));
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad state snapshot: ") + e.what());
    }
    return s;
}

void write_trend_csv(const State& state, std::ostream& out, std::optional<Date> date) {
    trend::write_csv_header(out);
    for (const auto& [day, list] : state.records) {
        if (date && day != *date) continue;
        trend::write_csv(out, list);
    }
}

metrics::ReportInput report_input(const State& state) {
    metrics::ReportInput in;
    for (const auto& f : state.flags) {
        const auto posts = state.candidates(f.cluster).size();
        in.claims.push_back({f.cluster, f.canonical, f.date, f.p_value, posts});
    }
    in.decisions = state.review.all_decisions();
    in.reviews = state.review.all_reviews();
    if (state.config) in.adjudication = state.config->adjudication;
    return in;
}

// --- Store -------------------------------------------------------------------------

Store::Store(StoreOptions options) : options_(std::move(options)) {
    if (!options_.clock) options_.clock = now_utc;
}

std::filesystem::path Store::snapshot_path() const { return log_.path().string() + ".snapshot.json"; }

std::unique_ptr<Store> Store::open(const std::filesystem::path& path, StoreOptions options) {
    auto store = std::make_unique<Store>(std::move(options));
    store->log_ = events::EventLog::open(path, &store->warnings_);
    const auto& recs = store->log_.records();

    const auto snap = store->snapshot_path();
    if (std::filesystem::exists(snap)) {
        try {
            std::ifstream in(snap);
            const auto j = json::parse(in);
            const auto seq = j.at("seq").get<std::uint64_t>();
            if (seq == 0 || seq > recs.size() || j.at("line_hash").get<std::uint64_t>() != line_hash(recs[seq - 1])) {
                store->warnings_.push_back("snapshot does not match the event log; replaying from the start");
            } else {
                store->state_ = State::from_json(j.at("state"));
                store->snapshot_seq_ = seq;
            }
        } catch (const std::exception& e) {
            store->warnings_.push_back(std::string("unreadable snapshot ignored: ") + e.what());
            State fresh;
            store->state_ = std::move(fresh);
        }
    }
    for (std::size_t i = store->state_.seq; i < recs.size(); ++i) {
        try {
            store->state_.apply(recs[i]);
        } catch (const Error& e) {
            throw IoError(path.string() + ": event " + std::to_string(recs[i].seq) + " does not replay: " + e.what());
        }
    }
    return store;
}

std::unique_ptr<Store> Store::replay(std::span<const EventRecord> events, StoreOptions options) {
    options.snapshot_every = 0;
    auto store = std::make_unique<Store>(std::move(options));
    for (const auto& e : events) {
        if (e.seq != store->log_.last_seq() + 1) throw ValidationError("event stream has a seq gap at " + std::to_string(e.seq));
        store->state_.apply(e);
        store->log_.append(e.kind, e.payload, e.at, false);
    }
    return store;
}

const EventRecord& Store::commit(EventKind kind, json payload, bool sync_now) {
    check_event(state_, kind, payload);
    const EventRecord* rec = nullptr;
    {
        std::unique_lock lock(mutex_);
        rec = &log_.append(kind, std::move(payload), options_.clock(), false);
        state_.apply(*rec);
    }
    if (sync_now) {
        log_.sync();
        maybe_snapshot();
    }
    return *rec;
}

void Store::configure(const RunConfig& config, const std::string& run_id, bool sync_now) {
    std::lock_guard w(write_mutex_);
    commit(EventKind::ConfigChanged, {{"config", config.to_json()}, {"run_id", run_id}}, sync_now);
}

void Store::ingest_post(const ingest::Post& post, bool sync_now) {
    std::lock_guard w(write_mutex_);
    commit(EventKind::PostIngested, ingest::to_json(post), sync_now);
}

Mention Store::add_mention(Mention mention, bool sync_now) {
    std::lock_guard w(write_mutex_);
    mention.cluster = ClusterId{};
    mention.absorbed.clear();
    if (mention.indexed) {
        const auto plan = state_.index.preview({mention.span.normalized, mention.post_id, mention.date});
        mention.cluster = plan.cluster;
        mention.absorbed = plan.absorbed;
    }
    commit(EventKind::MentionAdded, mention.to_json(), sync_now);
    return mention;
}

std::vector<trend::TrendRecord> Store::rollup(Date date, bool sync_now) {
    std::lock_guard w(write_mutex_);
    if (!state_.config) throw ValidationError("store has no run config");
    if (const auto last = state_.last_rollup(); last && date <= *last) {
        throw ConflictError("day " + date.str() + " already rolled up");
    }
    const auto counts = state_.day_counts(date);
    auto trend = state_.trend;
    auto records = trend::daily_rollup(trend, date, counts, state_.config->trend());
    commit(EventKind::RollupDone, {{"date", date.str()}, {"counts", counts_json(counts)}, {"records", records_json(records)}},
           sync_now);
    return records;
}

std::vector<FlagInfo> Store::flag(Date date, bool sync_now) {
    std::lock_guard w(write_mutex_);
    std::vector<FlagInfo> out;
    if (const auto it = state_.records.find(date); it != state_.records.end()) {
        for (const auto& r : it->second) {
            if (r.novel) out.push_back({r.cluster, date, r.p_value, r.z, r.rank, r.canonical});
        }
    }
    if (out.empty()) return out;
    json flags = json::array();
    for (const auto& f : out) flags.push_back(f.to_json());
    commit(EventKind::Flagged, {{"date", date.str()}, {"flags", flags}}, sync_now);
    return out;
}

DecisionResult Store::decide(review::ClaimDecision decision) {
    std::lock_guard w(write_mutex_);
    if (!state_.config) throw ValidationError("store has no run config");
    if (decision.decided_at == Timestamp{}) decision.decided_at = options_.clock();
    decision.validate(state_.config->debunk_window_start);
    std::vector<std::string> sample;
    if (state_.review.check_decision(decision)) {
        sample = review::sample_tweets(decision.cluster, state_.candidates(decision.cluster), state_.config->sample_n,
                                       state_.config->seed);
    }
    const auto& rec = commit(EventKind::ClaimDecided, {{"decision", decision.to_json()}, {"sample", sample}}, true);
    return {decision, sample, rec.seq};
}

review::TweetReview Store::review(review::TweetReview r) {
    std::lock_guard w(write_mutex_);
    if (r.reviewed_at == Timestamp{}) r.reviewed_at = options_.clock();
    r.validate();
    r.cluster = state_.review.check_review(r);
    commit(EventKind::TweetReviewed, r.to_json(), true);
    return r;
}

void Store::sync() {
    std::lock_guard w(write_mutex_);
    log_.sync();
    maybe_snapshot();
}

std::uint64_t Store::last_seq() const {
    std::shared_lock lock(mutex_);
    return state_.seq;
}

void Store::export_events(std::ostream& out, std::uint64_t after) const {
    std::shared_lock lock(mutex_);
    log_.write_jsonl(out, after);
}

std::vector<EventRecord> Store::events() const {
    std::shared_lock lock(mutex_);
    return log_.records();
}

void Store::maybe_snapshot() {
    if (options_.snapshot_every == 0 || !log_.persistent()) return;
    if (state_.seq - snapshot_seq_ < options_.snapshot_every) return;
    snapshot_locked();
}

void Store::write_snapshot() {
    std::lock_guard w(write_mutex_);
    snapshot_locked();
}

void Store::snapshot_locked() {
    if (!log_.persistent() || state_.seq == 0) return;
    log_.sync();
    json j;
    {
        std::shared_lock lock(mutex_);
        j = {{"seq", state_.seq}, {"line_hash", line_hash(log_.records()[state_.seq - 1])}, {"state", state_.to_json()}};
    }
    write_file_atomically(snapshot_path(), j.dump());
    snapshot_seq_ = state_.seq;
}

}  // namespace trendwatch::store
