#include <doctest.h>

#include <fstream>
#include <sstream>

#include "corpus_fixtures.hpp"
#include "temp_dir.hpp"
#include "trendwatch/errors.hpp"
#include "trendwatch/events.hpp"
#include "trendwatch/pipeline.hpp"
#include "trendwatch/store.hpp"

using namespace trendwatch;
using events::EventKind;
using events::EventLog;
using nlohmann::json;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << data;
}

const Timestamp kAt = Date(2020, 4, 1).midnight();

store::StoreOptions fixed_clock(std::uint64_t snapshot_every = 0) {
    store::StoreOptions o;
    o.snapshot_every = snapshot_every;
    o.clock = [] { return kAt; };
    return o;
}

store::RunConfig small_config() {
    store::RunConfig c;
    c.warmup_days = 3;
    c.alpha = 0.05;
    return c;
}

}  // namespace

TEST_CASE("event log: append, reopen, gapless seq") {
    TempDir dir;
    const auto path = dir / "events.jsonl";
    {
        auto log = EventLog::open(path);
        CHECK(log.last_seq() == 0);
        log.append(EventKind::ConfigChanged, {{"x", 1}}, kAt);
        log.append(EventKind::PostIngested, {{"x", 2}}, kAt, false);
        log.sync();
        CHECK(log.last_seq() == 2);
    }
    auto log = EventLog::open(path);
    REQUIRE(log.records().size() == 2);
    CHECK(log.records()[0].seq == 1);
    CHECK(log.records()[1].kind == EventKind::PostIngested);
    CHECK(log.records()[1].payload == json{{"x", 2}});
    CHECK(log.append(EventKind::Flagged, json::object(), kAt).seq == 3);
}

TEST_CASE("event log: a torn final record is dropped and truncated") {
    TempDir dir;
    const auto path = dir / "events.jsonl";
    {
        auto log = EventLog::open(path);
        log.append(EventKind::ConfigChanged, {{"x", 1}}, kAt);
        log.append(EventKind::PostIngested, {{"x", 2}}, kAt);
    }
    const auto whole = slurp(path);
    spit(path, whole + R"({"seq":3,"kind":"FLAG)");
    std::vector<std::string> warnings;
    {
        auto log = EventLog::open(path, &warnings);
        CHECK(log.last_seq() == 2);
        REQUIRE(warnings.size() == 1);
        CHECK(warnings[0].find("torn") != std::string::npos);
    }
    CHECK(slurp(path) == whole);
    auto log = EventLog::open(path);
    CHECK(log.append(EventKind::Flagged, json::object(), kAt).seq == 3);
}

TEST_CASE("event log: mid-file corruption and seq gaps are fatal") {
    TempDir dir;
    const auto path = dir / "events.jsonl";
    {
        auto log = EventLog::open(path);
        for (int i = 0; i < 3; ++i) log.append(EventKind::ConfigChanged, {{"i", i}}, kAt);
    }
    auto lines = slurp(path);
    SUBCASE("garbage line") {
        const auto first_nl = lines.find('\n');
        spit(path, lines.substr(0, first_nl + 1) + "{not json\n" + lines.substr(first_nl + 1));
        CHECK_THROWS_AS(EventLog::open(path), IoError);
    }
    SUBCASE("gap") {
        const auto first_nl = lines.find('\n');
        const auto second_nl = lines.find('\n', first_nl + 1);
        spit(path, lines.substr(0, first_nl + 1) + lines.substr(second_nl + 1));
        CHECK_THROWS_AS(EventLog::open(path), IoError);
    }
    SUBCASE("unknown kind") {
        spit(path, lines + R"({"seq":4,"kind":"NOPE","at":"2020-04-01T00:00:00Z","payload":{}})" + "\n");
        CHECK_THROWS_AS(EventLog::open(path), IoError);
    }
}

TEST_CASE("event log: read from a stream") {
    EventLog log;
    log.append(EventKind::ConfigChanged, {{"a", 1}}, kAt);
    log.append(EventKind::Flagged, {{"b", 2}}, kAt);
    std::stringstream ss;
    log.write_jsonl(ss);
    const auto back = EventLog::read(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[1].same_content(log.records()[1]));
    std::stringstream tail;
    log.write_jsonl(tail, 1);
    CHECK(EventLog::read(tail).front().seq == 2);
}

TEST_CASE("run config JSON and validation") {
    store::RunConfig c;
    c.alpha = 0.01;
    c.keywords = {"cure"};
    c.adjudication = review::Adjudication::AnyUnapproved;
    c.debunk_window_start = Date(2020, 5, 1);
    CHECK(store::RunConfig::from_json(c.to_json()) == c);
    CHECK(store::RunConfig::from_json(json::object()) == store::RunConfig{});
    CHECK(c.review().adjudication == review::Adjudication::AnyUnapproved);
    CHECK(c.trend().alpha == 0.01);

    auto bad = c;
    bad.alpha = 1.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = c;
    bad.jaccard_threshold = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = c;
    bad.keywords.clear();
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK_THROWS_AS(store::RunConfig::from_json(json{{"adjudication", "coin"}}), ValidationError);
}

TEST_CASE("store rejects out-of-order writes without appending") {
    store::Store s(fixed_clock());
    ingest::Post p{"p1", "garlic can cure covid", Date(2020, 3, 1).midnight(), "u"};
    CHECK_THROWS_AS(s.rollup(Date(2020, 3, 1)), ValidationError);
    s.configure(small_config(), "run");
    s.ingest_post(p);
    CHECK_THROWS_AS(s.ingest_post(p), ConflictError);

    store::Mention m;
    m.post_id = "p1";
    m.index = 1;
    m.span = {"p1", "garlic", 0, 6, "garlic"};
    m.date = p.date();
    m.indexed = true;
    CHECK_THROWS_AS(s.add_mention(m), ConflictError);
    m.index = 0;
    m.date = Date(2020, 3, 2);
    CHECK_THROWS_AS(s.add_mention(m), ValidationError);
    m.date = p.date();
    CHECK(s.add_mention(m).cluster == aggregation::ClusterId{1});
    CHECK(s.last_seq() == 3);

    s.rollup(Date(2020, 3, 1));
    CHECK_THROWS_AS(s.rollup(Date(2020, 3, 1)), ConflictError);
    ingest::Post late{"p0", "x", Date(2020, 3, 1).midnight(), "u"};
    CHECK_THROWS_AS(s.ingest_post(late), ValidationError);
    CHECK(s.flag(Date(2020, 3, 1)).empty());
    CHECK(s.last_seq() == 4);
}

TEST_CASE("store: reopen and snapshot restore reproduce the same state") {
    TempDir dir;
    const auto path = dir / "store.jsonl";
    std::string full_state;
    std::uint64_t seq = 0;
    {
        auto s = store::Store::open(path, fixed_clock(25));
        pipeline::PipelineOptions opt;
        opt.threads = 2;
        const auto r = pipeline::run_pipeline_text(fixtures::small_burst_corpus(), small_config(), *s, opt);
        CHECK(r.flags >= 1);
        const auto pending = s->read([](const store::State& st) { return st.review.pending_claims().size(); });
        REQUIRE(pending >= 1);
        const auto cluster = s->read([](const store::State& st) { return st.flags.front().cluster; });
        review::ClaimDecision d;
        d.cluster = cluster;
        d.annotator_id = "alice";
        d.category = review::Category::Unapproved;
        d.debunk_date = Date(2020, 4, 3);
        d.elapsed_seconds = 30;
        const auto res = s->decide(d);
        CHECK(res.sample.size() == 10);
        CHECK(res.decision.decided_at == kAt);
        full_state = s->read([](const store::State& st) { return st.to_json().dump(); });
        seq = s->last_seq();
    }
    CHECK(std::filesystem::exists(path.string() + ".snapshot.json"));

    SUBCASE("with snapshot") {
        auto s = store::Store::open(path, fixed_clock(25));
        CHECK(s->warnings().empty());
        CHECK(s->last_seq() == seq);
        CHECK(s->read([](const store::State& st) { return st.to_json().dump(); }) == full_state);
    }
    SUBCASE("without snapshot") {
        std::filesystem::remove(path.string() + ".snapshot.json");
        auto s = store::Store::open(path, fixed_clock(0));
        CHECK(s->read([](const store::State& st) { return st.to_json().dump(); }) == full_state);
    }
    SUBCASE("stale snapshot is ignored") {
        auto snap = json::parse(slurp(path.string() + ".snapshot.json"));
        snap["line_hash"] = snap["line_hash"].get<std::uint64_t>() ^ 1u;
        spit(path.string() + ".snapshot.json", snap.dump());
        auto s = store::Store::open(path, fixed_clock(0));
        REQUIRE(s->warnings().size() == 1);
        CHECK(s->read([](const store::State& st) { return st.to_json().dump(); }) == full_state);
    }
    SUBCASE("exported events replay to the same state") {
        auto s = store::Store::open(path, fixed_clock(0));
        std::stringstream out;
        s->export_events(out);
        const auto events = EventLog::read(out);
        auto r = store::Store::replay(events);
        CHECK(r->read([](const store::State& st) { return st.to_json().dump(); }) == full_state);
    }
    SUBCASE("state JSON round-trips") {
        auto s = store::Store::open(path, fixed_clock(0));
        const auto j = s->read([](const store::State& st) { return st.to_json(); });
        CHECK(store::State::from_json(j).to_json() == j);
    }
}

TEST_CASE("store: a killed writer loses at most the torn event") {
    TempDir dir;
    const auto path = dir / "store.jsonl";
    std::string committed;
    {
        auto s = store::Store::open(path, fixed_clock(0));
        pipeline::run_pipeline_text(fixtures::small_burst_corpus(), small_config(), *s);
        committed = s->read([](const store::State& st) { return st.to_json().dump(); });
    }
    const auto bytes = slurp(path);
    // cut inside every one of the last few records
    std::size_t cut = bytes.size() - 1;
    for (int i = 0; i < 5; ++i) {
        cut = bytes.rfind('\n', cut - 1);
        spit(path, bytes.substr(0, cut + 1 + 7));
        auto s = store::Store::open(path, fixed_clock(0));
        CHECK(s->warnings().size() == 1);
        const auto expect_seq = static_cast<std::uint64_t>(std::count(bytes.begin(), bytes.begin() + static_cast<long>(cut) + 1, '\n'));
        CHECK(s->last_seq() == expect_seq);
    }
    spit(path, bytes);
    auto s = store::Store::open(path, fixed_clock(0));
    CHECK(s->read([](const store::State& st) { return st.to_json().dump(); }) == committed);
}

TEST_CASE("store: a replayed log that disagrees with recomputation is rejected") {
    store::Store s(fixed_clock());
    pipeline::run_pipeline_text(fixtures::small_burst_corpus(), small_config(), s);
    auto events = s.events();
    for (auto& e : events) {
        if (e.kind == EventKind::RollupDone && !e.payload.at("records").empty()) {
            e.payload["records"][0]["p_value"] = 0.5;
            break;
        }
    }
    CHECK_THROWS_AS(store::Store::replay(events), ValidationError);
}
