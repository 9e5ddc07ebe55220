#include <doctest.h>

#include "corpus_fixtures.hpp"
#include "trendwatch/errors.hpp"
#include "trendwatch/exchange.hpp"
#include "trendwatch/pipeline.hpp"

using namespace trendwatch;
using nlohmann::json;

namespace {

const Timestamp kAt = Date(2020, 4, 5).midnight();

store::StoreOptions fixed() {
    store::StoreOptions o;
    o.snapshot_every = 0;
    o.clock = [] { return kAt; };
    return o;
}

store::RunConfig small_config() {
    store::RunConfig c;
    c.warmup_days = 3;
    c.alpha = 0.05;
    return c;
}

std::unique_ptr<store::Store> reviewed_store() {
    auto s = std::make_unique<store::Store>(fixed());
    pipeline::run_pipeline_text(fixtures::small_burst_corpus(), small_config(), *s);
    const auto cluster = s->read([](const store::State& st) { return st.flags.at(0).cluster; });
    review::ClaimDecision d;
    d.cluster = cluster;
    d.annotator_id = "alice";
    d.category = review::Category::Unapproved;
    d.debunk_date = Date(2020, 4, 2);
    d.elapsed_seconds = 25;
    const auto res = s->decide(d);
    int i = 0;
    for (const auto& post : res.sample) {
        review::TweetReview r;
        r.post_id = post;
        r.cluster = cluster;
        r.annotator_id = "bob";
        r.likert = 1 + (i++ % 5);
        r.reviewed_at = kAt;
        r.elapsed_seconds = 10;
        s->review(r);
    }
    return s;
}

}  // namespace

TEST_CASE("exchange: claim outcome JSON round-trips") {
    metrics::ClaimOutcome c;
    c.cluster = aggregation::ClusterId{7};
    c.canonical = "bleach";
    c.flagged_on = Date(2020, 3, 9);
    c.p_value = 1e-9;
    c.posts = 40;
    const auto back = exchange::claim_outcome_from_json(exchange::to_json(c));
    CHECK(back.cluster == c.cluster);
    CHECK(back.canonical == c.canonical);
    CHECK(back.flagged_on == c.flagged_on);
    CHECK(back.p_value == c.p_value);
    CHECK(back.posts == c.posts);
    CHECK_THROWS_AS(exchange::claim_outcome_from_json(json{{"cluster_id", 1}}), ValidationError);
    CHECK_THROWS_AS(exchange::report_input_from_export(json::array()), ValidationError);
}

TEST_CASE("exchange: metrics from an export equal metrics from the store") {
    auto s = reviewed_store();
    const auto doc = s->read([](const store::State& st) { return exchange::export_reviews(st); });
    const auto from_store = metrics::build_report(s->read([](const store::State& st) { return store::report_input(st); }));
    const auto from_export = metrics::build_report(exchange::report_input_from_export(json::parse(doc.dump())));
    CHECK(from_store.to_json() == from_export.to_json());
    CHECK(from_store.violations == 4);
}

TEST_CASE("exchange: import into a replica is complete and idempotent") {
    auto s = reviewed_store();
    const auto doc = s->read([](const store::State& st) { return exchange::export_reviews(st); });
    const auto data = review::ReviewExport::from_json(doc);

    store::Store replica(fixed());
    pipeline::run_pipeline_text(fixtures::small_burst_corpus(), small_config(), replica);
    const auto first = exchange::import_reviews(replica, data);
    CHECK(first.errors.empty());
    CHECK(first.applied == data.decisions.size() + data.reviews.size());
    CHECK(first.duplicates == 0);
    CHECK(replica.read([](const store::State& st) { return st.to_json(); }) ==
          s->read([](const store::State& st) { return st.to_json(); }));

    const auto seq = replica.last_seq();
    const auto again = exchange::import_reviews(replica, data);
    CHECK(again.applied == 0);
    CHECK(again.duplicates == first.applied);
    CHECK(replica.last_seq() == seq);
}

TEST_CASE("exchange: rejected items are reported, the rest applied") {
    store::Store s(fixed());
    pipeline::run_pipeline_text(fixtures::small_burst_corpus(), small_config(), s);
    review::ReviewExport data;
    review::ClaimDecision unknown;
    unknown.cluster = aggregation::ClusterId{999};
    unknown.annotator_id = "alice";
    unknown.category = review::Category::Approved;
    unknown.decided_at = kAt;
    data.decisions.push_back(unknown);
    auto ok = unknown;
    ok.cluster = s.read([](const store::State& st) { return st.flags.at(0).cluster; });
    data.decisions.push_back(ok);
    const auto r = exchange::import_reviews(s, data);
    CHECK(r.applied == 1);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].find("999") != std::string::npos);
}
