#include <doctest.h>

#include <sstream>

#include "fisher_oracle.hpp"
#include "trendwatch/errors.hpp"
#include "trendwatch/trend.hpp"

using namespace trendwatch;
using namespace trendwatch::trend;

namespace {

const Date kStart(2020, 3, 1);

std::vector<DayCount> background(int clusters, std::uint64_t per_day) {
    std::vector<DayCount> day;
    for (int i = 1; i <= clusters; ++i) {
        day.push_back({ClusterId{static_cast<std::uint64_t>(i)}, per_day, "herb" + std::to_string(i)});
    }
    return day;
}

TrendConfig no_warmup() {
    TrendConfig c;
    c.warmup_days = 0;
    return c;
}

}  // namespace

TEST_CASE("first day of data yields one rank-1 record") {
    TrendState state;
    const std::vector<DayCount> day = {{ClusterId{1}, 4, "zinc"}};
    const auto records = daily_rollup(state, kStart, day, no_warmup());
    REQUIRE(records.size() == 1);
    CHECK(records[0].rank == 1);
    CHECK(records[0].p_value == 1.0);  // no history: C(¬D) = 0
    CHECK(state.cumulative(ClusterId{1}) == 4);
}

TEST_CASE("a cluster absent today gets p = 1 and ranks last") {
    TrendState state;
    daily_rollup(state, kStart, background(3, 5), no_warmup());
    std::vector<DayCount> day = background(2, 5);
    day.push_back({ClusterId{3}, 0, "herb3"});
    const auto records = daily_rollup(state, kStart + 1, day, no_warmup());
    REQUIRE(records.size() == 3);
    CHECK(records.back().cluster == ClusterId{3});
    CHECK(records.back().p_value == 1.0);
    CHECK_FALSE(records.back().rankable);
    CHECK(records.back().rank == 3);
}

TEST_CASE("tables are built from day and cumulative counts") {
    TrendState state;
    daily_rollup(state, kStart, background(2, 10), no_warmup());
    const std::vector<DayCount> day = {{ClusterId{1}, 7, "herb1"}, {ClusterId{2}, 3, "herb2"}};
    const auto records = daily_rollup(state, kStart + 1, day, no_warmup());
    const auto& r1 = records[0].cluster == ClusterId{1} ? records[0] : records[1];
    CHECK(r1.table == ContingencyTable{7, 10, 3, 10});
    CHECK(r1.p_value == doctest::Approx(fisher_one_tailed({7, 10, 3, 10})));
    CHECK(state.cumulative_total() == 30);
}

TEST_CASE("burst fixture: the bursting claim ranks first and is flagged") {
    TrendConfig config;
    config.warmup_days = 30;
    TrendState state;
    for (int d = 0; d < 30; ++d) CHECK(daily_rollup(state, kStart + d, background(30, 10), config).empty());

    auto day31 = background(30, 10);
    day31.push_back({ClusterId{31}, 50, "burst"});
    const auto records = daily_rollup(state, kStart + 30, day31, config);
    REQUIRE(records.size() == 31);
    CHECK(records[0].cluster == ClusterId{31});
    CHECK(records[0].rank == 1);
    CHECK(records[0].table == ContingencyTable{50, 0, 300, 9000});
    const double exact = oracle::to_double(oracle::exact_tail(50, 350, 9350, 50));
    CHECK(records[0].p_value == doctest::Approx(exact).epsilon(1e-10));
    CHECK(records[0].p_value < kDefaultAlpha);
    CHECK(records[0].novel);
    for (std::size_t i = 1; i < records.size(); ++i) {
        CHECK_FALSE(records[i].novel);
        CHECK(records[i].p_value > kDefaultAlpha);
    }
    CHECK(state.first_trending(ClusterId{31}) == kStart + 30);
    CHECK(state.in_history_before(ClusterId{31}, kStart + 31));
}

TEST_CASE("detect_novel boundaries") {
    TrendState state;
    TrendRecord r;
    r.cluster = ClusterId{1};
    r.date = kStart;
    r.p_value = 1e-6;
    const std::vector<TrendRecord> at_alpha = {r};
    CHECK(detect_novel(at_alpha, state, 1e-6).empty());
    CHECK(detect_novel(at_alpha, state, 1.1e-6).size() == 1);

    r.p_value = 1e-9;
    const std::vector<TrendRecord> fresh = {r};
    CHECK(detect_novel(fresh, state, kDefaultAlpha) == std::vector<ClusterId>{ClusterId{1}});
    CHECK_THROWS_AS(detect_novel(fresh, state, 0.0), ValidationError);
    CHECK_THROWS_AS(detect_novel(fresh, state, 1.0), ValidationError);

    auto other_day = r;
    other_day.date = kStart + 1;
    const std::vector<TrendRecord> mixed = {r, other_day};
    CHECK_THROWS_AS(detect_novel(mixed, state, kDefaultAlpha), ValidationError);
}

TEST_CASE("a cluster already in a prior top-100 list is not novel") {
    TrendState state;
    const auto config = no_warmup();
    daily_rollup(state, kStart, background(5, 10), config);
    daily_rollup(state, kStart + 1, background(5, 10), config);  // everyone enters the history
    CHECK(state.in_history_before(ClusterId{1}, kStart + 2));

    auto burst = background(5, 10);
    burst[0].count = 500;
    const auto records = daily_rollup(state, kStart + 2, burst, config);
    CHECK(records[0].cluster == ClusterId{1});
    CHECK(records[0].p_value < kDefaultAlpha);
    CHECK_FALSE(records[0].novel);
}

TEST_CASE("only the top history_depth ranks enter the history") {
    TrendConfig config = no_warmup();
    config.history_depth = 2;
    TrendState state;
    daily_rollup(state, kStart, background(4, 1), config);
    std::vector<DayCount> day = {{ClusterId{1}, 5, "a"}, {ClusterId{2}, 1, "b"}, {ClusterId{3}, 1, "c"}};
    daily_rollup(state, kStart + 1, day, config);
    CHECK(state.history().size() == 2);
    CHECK(state.history().count(ClusterId{1}) == 1);
}

TEST_CASE("min_day_count keeps thin clusters out of ranking and flags") {
    TrendConfig config = no_warmup();
    config.min_day_count = 3;
    TrendState state;
    daily_rollup(state, kStart, background(3, 10), config);
    const std::vector<DayCount> day = {{ClusterId{1}, 10, "a"}, {ClusterId{9}, 2, "new"}};
    const auto records = daily_rollup(state, kStart + 1, day, config);
    CHECK(records.back().cluster == ClusterId{9});
    CHECK_FALSE(records.back().rankable);
    CHECK_FALSE(state.history().count(ClusterId{9}));
}

TEST_CASE("warm-up days only accumulate") {
    TrendConfig config;
    config.warmup_days = 3;
    TrendState state;
    CHECK(daily_rollup(state, kStart, background(2, 1), config).empty());
    // gaps count as calendar days
    CHECK(daily_rollup(state, kStart + 2, background(2, 1), config).empty());
    CHECK(daily_rollup(state, kStart + 3, background(2, 1), config).size() == 2);
    CHECK(state.cumulative_total() == 6);
}

TEST_CASE("rollups must move forward in time") {
    TrendState state;
    daily_rollup(state, kStart + 1, background(1, 1), no_warmup());
    CHECK_THROWS_AS(daily_rollup(state, kStart + 1, background(1, 1), no_warmup()), ValidationError);
    CHECK_THROWS_AS(daily_rollup(state, kStart, background(1, 1), no_warmup()), ValidationError);
    std::vector<DayCount> twice = {{ClusterId{1}, 1, "a"}, {ClusterId{1}, 2, "a"}};
    CHECK_THROWS_AS(daily_rollup(state, kStart + 2, twice, no_warmup()), ValidationError);
}

TEST_CASE("ranking ties break on a, then canonical") {
    std::vector<TrendRecord> records(3);
    records[0].canonical = "b";
    records[0].p_value = 0.5;
    records[0].table.a = 2;
    records[1].canonical = "a";
    records[1].p_value = 0.5;
    records[1].table.a = 2;
    records[2].canonical = "z";
    records[2].p_value = 0.5;
    records[2].table.a = 3;
    rank_records(records);
    CHECK(records[0].canonical == "z");
    CHECK(records[1].canonical == "a");
    CHECK(records[2].canonical == "b");
    CHECK(records[2].rank == 3);
}

TEST_CASE("replaying the same days gives identical output and state") {
    auto run = [] {
        TrendDetector detector(no_warmup());
        std::ostringstream csv;
        write_csv_header(csv);
        for (int d = 0; d < 12; ++d) {
            auto day = background(6, 3 + static_cast<std::uint64_t>(d % 4));
            day[d % 6].count += static_cast<std::uint64_t>(d * 7);
            const auto records = detector.rollup(kStart + d, day);
            write_csv(csv, records);
        }
        return std::make_pair(csv.str(), detector.snapshot());
    };
    const auto first = run();
    const auto second = run();
    CHECK(first.first == second.first);
    CHECK(first.second == second.second);
    CHECK(TrendState::from_json(first.second.to_json()) == first.second);
}

TEST_CASE("merging clusters folds history and counts") {
    TrendState state;
    daily_rollup(state, kStart, background(2, 4), no_warmup());
    daily_rollup(state, kStart + 1, background(2, 4), no_warmup());
    state.merge(ClusterId{2}, ClusterId{1});
    CHECK(state.cumulative(ClusterId{1}) == 16);
    CHECK(state.cumulative(ClusterId{2}) == 0);
    CHECK(state.history().count(ClusterId{2}) == 0);
    CHECK(state.cumulative_total() == 16);
}

TEST_CASE("CSV export escapes canonical names") {
    TrendRecord r;
    r.date = kStart;
    r.rank = 1;
    r.canonical = "oil, \"neem\"";
    r.table = {1, 2, 3, 4};
    r.p_value = 0.25;
    r.z = trendiness(0.25);
    std::ostringstream out;
    const std::vector<TrendRecord> records = {r};
    write_csv(out, records);
    CHECK(out.str() == "2020-03-01,1,\"oil, \"\"neem\"\"\",1,3,4,10,0.25,0.6020599913279624,false\n");
    CHECK(TrendRecord::from_json(r.to_json()) == r);
}
