#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <thread>

#include "corpus_fixtures.hpp"
#include "trendwatch/errors.hpp"
#include "trendwatch/pipeline.hpp"
#include "trendwatch/service.hpp"

using namespace trendwatch;
using nlohmann::json;
using service::Request;
using service::Response;

namespace {

store::StoreOptions fixed_clock() {
    store::StoreOptions o;
    o.snapshot_every = 0;
    o.clock = [] { return Date(2020, 4, 2).midnight(); };
    return o;
}

store::RunConfig small_config() {
    store::RunConfig c;
    c.warmup_days = 3;
    c.alpha = 0.05;
    return c;
}

Request get(std::string path, std::map<std::string, std::string> query = {}) {
    return {"GET", std::move(path), std::move(query), "", ""};
}

Request post(std::string path, const json& body) { return {"POST", std::move(path), {}, body.dump(), ""}; }

struct Fixture {
    store::Store store{fixed_clock()};
    service::Service svc{store};
    std::uint64_t ivermectin = 0;

    Fixture() {
        pipeline::run_pipeline_text(fixtures::small_burst_corpus(), small_config(), store);
        ivermectin = store.read([](const store::State& s) {
            for (const auto& f : s.flags) {
                if (f.canonical == "ivermectin") return f.cluster.value;
            }
            return std::uint64_t{0};
        });
    }

    Response call(const Request& r) const { return svc.handle(r); }

    std::string claim_path(const char* tail) const { return "/claims/" + std::to_string(ivermectin) + tail; }
};

json unapproved(const char* annotator) {
    return {{"annotator_id", annotator},
            {"category", "UNAPPROVED"},
            {"debunk_date", "2020-04-05"},
            {"debunk_url", "https://example.org/debunk"},
            {"elapsed_seconds", 80}};
}

}  // namespace

TEST_CASE("service: empty store") {
    store::Store s;
    service::Service svc(s);
    const auto r = svc.handle(get("/trends", {{"date", "2020-03-01"}}));
    CHECK(r.status == 200);
    CHECK(r.json()["items"] == json::array());
    CHECK(svc.handle(get("/trends")).json()["date"].is_null());
    CHECK(svc.handle(get("/claims/pending")).json()["total"] == 0);
    CHECK(svc.handle(get("/tweets/pending")).json()["items"] == json::array());
    const auto m = svc.handle(get("/metrics/report"));
    CHECK(m.status == 200);
    CHECK(m.json()["violations"] == 0);
    CHECK(svc.handle(get("/export/events")).body.empty());
    CHECK(svc.handle(get("/health")).json()["seq"] == 0);
}

TEST_CASE("service: bearer token") {
    store::Store s;
    service::Service svc(s, {.token = "s3cret"});
    CHECK(svc.handle(get("/health")).status == 200);
    CHECK(svc.handle(get("/trends")).status == 401);
    auto r = get("/trends");
    r.authorization = "Bearer wrong!";
    CHECK(svc.handle(r).status == 401);
    r.authorization = "Bearer s3cret";
    CHECK(svc.handle(r).status == 200);
}

TEST_CASE("service: routing and parameter errors") {
    Fixture f;
    CHECK(f.call(get("/nope")).status == 404);
    CHECK(f.call(post("/trends", json::object())).status == 405);
    CHECK(f.call(get("/trends", {{"date", "03/01/2020"}})).status == 400);
    CHECK(f.call(get("/trends", {{"limit", "0"}})).status == 400);
    CHECK(f.call(get("/trends", {{"limit", "5000"}})).status == 400);
    CHECK(f.call(get("/trends", {{"offset", "-1"}})).status == 400);
    CHECK(f.call(get("/claims/abc/tweets/sample")).status == 400);
    CHECK(f.call(get("/claims/999/tweets/sample")).status == 404);
    CHECK(f.call(get("/metrics/report", {{"rates", "guess"}})).status == 400);
    CHECK(f.call(get("/metrics/report", {{"k", "0"}})).status == 400);
}

TEST_CASE("service: trends with top and pagination") {
    Fixture f;
    const auto all = f.call(get("/trends", {{"date", "2020-03-04"}})).json();
    REQUIRE(all["total"] == 4);
    CHECK(all["items"][0]["canonical"] == "ivermectin");
    CHECK(all["items"][0]["rank"] == 1);
    CHECK(f.call(get("/trends")).json()["date"] == "2020-03-04");
    const auto top2 = f.call(get("/trends", {{"date", "2020-03-04"}, {"top", "2"}})).json();
    CHECK(top2["total"] == 2);
    const auto page = f.call(get("/trends", {{"date", "2020-03-04"}, {"limit", "2"}, {"offset", "3"}})).json();
    CHECK(page["items"].size() == 1);
    CHECK(page["items"][0]["rank"] == 4);
    const auto warm = f.call(get("/trends", {{"date", "2020-03-02"}})).json();
    CHECK(warm["items"].empty());
    const auto csv = f.call(get("/trends", {{"date", "2020-03-04"}, {"top", "1"}, {"format", "csv"}}));
    CHECK(csv.content_type == "text/csv");
    CHECK(csv.body.rfind("date,rank,canonical,a,C(T),C(D),N,p,z,novel\n2020-03-04,1,ivermectin,12,", 0) == 0);
}

TEST_CASE("service: two-stage review over HTTP semantics") {
    Fixture f;
    REQUIRE(f.ivermectin != 0);
    const auto pending = f.call(get("/claims/pending")).json();
    REQUIRE(pending["total"].get<int>() >= 1);
    const auto& first = pending["items"][0];
    CHECK(first["canonical"] == "ivermectin");
    CHECK(first["flagged_on"] == "2020-03-04");
    CHECK(first["examples"].size() == 3);
    CHECK(first["z"].get<double>() > 0);

    // no sample before a decision
    CHECK(f.call(get(f.claim_path("/tweets/sample"))).status == 404);

    const auto seq0 = f.store.last_seq();
    auto bad = unapproved("alice");
    bad["category"] = "NOT_A_TREATMENT";
    CHECK(f.call(post(f.claim_path("/decision"), bad)).status == 400);
    bad = unapproved("alice");
    bad["debunk_date"] = "2020-03-01";  // before the window
    CHECK(f.call(post(f.claim_path("/decision"), bad)).status == 400);
    CHECK(f.call(post("/claims/999/decision", unapproved("alice"))).status == 404);
    CHECK(f.call({"POST", f.claim_path("/decision"), {}, "{nope", ""}).status == 400);
    auto mismatch = unapproved("alice");
    mismatch["cluster_id"] = 999;
    CHECK(f.call(post(f.claim_path("/decision"), mismatch)).status == 400);
    CHECK(f.store.last_seq() == seq0);

    const auto decided = f.call(post(f.claim_path("/decision"), unapproved("alice")));
    REQUIRE(decided.status == 201);
    CHECK(f.store.last_seq() == seq0 + 1);
    const auto sample = decided.json()["sample"];
    CHECK(sample.size() == 10);
    CHECK(decided.json()["decision"]["decided_at"] == "2020-04-02T00:00:00Z");

    // the first flagged entry needs one annotator: a second decision conflicts
    CHECK(f.call(post(f.claim_path("/decision"), unapproved("bob"))).status == 409);
    CHECK(f.store.last_seq() == seq0 + 1);

    const auto s2 = f.call(get(f.claim_path("/tweets/sample"))).json();
    REQUIRE(s2["items"].size() == 10);
    CHECK(s2["items"][0]["post_id"] == sample[0]);

    const auto tweets = f.call(get("/tweets/pending", {{"limit", "4"}})).json();
    CHECK(tweets["total"] == 10);
    CHECK(tweets["items"].size() == 4);
    CHECK(tweets["items"][0]["canonical"] == "ivermectin");

    int scores[10] = {5, 4, 3, 1, 2, 5, 4, 4, 1, 0};
    for (std::size_t i = 0; i < 10; ++i) {
        json body = {{"annotator_id", "carol"}, {"elapsed_seconds", 15}};
        if (scores[i] == 0) {
            body["is_duplicate"] = true;
        } else {
            body["likert"] = scores[i];
        }
        const auto path = "/tweets/" + sample[i].get<std::string>() + "/review";
        CHECK(f.call(post(path, {{"annotator_id", "carol"}, {"likert", 9}})).status == 400);
        const auto r = f.call(post(path, body));
        REQUIRE(r.status == 201);
        CHECK(r.json()["review"]["cluster_id"] == f.ivermectin);
        CHECK(f.call(post(path, body)).status == 409);
    }
    // every third sampled post needs a second annotator
    const auto left = f.call(get("/tweets/pending")).json();
    REQUIRE(left["total"] == 3);
    for (const auto& item : left["items"]) CHECK(item["required"] == 2);
    CHECK(f.call(get("/tweets/pending", {{"annotator", "carol"}})).json()["total"] == 0);
    CHECK(f.store.last_seq() == seq0 + 11);
    CHECK(f.call(post("/tweets/nope/review", {{"annotator_id", "carol"}, {"likert", 3}})).status == 404);

    const auto report = f.call(get("/metrics/report")).json();
    CHECK(report["violations"] == 5);
    const auto likert = f.call(get("/metrics/likert.csv"));
    CHECK(likert.body.rfind("score,share\n", 0) == 0);
    const auto series = f.call(get("/metrics/trends.csv")).body;
    CHECK(series.find("2020-03-04,") != std::string::npos);
}

TEST_CASE("service: replaying exported events reproduces every GET") {
    Fixture f;
    f.call(post(f.claim_path("/decision"), unapproved("alice")));
    const auto sample = f.call(get(f.claim_path("/tweets/sample"))).json()["items"];
    for (std::size_t i = 0; i < 4; ++i) {
        f.call(post("/tweets/" + sample[i]["post_id"].get<std::string>() + "/review",
                    {{"annotator_id", "dan"}, {"likert", static_cast<int>(i) + 2}, {"elapsed_seconds", 12.5}}));
    }
    const auto exported = f.call(get("/export/events"));
    CHECK(exported.content_type == "application/x-ndjson");
    std::istringstream in(exported.body);
    auto replayed = store::Store::replay(events::EventLog::read(in));
    service::Service svc2(*replayed);

    const std::vector<Request> probes = {
        get("/trends"),
        get("/trends", {{"date", "2020-03-04"}, {"format", "csv"}}),
        get("/claims/pending"),
        get(f.claim_path("/tweets/sample")),
        get("/tweets/pending"),
        get("/metrics/report"),
        get("/metrics/trends.csv"),
        get("/metrics/likert.csv"),
        get("/export/events"),
        get("/config"),
        get("/health"),
    };
    for (const auto& p : probes) {
        CAPTURE(p.path);
        const auto a = f.call(p);
        const auto b = svc2.handle(p);
        CHECK(a.status == b.status);
        CHECK(a.body == b.body);
    }

    const auto tail = f.call(get("/export/events", {{"after", "3"}})).body;
    std::istringstream tin(tail);
    CHECK(events::EventLog::read(tin).front().seq == 4);
}

TEST_CASE("service: likert guidelines match the shipped file byte for byte") {
    store::Store s;
    service::Service svc(s);
    std::ifstream in(std::string(TRENDWATCH_SOURCE_DIR) + "/config/likert_rubric.txt", std::ios::binary);
    const std::string file{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    const auto text = svc.handle(get("/guidelines/likert", {{"format", "text"}}));
    CHECK(text.body == file);
    const auto items = svc.handle(get("/guidelines/likert")).json()["items"];
    REQUIRE(items.size() == 5);
    CHECK(items[4]["score"] == 5);
    CHECK(items[4]["violation"] == true);
    CHECK(items[2]["violation"] == false);
    for (const auto& item : items) {
        const auto line = std::to_string(item["score"].get<int>()) + "\t" + item["text"].get<std::string>() + "\n";
        CHECK(file.find(line) != std::string::npos);
    }
}

TEST_CASE("service: real HTTP transport with concurrent readers") {
    Fixture f;
    service::Service svc(f.store, {.token = "tok"});
    service::HttpServer server(svc);
    const int port = server.bind("127.0.0.1", 0);
    std::thread listener([&] { server.listen(); });
    server.wait_until_ready();

    httplib::Client client("127.0.0.1", port);
    client.set_bearer_token_auth("tok");
    auto health = httplib::Client("127.0.0.1", port).Get("/health");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(httplib::Client("127.0.0.1", port).Get("/trends")->status == 401);

    std::atomic<bool> stop{false};
    std::atomic<int> reads{0};
    std::atomic<int> failures{0};
    std::vector<std::thread> readers;
    for (int t = 0; t < 4; ++t) {
        readers.emplace_back([&] {
            httplib::Client c("127.0.0.1", port);
            c.set_bearer_token_auth("tok");
            while (!stop) {
                for (const char* path : {"/trends", "/claims/pending", "/tweets/pending", "/metrics/report"}) {
                    auto r = c.Get(path);
                    if (!r || r->status != 200) ++failures;
                    ++reads;
                }
            }
        });
    }
    auto decided = client.Post(f.claim_path("/decision"), unapproved("alice").dump(), "application/json");
    REQUIRE(decided);
    CHECK(decided->status == 201);
    const auto sample = json::parse(decided->body)["sample"];
    for (const auto& id : sample) {
        auto r = client.Post("/tweets/" + id.get<std::string>() + "/review",
                             json{{"annotator_id", "erin"}, {"likert", 4}}.dump(), "application/json");
        REQUIRE(r);
        CHECK(r->status == 201);
    }
    while (reads < 40) std::this_thread::yield();
    stop = true;
    for (auto& t : readers) t.join();
    CHECK(failures == 0);

    auto report = client.Get("/metrics/report");
    REQUIRE(report);
    CHECK(json::parse(report->body)["violations"] == 10);
    server.stop();
    listener.join();

    service::HttpServer clash(svc);
    CHECK_THROWS_AS(clash.bind("256.0.0.1", 1), IoError);
}

TEST_CASE("http: a port held by another server cannot be bound") {
    store::Store s;
    service::Service svc(s);
    service::HttpServer first(svc);
    const int port = first.bind("127.0.0.1", 0);
    service::HttpServer second(svc);
    CHECK_THROWS_AS(second.bind("127.0.0.1", port), IoError);
}
