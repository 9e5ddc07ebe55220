#include "trendwatch/service.hpp"

#include <httplib.h>

#include <charconv>
#include <sstream>

#include "trendwatch/errors.hpp"
#include "trendwatch/metrics.hpp"
#include "trendwatch/trend.hpp"

namespace trendwatch::service {

using nlohmann::json;

namespace {

struct HttpError : Error {
    int status;
    HttpError(int s, const std::string& what) : Error(what), status(s) {}
};

Response json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

Response error_response(int status, const std::string& message) {
    return json_response(status, {{"error", message}, {"status", status}});
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (const char c : path) {
        if (c == '/') {
            if (!cur.empty()) parts.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) parts.push_back(std::move(cur));
    return parts;
}

std::uint64_t parse_uint(const std::string& s, const std::string& what) {
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size() || s.empty()) {
        throw ValidationError(what + " must be a non-negative integer");
    }
    return v;
}

std::optional<std::string> param(const Request& r, const std::string& name) {
    const auto it = r.query.find(name);
    if (it == r.query.end()) return std::nullopt;
    return it->second;
}

std::optional<Date> date_param(const Request& r, const std::string& name) {
    const auto v = param(r, name);
    if (!v) return std::nullopt;
    const auto d = Date::parse(*v);
    if (!d) throw ValidationError(name + " must be YYYY-MM-DD");
    return d;
}

aggregation::ClusterId cluster_param(const std::string& s) {
    const auto v = parse_uint(s, "claim id");
    if (v == 0) throw ValidationError("claim id must be positive");
    return aggregation::ClusterId{v};
}

bool token_matches(const std::string& given, const std::string& expected) {
    if (given.size() != expected.size()) return false;
    unsigned char diff = 0;
    for (std::size_t i = 0; i < given.size(); ++i) diff |= static_cast<unsigned char>(given[i] ^ expected[i]);
    return diff == 0;
}

json parse_body(const std::string& body) {
    try {
        auto j = json::parse(body);
        if (!j.is_object()) throw ValidationError("request body must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("request body is not JSON: ") + e.what());
    }
}

struct Page {
    std::size_t limit;
    std::size_t offset;

    template <class T>
    json slice(const std::vector<T>& items) const {
        json out = json::array();
        for (std::size_t i = offset; i < items.size() && i < offset + limit; ++i) out.push_back(items[i]);
        return out;
    }
};

}  // namespace

Service::Service(store::Store& store, ServiceOptions options) : store_(store), options_(std::move(options)) {}

Response Service::handle(const Request& req) const {
    try {
        const auto parts = split_path(req.path);
        const bool get = req.method == "GET";
        const bool post = req.method == "POST";
        auto route = [&](std::initializer_list<const char*> pattern) {
            if (parts.size() != pattern.size()) return false;
            std::size_t i = 0;
            for (const char* p : pattern) {
                if (std::string_view(p) != "*" && parts[i] != p) return false;
                ++i;
            }
            return true;
        };
        auto need = [&](bool ok) {
            if (!ok) throw HttpError(405, "method not allowed");
        };

        if (route({"health"})) {
            need(get);
            return store_.read([](const store::State& s) {
                return json_response(200, {{"status", "ok"}, {"seq", s.seq}, {"run_id", s.run_id}});
            });
        }
        if (!options_.token.empty() && !token_matches(req.authorization, "Bearer " + options_.token)) {
            return error_response(401, "missing or invalid bearer token");
        }

        const Page page{[&] {
                            const auto v = param(req, "limit");
                            const auto n = v ? parse_uint(*v, "limit") : options_.default_limit;
                            if (n == 0 || n > options_.max_limit) {
                                throw ValidationError("limit must be in 1.." + std::to_string(options_.max_limit));
                            }
                            return static_cast<std::size_t>(n);
                        }(),
                        [&] {
                            const auto v = param(req, "offset");
                            return v ? static_cast<std::size_t>(parse_uint(*v, "offset")) : std::size_t{0};
                        }()};

        if (route({"config"})) {
            need(get);
            return store_.read([](const store::State& s) {
                return json_response(200, {{"run_id", s.run_id}, {"config", s.config ? s.config->to_json() : json(nullptr)}});
            });
        }

        if (route({"trends"})) {
            need(get);
            const auto date = date_param(req, "date");
            const auto top = param(req, "top");
            const std::size_t top_k = top ? static_cast<std::size_t>(parse_uint(*top, "top")) : SIZE_MAX;
            const bool csv = param(req, "format").value_or("json") == "csv";
            return store_.read([&](const store::State& s) {
                std::optional<Date> day = date;
                if (!day && !s.records.empty()) day = s.records.rbegin()->first;
                std::vector<trend::TrendRecord> items;
                if (day) {
                    if (const auto it = s.records.find(*day); it != s.records.end()) {
                        for (const auto& r : it->second) {
                            if (r.rank <= top_k) items.push_back(r);
                        }
                    }
                }
                std::vector<trend::TrendRecord> window;
                for (std::size_t i = page.offset; i < items.size() && i < page.offset + page.limit; ++i) {
                    window.push_back(items[i]);
                }
                if (csv) {
                    std::ostringstream out;
                    trend::write_csv_header(out);
                    trend::write_csv(out, window);
                    return Response{200, "text/csv", out.str()};
                }
                json arr = json::array();
                for (const auto& r : window) arr.push_back(r.to_json());
                return json_response(200, {{"date", day ? json(day->str()) : json(nullptr)},
                                           {"total", items.size()},
                                           {"limit", page.limit},
                                           {"offset", page.offset},
                                           {"items", arr}});
            });
        }

        if (route({"claims", "pending"})) {
            need(get);
            const auto annotator = param(req, "annotator");
            return store_.read([&](const store::State& s) {
                std::vector<json> items;
                for (const auto& e : s.review.claims()) {
                    if (!e.pending()) continue;
                    json decided_by = json::array();
                    bool mine = false;
                    for (const auto& d : e.decisions) {
                        decided_by.push_back(d.annotator_id);
                        mine = mine || (annotator && d.annotator_id == *annotator);
                    }
                    if (mine) continue;
                    const auto id = s.resolve(e.cluster);
                    const auto* flag = s.flag_info(e.cluster);
                    const auto& cluster = s.index.cluster(id);
                    json examples = json::array();
                    for (const auto& c : s.candidates(e.cluster)) {
                        if (examples.size() == 3) break;
                        examples.push_back({{"post_id", c.post_id}, {"text", c.text}});
                    }
                    items.push_back({{"cluster_id", e.cluster.value},
                                     {"canonical", cluster.canonical()},
                                     {"flagged_on", e.flagged_on.str()},
                                     {"first_seen", cluster.first_seen().str()},
                                     {"p_value", flag ? flag->p_value : 1.0},
                                     {"z", flag ? flag->z : 0.0},
                                     {"rank", flag ? flag->rank : 0},
                                     {"position", e.position},
                                     {"required", e.required},
                                     {"decided_by", decided_by},
                                     {"examples", examples}});
                }
                return json_response(200, {{"total", items.size()},
                                           {"limit", page.limit},
                                           {"offset", page.offset},
                                           {"items", page.slice(items)}});
            });
        }

        if (route({"claims", "*", "decision"})) {
            need(post);
            const auto id = cluster_param(parts[1]);
            auto body = parse_body(req.body);
            if (body.contains("cluster_id") && review::ClaimDecision::from_json(body).cluster != id) {
                throw ValidationError("cluster_id in body does not match the path");
            }
            body["cluster_id"] = id.value;
            const auto result = store_.decide(review::ClaimDecision::from_json(body));
            return json_response(201, {{"decision", result.decision.to_json()}, {"sample", result.sample}, {"seq", result.seq}});
        }

        if (route({"claims", "*", "tweets", "sample"})) {
            need(get);
            const auto id = cluster_param(parts[1]);
            return store_.read([&](const store::State& s) {
                const auto it = s.review.samples().find(id);
                if (it == s.review.samples().end()) throw NotFoundError("no stage-2 sample for claim " + id.str());
                json items = json::array();
                for (const auto& post_id : it->second) {
                    const auto& entry = s.review.tweets().at({post_id, id});
                    json reviews = json::array();
                    for (const auto& r : entry.reviews) reviews.push_back(r.to_json());
                    items.push_back({{"post_id", post_id},
                                     {"text", s.posts.at(post_id).text},
                                     {"required", entry.required},
                                     {"pending", entry.pending()},
                                     {"reviews", reviews}});
                }
                return json_response(200, {{"cluster_id", id.value},
                                           {"canonical", s.index.cluster(s.resolve(id)).canonical()},
                                           {"items", items}});
            });
        }

        if (route({"tweets", "pending"})) {
            need(get);
            const auto annotator = param(req, "annotator");
            return store_.read([&](const store::State& s) {
                std::vector<json> items;
                std::set<aggregation::ClusterId> done;
                for (const auto& claim : s.review.claims()) {
                    if (!done.insert(claim.cluster).second) continue;
                    const auto sample = s.review.samples().find(claim.cluster);
                    if (sample == s.review.samples().end()) continue;
                    for (const auto& post_id : sample->second) {
                        const auto& entry = s.review.tweets().at({post_id, claim.cluster});
                        if (!entry.pending()) continue;
                        json reviewed_by = json::array();
                        bool mine = false;
                        for (const auto& r : entry.reviews) {
                            reviewed_by.push_back(r.annotator_id);
                            mine = mine || (annotator && r.annotator_id == *annotator);
                        }
                        if (mine) continue;
                        items.push_back({{"post_id", post_id},
                                         {"cluster_id", claim.cluster.value},
                                         {"canonical", s.index.cluster(s.resolve(claim.cluster)).canonical()},
                                         {"text", s.posts.at(post_id).text},
                                         {"required", entry.required},
                                         {"reviewed_by", reviewed_by}});
                    }
                }
                return json_response(200, {{"total", items.size()},
                                           {"limit", page.limit},
                                           {"offset", page.offset},
                                           {"items", page.slice(items)}});
            });
        }

        if (route({"tweets", "*", "review"})) {
            need(post);
            auto body = parse_body(req.body);
            if (body.contains("post_id") && body["post_id"] != parts[1]) {
                throw ValidationError("post_id in body does not match the path");
            }
            body["post_id"] = parts[1];
            const auto stored = store_.review(review::TweetReview::from_json(body));
            return json_response(201, {{"review", stored.to_json()}});
        }

        if (parts.size() == 2 && parts[0] == "metrics") {
            need(get);
            auto input = store_.read([](const store::State& s) { return store::report_input(s); });
            if (const auto k = param(req, "k")) {
                input.ks.clear();
                std::stringstream ss(*k);
                for (std::string item; std::getline(ss, item, ',');) {
                    const auto v = parse_uint(item, "k");
                    if (v == 0) throw ValidationError("k must be positive");
                    input.ks.push_back(static_cast<std::size_t>(v));
                }
            }
            const auto rates = param(req, "rates").value_or("measured");
            if (rates != "measured" && rates != "fallback") throw ValidationError("rates must be measured or fallback");
            input.measured_rates = rates == "measured";
            input.from = date_param(req, "from");
            input.to = date_param(req, "to");
            const auto report = metrics::build_report(input);
            if (parts[1] == "report") return json_response(200, report.to_json());
            std::ostringstream out;
            if (parts[1] == "trends.csv") {
                metrics::write_trend_series_csv(out, report.cumulative_trends);
                return {200, "text/csv", out.str()};
            }
            if (parts[1] == "likert.csv") {
                metrics::write_likert_csv(out, report.likert_distribution);
                return {200, "text/csv", out.str()};
            }
            throw NotFoundError("no route " + req.path);
        }

        if (route({"export", "events"})) {
            need(get);
            const auto after = param(req, "after");
            std::ostringstream out;
            store_.export_events(out, after ? parse_uint(*after, "after") : 0);
            return {200, "application/x-ndjson", out.str()};
        }

        if (route({"guidelines", "likert"})) {
            need(get);
            if (param(req, "format").value_or("json") == "text") {
                return {200, "text/plain; charset=utf-8", std::string(review::likert_rubric_source())};
            }
            json items = json::array();
            for (const auto& e : review::likert_rubric()) {
                items.push_back({{"score", e.score}, {"text", e.text}, {"violation", e.score >= 4}});
            }
            return json_response(200, {{"items", items}});
        }

        return error_response(404, "no route " + req.method + " " + req.path);
    } catch (const HttpError& e) {
        return error_response(e.status, e.what());
    } catch (const ValidationError& e) {
        return error_response(400, e.what());
    } catch (const NotFoundError& e) {
        return error_response(404, e.what());
    } catch (const ConflictError& e) {
        return error_response(409, e.what());
    } catch (const std::exception& e) {
        return error_response(500, e.what());
    }
}

// --- HTTP transport ------------------------------------------------------------

struct HttpServer::Impl {
    const Service& service;
    httplib::Server server;

    explicit Impl(const Service& s) : service(s) {
        auto handler = [this](const httplib::Request& req, httplib::Response& res) {
            Request r;
            r.method = req.method;
            r.path = req.path;
            for (const auto& [k, v] : req.params) r.query.emplace(k, v);
            r.body = req.body;
            r.authorization = req.get_header_value("Authorization");
            const auto out = service.handle(r);
            res.status = out.status;
            res.set_content(out.body, out.content_type);
        };
        server.Get(".*", handler);
        server.Post(".*", handler);
        server.Put(".*", handler);
        server.Delete(".*", handler);
    }
};

HttpServer::HttpServer(const Service& service) : impl_(std::make_unique<Impl>(service)) {}
HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    // reuse TIME_WAIT addresses, but never share a live port with another server
    impl_->server.set_socket_options([](socket_t sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }
void HttpServer::stop() { impl_->server.stop(); }
void HttpServer::wait_until_ready() { impl_->server.wait_until_ready(); }

}  // namespace trendwatch::service
