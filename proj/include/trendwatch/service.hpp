#pragma once

#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "trendwatch/store.hpp"

namespace trendwatch::service {

struct ServiceOptions {
    /// Bearer token required on every route but /health; empty disables auth.
    std::string token;
    std::size_t default_limit = 50;
    std::size_t max_limit = 1000;
};

struct Request {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    std::string authorization;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;

    nlohmann::json json() const { return nlohmann::json::parse(body); }
};

/// Routes:
///   GET  /health
///   GET  /config
///   GET  /trends?date&top&limit&offset[&format=csv]
///   GET  /claims/pending?annotator&limit&offset
///   POST /claims/{id}/decision
///   GET  /claims/{id}/tweets/sample
///   GET  /tweets/pending?annotator&limit&offset
///   POST /tweets/{post_id}/review
///   GET  /metrics/report?k=5,50,100&rates=measured|fallback&from&to
///   GET  /metrics/trends.csv, /metrics/likert.csv
///   GET  /export/events?after
///   GET  /guidelines/likert[?format=text]
/// Errors: 400 invalid input, 401 auth, 404 unknown, 405 method, 409 conflict.
class Service {
public:
    Service(store::Store& store, ServiceOptions options = {});

    Response handle(const Request& request) const;

private:
    store::Store& store_;
    ServiceOptions options_;
};

/// HTTP transport for a Service.
class HttpServer {
public:
    explicit HttpServer(const Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds; port 0 picks a free one. Returns the bound port. Throws IoError.
    int bind(const std::string& host, int port);
    /// Serves until stop(). Blocks.
    void listen();
    void stop();
    void wait_until_ready();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace trendwatch::service
