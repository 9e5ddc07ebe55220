#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

namespace trendwatch::remote {

struct ClientOptions {
    std::chrono::milliseconds timeout{10'000};
    int retries = 3;  // attempts after the first
    std::chrono::milliseconds backoff{200};
    std::ptrdiff_t max_in_flight = 8;
};

/// JSON-over-HTTP POST client with bounded concurrency and retry.
/// Connection failures, timeouts and 5xx responses are retried; once the
/// attempts run out a RetryableError is thrown. 4xx responses and
/// unparseable bodies throw Error immediately.
class JsonClient {
public:
    /// base_url like "http://127.0.0.1:8080".
    JsonClient(std::string base_url, ClientOptions options);

    nlohmann::json post(const std::string& path, const nlohmann::json& body) const;

    const std::string& base_url() const { return base_url_; }

private:
    std::string base_url_;
    ClientOptions options_;
    std::unique_ptr<std::counting_semaphore<>> in_flight_;
};

}  // namespace trendwatch::remote
