#include "trendwatch/remote.hpp"

#include <algorithm>
#include <thread>

#include <httplib.h>

#include "trendwatch/errors.hpp"

namespace trendwatch::remote {

JsonClient::JsonClient(std::string base_url, ClientOptions options)
    : base_url_(std::move(base_url)),
      options_(options),
      in_flight_(std::make_unique<std::counting_semaphore<>>(
          std::max<std::ptrdiff_t>(1, options.max_in_flight))) {}

nlohmann::json JsonClient::post(const std::string& path, const nlohmann::json& body) const {
    in_flight_->acquire();
    struct Release {
        std::counting_semaphore<>* sem;
        ~Release() { sem->release(); }
    } release{in_flight_.get()};

    httplib::Client client(base_url_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    const std::string payload = body.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(options_.backoff * attempt);
        auto res = client.Post(path, payload, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw Error(base_url_ + path + " returned HTTP " + std::to_string(res->status));
        }
        try {
            return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw Error(base_url_ + path + " returned invalid JSON: " + e.what());
        }
    }
    throw RetryableError(base_url_ + path + " unreachable after " +
                         std::to_string(options_.retries + 1) + " attempts: " + last_error);
}

}  // namespace trendwatch::remote
