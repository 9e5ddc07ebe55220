#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendwatch/aggregation.hpp"
#include "trendwatch/extraction.hpp"
#include "trendwatch/ingest.hpp"
#include "trendwatch/remote.hpp"
#include "trendwatch/stance.hpp"
#include "trendwatch/store.hpp"

namespace trendwatch::pipeline {

/// Applies `f` to every element on up to `threads` workers; results keep
/// input order. The first exception thrown by any call is rethrown.
template <class T, class F>
auto parallel_map(const std::vector<T>& in, F f, std::size_t threads) {
    using R = decltype(f(in.front()));
    std::vector<R> out(in.size());
    threads = std::max<std::size_t>(1, std::min(threads, in.size()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < in.size();) {
            try {
                out[i] = f(in[i]);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = in.size();
            }
        }
    };
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(work);
    }
    if (error) std::rethrow_exception(error);
    return out;
}

struct PipelineOptions {
    /// Empty: built-in pattern extractor / lexicon classifier.
    std::string extractor_url;
    std::string stance_url;
    remote::ClientOptions client;
    std::size_t threads = 0;  // 0: hardware concurrency
    const aggregation::ApprovedList* approved = nullptr;  // null: shipped list
    /// Called after each committed day (tests use it to interrupt runs).
    std::function<void(Date)> after_day;
};

struct RunResult {
    std::string run_id;
    bool resumed = false;
    std::size_t days = 0;
    std::size_t posts = 0;
    std::size_t mentions = 0;
    std::size_t records = 0;
    std::size_t flags = 0;
    std::uint64_t last_seq = 0;
    ingest::IngestReport ingest;
    nlohmann::json to_json() const;
};

/// Hash of the run config and the raw corpus bytes.
std::string compute_run_id(const store::RunConfig& config, std::string_view corpus);

/// Ingest, extract, classify, cluster, roll up and flag, one day at a time.
/// Each day ends with a durable sync. Re-running the same corpus and config
/// on the same store resumes after the last completed step; a store holding
/// a different run raises ConflictError.
RunResult run_pipeline(const std::filesystem::path& corpus, store::RunConfig config, store::Store& store,
                       const PipelineOptions& options = {});
RunResult run_pipeline_text(std::string_view corpus, store::RunConfig config, store::Store& store,
                            const PipelineOptions& options = {});

}  // namespace trendwatch::pipeline
