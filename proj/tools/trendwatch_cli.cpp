#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "trendwatch/errors.hpp"
#include "trendwatch/exchange.hpp"
#include "trendwatch/ingest.hpp"
#include "trendwatch/metrics.hpp"
#include "trendwatch/pipeline.hpp"
#include "trendwatch/service.hpp"
#include "trendwatch/store.hpp"
#include "trendwatch/trend.hpp"

using namespace trendwatch;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kIo = 2, kConflict = 3, kPartial = 4 };

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? v : fallback;
}

json read_json_file(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot read " + p.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(p.string() + ": " + e.what());
    }
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + p.string());
    return out;
}

std::unique_ptr<store::Store> open_store(const std::string& path) {
    if (path.empty()) throw ValidationError("no store given (use --store or TW_STORE)");
    auto s = store::Store::open(path);
    for (const auto& w : s->warnings()) std::cerr << "warning: " << w << '\n';
    return s;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

service::HttpServer* g_server = nullptr;

extern "C" void on_signal(int) {
    if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"trendwatch: misinformation trend detection and review"};
    app.require_subcommand(1);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "Filter a JSONL corpus by keyword and report counts");
    std::string ingest_input, ingest_out, keywords = "cure,prevention";
    ingest_cmd->add_option("-i,--input", ingest_input, "JSONL corpus")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("-o,--out", ingest_out, "Write emitted posts as JSONL");
    ingest_cmd->add_option("--keywords", keywords, "Comma-separated keyword set")->capture_default_str();

    // run
    auto* run_cmd = app.add_subcommand("run", "Run the pipeline over a corpus into a store");
    std::string run_input, config_path, extractor_url, stance_url, trends_out;
    std::string store_path = env_or("TW_STORE", "");
    store::RunConfig cli_config;
    std::optional<double> alpha, jaccard;
    std::optional<int> warmup;
    std::optional<std::uint64_t> min_day_count, seed;
    std::optional<std::size_t> sample_n, overlap_every, history_depth;
    std::optional<std::string> run_keywords, adjudication;
    std::size_t threads = 0;
    run_cmd->add_option("-i,--input", run_input, "JSONL corpus")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("-s,--store", store_path, "Event log path (default $TW_STORE)");
    run_cmd->add_option("-c,--config", config_path, "RunConfig JSON; flags below override it")->check(CLI::ExistingFile);
    run_cmd->add_option("--alpha", alpha, "Significance level");
    run_cmd->add_option("--jaccard", jaccard, "Clustering threshold");
    run_cmd->add_option("--warmup-days", warmup, "Warm-up days");
    run_cmd->add_option("--min-day-count", min_day_count, "Minimum day count to rank");
    run_cmd->add_option("--history-depth", history_depth, "Daily top-N kept for novelty");
    run_cmd->add_option("--sample-n", sample_n, "Posts sampled per unapproved claim");
    run_cmd->add_option("--seed", seed, "Sampling seed");
    run_cmd->add_option("--keywords", run_keywords, "Comma-separated keyword set");
    run_cmd->add_option("--overlap-every", overlap_every, "Every n-th claim gets two annotators (0: none)");
    run_cmd->add_option("--adjudication", adjudication, "first | any_unapproved");
    run_cmd->add_option("--extractor-url", extractor_url, "Remote extractor base URL");
    run_cmd->add_option("--stance-url", stance_url, "Remote stance classifier base URL");
    run_cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
    run_cmd->add_option("--trends-csv", trends_out, "Also write the trend CSV here");

    // trends
    auto* trends_cmd = app.add_subcommand("trends", "Print trend records from a store");
    std::optional<std::string> trends_date;
    std::optional<std::size_t> top;
    std::optional<double> trends_alpha;
    std::string format = "csv";
    trends_cmd->add_option("-s,--store", store_path, "Event log path (default $TW_STORE)");
    trends_cmd->add_option("--date", trends_date, "YYYY-MM-DD (default: every day)");
    trends_cmd->add_option("--top", top, "Only ranks <= top");
    trends_cmd->add_option("--alpha", trends_alpha, "Recompute novelty at this alpha");
    trends_cmd->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();

    // review import / export
    auto* review_cmd = app.add_subcommand("review", "Import or export review decisions");
    review_cmd->require_subcommand(1);
    auto* export_cmd = review_cmd->add_subcommand("export", "Export flagged claims, decisions and reviews");
    auto* import_cmd = review_cmd->add_subcommand("import", "Import decisions and reviews");
    std::string review_out, decisions_csv, reviews_csv, review_in;
    export_cmd->add_option("-s,--store", store_path, "Event log path (default $TW_STORE)");
    export_cmd->add_option("-o,--out", review_out, "JSON output (default stdout)");
    export_cmd->add_option("--decisions-csv", decisions_csv, "Also write decisions as CSV");
    export_cmd->add_option("--reviews-csv", reviews_csv, "Also write reviews as CSV");
    import_cmd->add_option("-s,--store", store_path, "Event log path (default $TW_STORE)");
    import_cmd->add_option("-i,--input", review_in, "JSON export")->check(CLI::ExistingFile);
    import_cmd->add_option("--decisions-csv", decisions_csv, "Decisions CSV")->check(CLI::ExistingFile);
    import_cmd->add_option("--reviews-csv", reviews_csv, "Reviews CSV")->check(CLI::ExistingFile);

    // metrics
    auto* metrics_cmd = app.add_subcommand("metrics", "Compute the evaluation report");
    std::string metrics_input, out_dir, ks = "5,50,100", rates = "measured";
    std::optional<std::string> from, to;
    metrics_cmd->add_option("-s,--store", store_path, "Event log path (default $TW_STORE)");
    metrics_cmd->add_option("-i,--input", metrics_input, "Review export JSON instead of a store")->check(CLI::ExistingFile);
    metrics_cmd->add_option("-o,--out-dir", out_dir, "Write report.json, trends.csv and likert.csv here");
    metrics_cmd->add_option("--k", ks, "Top-K cut-offs")->capture_default_str();
    metrics_cmd->add_option("--rates", rates, "measured | fallback")->check(CLI::IsMember({"measured", "fallback"}))->capture_default_str();
    metrics_cmd->add_option("--from", from, "Series start date");
    metrics_cmd->add_option("--to", to, "Series end date");

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API");
    std::string bind = "127.0.0.1:8080";
    std::string token = env_or("TW_TOKEN", "");
    serve_cmd->add_option("-s,--store", store_path, "Event log path (default $TW_STORE)");
    serve_cmd->add_option("-b,--bind", bind, "host:port")->capture_default_str();
    serve_cmd->add_option("--token", token, "Bearer token (default $TW_TOKEN)");

    CLI11_PARSE(app, argc, argv);

    try {
        auto parse_date = [](const std::string& s, const char* what) {
            const auto d = Date::parse(s);
            if (!d) throw ValidationError(std::string(what) + " must be YYYY-MM-DD");
            return *d;
        };

        if (*ingest_cmd) {
            std::ifstream in(ingest_input, std::ios::binary);
            const auto result = ingest::ingest_stream(in, ingest::KeywordFilter::parse(keywords));
            if (!ingest_out.empty()) {
                auto out = open_out(ingest_out);
                for (const auto& p : result.posts) out << ingest::to_json(p).dump() << '\n';
            }
            std::cout << result.report.to_json().dump(2) << '\n';
            return kOk;
        }

        if (*run_cmd) {
            store::RunConfig config = config_path.empty() ? store::RunConfig{} : store::RunConfig::from_json(read_json_file(config_path));
            if (alpha) config.alpha = *alpha;
            if (jaccard) config.jaccard_threshold = *jaccard;
            if (warmup) config.warmup_days = *warmup;
            if (min_day_count) config.min_day_count = *min_day_count;
            if (history_depth) config.history_depth = *history_depth;
            if (sample_n) config.sample_n = *sample_n;
            if (seed) config.seed = *seed;
            if (run_keywords) config.keywords = split_csv(*run_keywords);
            if (overlap_every) config.overlap_every = *overlap_every;
            if (adjudication) config.adjudication = store::RunConfig::from_json({{"adjudication", *adjudication}}).adjudication;

            auto s = open_store(store_path);
            pipeline::PipelineOptions opt;
            opt.extractor_url = extractor_url;
            opt.stance_url = stance_url;
            opt.threads = threads;
            const auto result = pipeline::run_pipeline(run_input, config, *s, opt);
            for (const auto& w : result.ingest.warnings) std::cerr << "warning: " << w << '\n';
            if (!trends_out.empty()) {
                auto out = open_out(trends_out);
                s->read([&](const store::State& st) {
                    store::write_trend_csv(st, out);
                    return 0;
                });
            }
            std::cout << result.to_json().dump(2) << '\n';
            return kOk;
        }

        if (*trends_cmd) {
            auto s = open_store(store_path);
            const std::optional<Date> date = trends_date ? std::optional(parse_date(*trends_date, "--date")) : std::nullopt;
            const auto records = s->read([&](const store::State& st) {
                std::vector<trend::TrendRecord> out;
                for (const auto& [day, list] : st.records) {
                    if (date && day != *date) continue;
                    auto day_records = list;
                    if (trends_alpha && !day_records.empty()) {
                        const auto novel = trend::detect_novel(day_records, st.trend, *trends_alpha);
                        for (auto& r : day_records) {
                            r.novel = std::find(novel.begin(), novel.end(), r.cluster) != novel.end();
                        }
                    }
                    for (auto& r : day_records) {
                        if (!top || r.rank <= *top) out.push_back(std::move(r));
                    }
                }
                return out;
            });
            if (format == "csv") {
                trend::write_csv_header(std::cout);
                trend::write_csv(std::cout, records);
            } else {
                json arr = json::array();
                for (const auto& r : records) arr.push_back(r.to_json());
                std::cout << arr.dump(2) << '\n';
            }
            return kOk;
        }

        if (*export_cmd) {
            auto s = open_store(store_path);
            const auto doc = s->read([](const store::State& st) { return exchange::export_reviews(st); });
            if (review_out.empty()) {
                std::cout << doc.dump(2) << '\n';
            } else {
                open_out(review_out) << doc.dump(2) << '\n';
            }
            const auto data = review::ReviewExport::from_json(doc);
            if (!decisions_csv.empty()) {
                auto out = open_out(decisions_csv);
                review::write_decisions_csv(out, data.decisions);
            }
            if (!reviews_csv.empty()) {
                auto out = open_out(reviews_csv);
                review::write_reviews_csv(out, data.reviews);
            }
            return kOk;
        }

        if (*import_cmd) {
            if (review_in.empty() && decisions_csv.empty() && reviews_csv.empty()) {
                throw ValidationError("nothing to import: give --input and/or --decisions-csv / --reviews-csv");
            }
            review::ReviewExport data;
            if (!review_in.empty()) data = review::ReviewExport::from_json(read_json_file(review_in));
            if (!decisions_csv.empty()) {
                std::ifstream in(decisions_csv);
                const auto more = review::read_decisions_csv(in);
                data.decisions.insert(data.decisions.end(), more.begin(), more.end());
            }
            if (!reviews_csv.empty()) {
                std::ifstream in(reviews_csv);
                const auto more = review::read_reviews_csv(in);
                data.reviews.insert(data.reviews.end(), more.begin(), more.end());
            }
            auto s = open_store(store_path);
            const auto result = exchange::import_reviews(*s, data);
            std::cout << result.to_json().dump(2) << '\n';
            return result.errors.empty() ? kOk : kPartial;
        }

        if (*metrics_cmd) {
            metrics::ReportInput input;
            if (!metrics_input.empty()) {
                input = exchange::report_input_from_export(read_json_file(metrics_input));
            } else {
                auto s = open_store(store_path);
                input = s->read([](const store::State& st) { return store::report_input(st); });
            }
            input.ks.clear();
            for (const auto& k : split_csv(ks)) input.ks.push_back(static_cast<std::size_t>(std::stoul(k)));
            input.measured_rates = rates == "measured";
            if (from) input.from = parse_date(*from, "--from");
            if (to) input.to = parse_date(*to, "--to");
            const auto report = metrics::build_report(input);
            for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
            if (!out_dir.empty()) {
                open_out(fs::path(out_dir) / "report.json") << report.to_json().dump(2) << '\n';
                auto series = open_out(fs::path(out_dir) / "trends.csv");
                metrics::write_trend_series_csv(series, report.cumulative_trends);
                auto likert = open_out(fs::path(out_dir) / "likert.csv");
                metrics::write_likert_csv(likert, report.likert_distribution);
            }
            std::cout << report.to_json().dump(2) << '\n';
            return kOk;
        }

        if (*serve_cmd) {
            const auto colon = bind.rfind(':');
            if (colon == std::string::npos) throw ValidationError("--bind must be host:port");
            const std::string host = bind.substr(0, colon);
            const int port = std::stoi(bind.substr(colon + 1));
            auto s = open_store(store_path);
            service::Service svc(*s, {.token = token});
            service::HttpServer server(svc);
            const int bound = server.bind(host, port);
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::cerr << "serving " << store_path << " on " << host << ':' << bound
                      << (token.empty() ? " (no auth)" : "") << std::endl;
            server.listen();
            g_server = nullptr;
            s->sync();
            return kOk;
        }
    } catch (const ConflictError& e) {
        std::cerr << "conflict: " << e.what() << '\n';
        return kConflict;
    } catch (const ValidationError& e) {
        std::cerr << "invalid: " << e.what() << '\n';
        return kInvalid;
    } catch (const NotFoundError& e) {
        std::cerr << "not found: " << e.what() << '\n';
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    }
    return kOk;
}
