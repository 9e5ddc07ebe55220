#include "trendwatch/pipeline.hpp"

#include <fstream>
#include <iterator>
#include <map>
#include <memory>
#include <sstream>
#include <tuple>

#include "trendwatch/errors.hpp"
#include "trendwatch/hash.hpp"

namespace trendwatch::pipeline {

namespace {

struct Analysed {
    std::vector<store::Mention> mentions;
};

}  // namespace

nlohmann::json RunResult::to_json() const {
    return {{"run_id", run_id},   {"resumed", resumed}, {"days", days},   {"posts", posts},
            {"mentions", mentions}, {"records", records}, {"flags", flags}, {"last_seq", last_seq},
            {"ingest", ingest.to_json()}};
}

std::string compute_run_id(const store::RunConfig& config, std::string_view corpus) {
    auto h = fnv1a64(config.to_json().dump());
    h = fnv1a64(corpus, h);
    return hex64(h);
}

RunResult run_pipeline(const std::filesystem::path& corpus, store::RunConfig config, store::Store& store,
                       const PipelineOptions& options) {
    std::ifstream in(corpus, std::ios::binary);
    if (!in) throw IoError("cannot read corpus " + corpus.string());
    const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return run_pipeline_text(bytes, std::move(config), store, options);
}

RunResult run_pipeline_text(std::string_view corpus, store::RunConfig config, store::Store& store,
                            const PipelineOptions& options) {
    const auto& approved = options.approved ? *options.approved : aggregation::ApprovedList::builtin();

    std::unique_ptr<extraction::Extractor> extractor;
    if (options.extractor_url.empty()) {
        extractor = std::make_unique<extraction::PatternExtractor>();
    } else {
        extractor = std::make_unique<extraction::HttpExtractor>(options.extractor_url, options.client);
    }
    std::unique_ptr<stance::StanceClassifier> classifier;
    if (options.stance_url.empty()) {
        classifier = std::make_unique<stance::LexiconClassifier>();
    } else {
        classifier = std::make_unique<stance::HttpStanceClassifier>(options.stance_url, options.client);
    }
    config.extractor = extractor->name();
    config.stance = classifier->name();
    config.approved_version = approved.version();
    config.validate();

    RunResult result;
    result.run_id = compute_run_id(config, corpus);

    const auto [have_config, stored_run, has_posts] = store.read([](const store::State& s) {
        return std::tuple{s.config.has_value(), s.run_id, !s.posts.empty()};
    });
    if (have_config && stored_run == result.run_id) {
        result.resumed = true;
    } else if (has_posts) {
        throw ConflictError("store already holds run " + stored_run + "; use a fresh store for run " + result.run_id);
    } else {
        store.configure(config, result.run_id);
    }

    std::istringstream source{std::string(corpus)};
    auto ingested = ingest::ingest_stream(source, ingest::KeywordFilter(config.keywords));
    result.ingest = ingested.report;
    auto& posts = ingested.posts;
    std::stable_sort(posts.begin(), posts.end(),
                     [](const ingest::Post& a, const ingest::Post& b) { return a.date() < b.date(); });
    result.posts = posts.size();

    std::map<Date, std::vector<ingest::Post>> days;
    for (auto& p : posts) days[p.date()].push_back(std::move(p));

    const std::size_t threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());

    for (const auto& [date, day_posts] : days) {
        ++result.days;
        const auto [done, flag_pending] = store.read([&, d = date](const store::State& s) {
            const auto last = s.last_rollup();
            const bool rolled = last && d <= *last;
            bool pending = false;
            if (rolled && !s.flag_days.contains(d)) {
                if (const auto it = s.records.find(d); it != s.records.end()) {
                    pending = std::any_of(it->second.begin(), it->second.end(),
                                          [](const trend::TrendRecord& r) { return r.novel; });
                }
            }
            return std::pair{rolled, pending};
        });
        if (done) {
            if (flag_pending) store.flag(date);
            continue;
        }

        const auto analysed = parallel_map(
            day_posts,
            [&](const ingest::Post& post) {
                Analysed a;
                const auto spans = extraction::extract(post, *extractor);
                for (std::size_t i = 0; i < spans.size(); ++i) {
                    const auto sm = stance::classify_stance(post, spans[i], *classifier);
                    store::Mention m;
                    m.post_id = post.post_id;
                    m.index = i;
                    m.span = sm.claim;
                    m.stance = sm.stance;
                    m.confidence = sm.confidence;
                    m.date = post.date();
                    m.indexed = sm.stance == stance::StanceLabel::Supporting && !approved.matches(sm.claim.normalized);
                    a.mentions.push_back(std::move(m));
                }
                return a;
            },
            threads);

        for (std::size_t i = 0; i < day_posts.size(); ++i) {
            const auto& post = day_posts[i];
            const auto [known, have] = store.read([&](const store::State& s) {
                const auto it = s.mentions.find(post.post_id);
                return std::pair{s.posts.contains(post.post_id), it == s.mentions.end() ? std::size_t{0} : it->second.size()};
            });
            if (!known) store.ingest_post(post, false);
            for (std::size_t k = have; k < analysed[i].mentions.size(); ++k) {
                store.add_mention(analysed[i].mentions[k], false);
            }
        }
        store.rollup(date, false);
        store.flag(date, false);
        store.sync();
        if (options.after_day) options.after_day(date);
    }

    store.read([&](const store::State& s) {
        for (const auto& [d, list] : s.mentions) result.mentions += list.size();
        for (const auto& [d, list] : s.records) result.records += list.size();
        result.flags = s.flags.size();
        result.last_seq = s.seq;
        return 0;
    });
    return result;
}

}  // namespace trendwatch::pipeline
