// One PASS/FAIL line per acceptance criterion. Exit status is non-zero if any fail.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "../agreement_oracle.hpp"
#include "../cluster_properties.hpp"
#include "../corpus_fixtures.hpp"
#include "../fisher_oracle.hpp"
#include "trendwatch/errors.hpp"
#include "trendwatch/fisher.hpp"
#include "trendwatch/metrics.hpp"
#include "trendwatch/pipeline.hpp"
#include "trendwatch/store.hpp"

using namespace trendwatch;
using aggregation::ClusterId;
using trend::ContingencyTable;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

const Timestamp kAt = Date(2020, 4, 5).midnight();

store::StoreOptions fixed_clock() {
    store::StoreOptions o;
    o.snapshot_every = 0;
    o.clock = [] { return kAt; };
    return o;
}

// ---------------------------------------------------------------------------

Outcome fisher_sweep() {
    Outcome out;
    const unsigned max_n = 60;
    const oracle::BinomialTable binom(max_n);
    double worst = 0.0;
    std::uint64_t tables = 0;
    for (unsigned n = 1; n <= max_n; ++n) {
        for (unsigned rows = 0; rows <= n; ++rows) {
            for (unsigned cols = 0; cols <= n; ++cols) {
                const auto tails = oracle::exact_tails(binom, rows, cols, n);
                const unsigned lo = rows + cols > n ? rows + cols - n : 0;
                for (unsigned a = lo; a < tails.size(); ++a) {
                    const ContingencyTable t{a, rows - a, cols - a, n - rows - cols + a};
                    const double expected = oracle::to_double(tails[a]);
                    const double err = std::abs(trend::fisher_one_tailed(t) - expected) / expected;
                    worst = std::max(worst, err);
                    ++tables;
                }
            }
        }
    }
    out.require(oracle::exact_tails(binom, 4, 4, 8)[3] == oracle::cpp_rational(17, 70), "oracle 17/70");
    out.require(oracle::exact_tails(binom, 5, 5, 10)[5] == oracle::cpp_rational(1, 252), "oracle 1/252");
    out.require(std::abs(trend::fisher_one_tailed({3, 1, 1, 3}) - 17.0 / 70.0) <= 1e-12 * 17.0 / 70.0,
                "fisher 17/70");
    out.require(std::abs(trend::fisher_one_tailed({5, 0, 0, 5}) - 1.0 / 252.0) <= 1e-12 / 252.0, "fisher 1/252");
    out.require(worst <= 1e-12, "max relative error " + fmt(worst));
    if (out.pass) out.detail = std::to_string(tables) + " tables, max rel err " + fmt(worst);
    return out;
}

Outcome hypergeometric_normalization() {
    Outcome out;
    std::mt19937_64 rng(100000);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const std::uint64_t n = 1 + rng() % 100000;
        const std::uint64_t rows = rng() % (n + 1);
        const std::uint64_t cols = rng() % (n + 1);
        const std::uint64_t lo = rows + cols > n ? rows + cols - n : 0;
        const ContingencyTable m{lo, rows - lo, cols - lo, n - rows - cols + lo};
        std::vector<double> logs;
        double peak = -std::numeric_limits<double>::infinity();
        for (std::uint64_t k = m.support_min(); k <= m.support_max(); ++k) {
            logs.push_back(trend::log_hypergeometric_probability(m.with_joint(k)));
            peak = std::max(peak, logs.back());
        }
        long double acc = 0.0L;
        for (const double l : logs) acc += std::exp(static_cast<long double>(l - peak));
        const double log_total = peak + static_cast<double>(std::log(acc));
        worst = std::max(worst, std::abs(log_total));
        out.require(trend::fisher_one_tailed(m.with_joint(m.support_min())) == 1.0, "lower support tail != 1");
    }
    out.require(worst <= 1e-9, "max |log sum| " + fmt(worst));
    if (out.pass) out.detail = "1000 margin sets, max |log sum| " + fmt(worst);
    return out;
}

std::size_t count_flag_events(const store::Store& s, std::vector<std::string>* days, std::string* top) {
    std::size_t n = 0;
    for (const auto& e : s.events()) {
        if (e.kind != events::EventKind::Flagged) continue;
        ++n;
        if (days) days->push_back(e.payload.at("date").get<std::string>());
    }
    if (top) {
        *top = s.read([](const store::State& st) {
            return st.flags.empty() ? std::string() : st.flags.front().canonical;
        });
    }
    return n;
}

Outcome burst_end_to_end() {
    Outcome out;
    store::RunConfig cfg;  // alpha 1.15e-6
    cfg.warmup_days = 30;
    store::Store burst(fixed_clock());
    pipeline::run_pipeline_text(fixtures::burst_corpus(), cfg, burst);
    std::vector<std::string> days;
    std::string top;
    const auto flags = count_flag_events(burst, &days, &top);
    out.require(flags == 1, "burst corpus produced " + std::to_string(flags) + " FLAGGED events");
    out.require(days == std::vector<std::string>{"2020-03-31"}, "flag not on day 31");
    out.require(top == "ivermectin", "flagged claim is '" + top + "'");

    store::Store control(fixed_clock());
    pipeline::run_pipeline_text(fixtures::control_corpus(), cfg, control);
    const auto control_flags = count_flag_events(control, nullptr, nullptr);
    out.require(control_flags == 0, "control corpus produced " + std::to_string(control_flags) + " flags");
    if (out.pass) out.detail = "burst: 1 flag on 2020-03-31 (ivermectin); control: 0 flags";
    return out;
}

Outcome metrics_fixtures() {
    Outcome out;
    using namespace metrics;
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9; };
    using Pairs = std::vector<std::pair<std::string, std::string>>;
    out.require(close(cohen_kappa(Pairs{{"x", "x"}, {"x", "y"}, {"y", "x"}, {"y", "y"}}), 0.0), "kappa 0.0");
    out.require(cohen_kappa(Pairs{{"x", "y"}, {"x", "y"}}) <= 0.0, "kappa systematic disagreement");

    const RatingMatrix opposite = {{1, 5}, {5, 1}};
    const double exact = oracle::to_double(oracle::alpha_ordinal(opposite));
    out.require(close(krippendorff_alpha_ordinal(opposite), exact) && exact < 0, "alpha (1,5),(5,1)");
    const RatingMatrix shared = {{2, 2, std::nullopt}, {std::nullopt, 4, std::nullopt}, {5, std::nullopt, std::nullopt}};
    out.require(close(krippendorff_alpha_ordinal(shared), 1.0), "alpha pairwise deletion");

    const std::vector<std::string> pred = {"vitamin", "c"}, gold = {"vitamin"};
    const auto f = token_f1(pred, gold);
    out.require(close(f.precision, 0.5) && close(f.recall, 1.0) && close(f.f1, 2.0 / 3.0), "token F1");

    out.require(close(violations_per_hour(40, 10, 0.02, 100, 0.005), 40.0 / 0.7), "violations/hour");

    const auto lk = extrapolate_likert({{ClusterId{1}, {5, 5, 4, 4, 4, 3, 3, 2, 1, 1}}}, {{ClusterId{1}, 100}});
    out.require(close(lk.at(5), 0.2) && close(lk.at(4), 0.3) && close(lk.at(3), 0.2) && close(lk.at(2), 0.1) &&
                    close(lk.at(1), 0.2),
                "Likert extrapolation");

    out.require(compute_delta(Date(2020, 4, 5), Date(2020, 4, 10)) == 5, "delta");

    // top-5: 3 of 5 unapproved
    ReportInput in;
    const Date day(2020, 4, 1);
    const review::Category cats[] = {review::Category::Unapproved, review::Category::Approved,
                                     review::Category::Unapproved, review::Category::NotATreatment,
                                     review::Category::Unapproved};
    for (std::uint64_t c = 1; c <= 5; ++c) {
        in.claims.push_back({ClusterId{c}, "claim" + std::to_string(c), day, 1e-9 * static_cast<double>(c), 10});
        review::ClaimDecision d;
        d.cluster = ClusterId{c};
        d.annotator_id = "a";
        d.category = cats[c - 1];
        d.elapsed_seconds = 60;
        in.decisions.push_back(d);
    }
    in.ks = {5};
    const auto report = build_report(in);
    const double top5 = report.pct_unapproved_topk.at(5).percent;
    out.require(top5 == 60.0, "top-5 = " + fmt(top5));
    if (out.pass) out.detail = "all fixtures within 1e-9; top-5 = 60.0%";
    return out;
}

std::string small_multi_burst() {
    std::string out = fixtures::small_burst_corpus();
    const char* extra[] = {"bleach", "zinc", "neem", "quinine", "oregano"};
    for (const char* r : extra) {
        for (int k = 0; k < 12; ++k) out += fixtures::post_line(std::string(r) + "-" + std::to_string(k), 4, r, k);
    }
    return out;
}

Outcome review_state_machine() {
    Outcome out;
    store::RunConfig cfg;
    cfg.warmup_days = 3;
    cfg.alpha = 0.05;
    cfg.sample_n = 4;
    int rounds = 0;
    std::size_t decisions = 0, reviews = 0, rejected = 0;
    for (std::uint64_t seed = 1; seed <= 20 && out.pass; ++seed, ++rounds) {
        cfg.adjudication = seed % 2 ? review::Adjudication::First : review::Adjudication::AnyUnapproved;
        store::Store s(fixed_clock());
        pipeline::run_pipeline_text(small_multi_burst(), cfg, s);
        const auto flagged = s.read([](const store::State& st) { return st.review.claims().size(); });
        out.require(flagged >= 4, "fixture flagged only " + std::to_string(flagged) + " claims");

        std::atomic<int> conflicts{0};
        auto moderator = [&](std::string who, std::uint64_t rseed) {
            std::mt19937_64 rng(rseed);
            for (int step = 0; step < 80; ++step) {
                try {
                    if (rng() % 2) {
                        const auto ids = s.read([](const store::State& st) {
                            std::vector<ClusterId> v;
                            for (const auto& e : st.review.claims()) v.push_back(e.cluster);
                            return v;
                        });
                        review::ClaimDecision d;
                        d.cluster = ids[rng() % ids.size()];
                        d.annotator_id = who;
                        d.category = static_cast<review::Category>(rng() % 6);
                        d.elapsed_seconds = 30;
                        s.decide(d);
                    } else {
                        const auto pending = s.read([](const store::State& st) {
                            std::vector<std::pair<std::string, ClusterId>> v;
                            for (const auto* t : st.review.pending_tweets()) v.emplace_back(t->post_id, t->cluster);
                            return v;
                        });
                        if (pending.empty()) continue;
                        const auto& [post, cluster] = pending[rng() % pending.size()];
                        review::TweetReview r;
                        r.post_id = post;
                        r.cluster = cluster;
                        r.annotator_id = who;
                        r.likert = 1 + static_cast<int>(rng() % 5);
                        r.reviewed_at = kAt;
                        r.elapsed_seconds = 10;
                        s.review(r);
                    }
                } catch (const ConflictError&) {
                    ++conflicts;
                } catch (const ValidationError&) {
                    ++conflicts;
                }
            }
        };
        {
            std::jthread a(moderator, "alice", seed * 2);
            std::jthread b(moderator, "bob", seed * 2 + 1);
        }

        s.read([&](const store::State& st) {
            const auto& q = st.review;
            for (const auto& e : q.claims()) {
                std::set<std::string> who;
                for (const auto& d : e.decisions) {
                    out.require(who.insert(d.annotator_id).second, "double decision on " + e.cluster.str());
                }
                out.require(e.decisions.size() <= e.required, "too many decisions");
                if (!q.tweets_for(e.cluster).empty()) {
                    out.require(e.effective(cfg.adjudication) == review::Category::Unapproved,
                                "stage-2 queue without UNAPPROVED");
                }
            }
            for (const auto& [key, t] : q.tweets()) {
                out.require(q.effective(t.cluster) == review::Category::Unapproved, "orphan stage-2 entry");
                std::set<std::string> who;
                for (const auto& r : t.reviews) out.require(who.insert(r.annotator_id).second, "double review");
                out.require(t.reviews.size() <= t.required, "too many reviews");
            }
            return 0;
        });

        rejected += static_cast<std::size_t>(conflicts.load());
        s.read([&](const store::State& st) {
            decisions += st.review.all_decisions().size();
            reviews += st.review.all_reviews().size();
            return 0;
        });
        const auto live = s.read([](const store::State& st) { return st.to_json().dump(); });
        const auto replayed = store::Store::replay(s.events(), fixed_clock());
        out.require(replayed->read([](const store::State& st) { return st.to_json().dump(); }) == live,
                    "replay differs");
    }
    out.require(reviews > 0, "no stage-2 review was ever recorded");
    if (out.pass) {
        out.detail = std::to_string(rounds) + " threaded rounds (" + std::to_string(decisions) + " decisions, " +
                     std::to_string(reviews) + " reviews, " + std::to_string(rejected) +
                     " rejected); invariants and replay hold";
    }
    return out;
}

Outcome determinism() {
    Outcome out;
    store::RunConfig cfg;
    cfg.warmup_days = 30;
    const auto corpus = fixtures::burst_corpus();
    auto run = [&](std::size_t threads, std::string& csv, std::vector<std::string>& sample) {
        store::Store s(fixed_clock());
        pipeline::PipelineOptions opt;
        opt.threads = threads;
        pipeline::run_pipeline_text(corpus, cfg, s, opt);
        std::ostringstream o;
        s.read([&](const store::State& st) {
            store::write_trend_csv(st, o);
            return 0;
        });
        csv = o.str();
        const auto cluster = s.read([](const store::State& st) { return st.flags.at(0).cluster; });
        review::ClaimDecision d;
        d.cluster = cluster;
        d.annotator_id = "alice";
        d.category = review::Category::Unapproved;
        sample = s.decide(d).sample;
    };
    std::string csv1, csv2;
    std::vector<std::string> s1, s2;
    run(1, csv1, s1);
    run(8, csv2, s2);
    out.require(!csv1.empty() && csv1 == csv2, "trend CSV differs between runs");
    out.require(s1.size() == 10 && s1 == s2, "sampled post ids differ");
    if (out.pass) out.detail = std::to_string(csv1.size()) + " CSV bytes identical; 10-post samples identical";
    return out;
}

Outcome clustering_properties() {
    Outcome out;
    std::mt19937_64 rng(10000);
    for (int i = 0; i < 10000 && out.pass; ++i) {
        const auto keys = testing::random_key_set(rng);
        const auto failure = testing::check_cluster_properties(keys, rng);
        out.require(failure.empty(), "key set " + std::to_string(i) + ": " + failure);
    }
    if (out.pass) out.detail = "10000 key sets";
    return out;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
        double budget_seconds;  // 0: none
    };
    const std::vector<Criterion> criteria = {
        {"fisher-oracle-sweep", fisher_sweep, 60},
        {"hypergeometric-normalization", hypergeometric_normalization, 30},
        {"burst-detection-end-to-end", burst_end_to_end, 120},
        {"metrics-fixtures", metrics_fixtures, 0},
        {"review-state-machine", review_state_machine, 0},
        {"determinism", determinism, 0},
        {"clustering-properties", clustering_properties, 0},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.pass && c.budget_seconds > 0 && secs > c.budget_seconds) {
            o.pass = false;
            o.detail += " (over the " + fmt(c.budget_seconds) + " s budget)";
        }
        if (!o.pass) ++failed;
        std::printf("%s %-30s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
