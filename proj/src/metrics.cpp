#include "trendwatch/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "trendwatch/errors.hpp"
#include "trendwatch/trend.hpp"

namespace trendwatch::metrics {

int compute_delta(Date detected, Date debunked) { return debunked - detected; }

double compute_delta_hours(Timestamp detected, Timestamp debunked) {
    return std::chrono::duration<double, std::ratio<3600>>(debunked - detected).count();
}

TopK pct_unapproved_topk(std::span<const RankedClaim> ranked, std::size_t k) {
    if (k < 1) throw ValidationError("K must be at least 1");
    TopK out;
    out.considered = std::min(k, ranked.size());
    out.short_list = ranked.size() < k;
    if (out.considered == 0) return out;
    std::size_t unapproved = 0;
    for (std::size_t i = 0; i < out.considered; ++i) {
        if (ranked[i].category == review::Category::Unapproved) ++unapproved;
    }
    out.percent = 100.0 * static_cast<double>(unapproved) / static_cast<double>(out.considered);
    return out;
}

double violations_per_hour(std::uint64_t violations, std::uint64_t n_claims, double rate_claim_hours,
                           std::uint64_t n_tweets, double rate_tweet_hours) {
    if (rate_claim_hours < 0.0 || rate_tweet_hours < 0.0) throw ValidationError("annotation rates must be non-negative");
    const double hours = static_cast<double>(n_claims) * rate_claim_hours + static_cast<double>(n_tweets) * rate_tweet_hours;
    if (!(hours > 0.0)) throw DomainError("total annotation hours is zero");
    return static_cast<double>(violations) / hours;
}

std::map<int, double> extrapolate_likert(const std::map<ClusterId, std::vector<int>>& samples,
                                         const std::map<ClusterId, std::uint64_t>& cluster_sizes) {
    std::map<int, double> weighted;
    double total = 0.0;
    for (const auto& [cluster, scores] : samples) {
        if (scores.empty()) continue;
        const auto size = cluster_sizes.find(cluster);
        if (size == cluster_sizes.end()) throw ValidationError("no size for cluster " + cluster.str());
        if (size->second < scores.size()) {
            throw ValidationError("cluster " + cluster.str() + " has fewer posts than sampled scores");
        }
        const double w = static_cast<double>(size->second) / static_cast<double>(scores.size());
        for (const int s : scores) {
            if (s < 1 || s > 5) throw ValidationError("likert score outside 1..5");
            weighted[s] += w;
            total += w;
        }
    }
    if (total == 0.0) throw ValidationError("no Likert samples to extrapolate");
    for (auto& [score, mass] : weighted) mass /= total;
    return weighted;
}

double cohen_kappa(std::span<const std::pair<std::string, std::string>> pairs) {
    if (pairs.empty()) throw ValidationError("cohen_kappa needs at least one pair");
    std::map<std::string, double> left, right;
    double agree = 0.0;
    for (const auto& [a, b] : pairs) {
        left[a] += 1.0;
        right[b] += 1.0;
        if (a == b) agree += 1.0;
    }
    const double n = static_cast<double>(pairs.size());
    const double p_o = agree / n;
    double p_e = 0.0;
    for (const auto& [label, count] : left) {
        const auto it = right.find(label);
        if (it != right.end()) p_e += (count / n) * (it->second / n);
    }
    if (p_e >= 1.0) return 1.0;  // one shared category: p_o is 1 as well
    return (p_o - p_e) / (1.0 - p_e);
}

double krippendorff_alpha_ordinal(const RatingMatrix& matrix) {
    std::set<int> values;
    for (const auto& item : matrix) {
        for (const auto& r : item) {
            if (r) values.insert(*r);
        }
    }
    const std::vector<int> scale(values.begin(), values.end());
    auto index = [&](int v) {
        return static_cast<std::size_t>(std::lower_bound(scale.begin(), scale.end(), v) - scale.begin());
    };

    const std::size_t v = scale.size();
    std::vector<std::vector<double>> o(v, std::vector<double>(v, 0.0));
    bool pairable = false;
    for (const auto& item : matrix) {
        std::vector<std::size_t> rated;
        for (const auto& r : item) {
            if (r) rated.push_back(index(*r));
        }
        if (rated.size() < 2) continue;
        pairable = true;
        const double w = 1.0 / static_cast<double>(rated.size() - 1);
        for (std::size_t i = 0; i < rated.size(); ++i) {
            for (std::size_t j = 0; j < rated.size(); ++j) {
                if (i != j) o[rated[i]][rated[j]] += w;
            }
        }
    }
    if (!pairable) throw DomainError("krippendorff's alpha is undefined without co-rated items");

    std::vector<double> n_c(v, 0.0);
    double n = 0.0;
    for (std::size_t c = 0; c < v; ++c) {
        for (std::size_t k = 0; k < v; ++k) n_c[c] += o[c][k];
        n += n_c[c];
    }
    auto delta2 = [&](std::size_t c, std::size_t k) {
        if (c == k) return 0.0;
        if (c > k) std::swap(c, k);
        double s = 0.0;
        for (std::size_t g = c; g <= k; ++g) s += n_c[g];
        s -= (n_c[c] + n_c[k]) / 2.0;
        return s * s;
    };
    double observed = 0.0;
    double expected = 0.0;
    for (std::size_t c = 0; c < v; ++c) {
        for (std::size_t k = 0; k < v; ++k) {
            const double d = delta2(c, k);
            observed += o[c][k] * d;
            expected += n_c[c] * n_c[k] * d;
        }
    }
    if (expected == 0.0) return 1.0;
    return 1.0 - (n - 1.0) * observed / expected;
}

F1 token_f1(std::span<const std::string> predicted, std::span<const std::string> gold) {
    if (predicted.empty() && gold.empty()) return {1.0, 1.0, 1.0};
    if (predicted.empty() || gold.empty()) return {};
    std::map<std::string_view, std::size_t> counts;
    for (const auto& t : gold) ++counts[t];
    std::size_t overlap = 0;
    for (const auto& t : predicted) {
        auto it = counts.find(t);
        if (it != counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    F1 out;
    out.precision = static_cast<double>(overlap) / static_cast<double>(predicted.size());
    out.recall = static_cast<double>(overlap) / static_cast<double>(gold.size());
    out.f1 = overlap == 0 ? 0.0 : 2.0 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

std::vector<TrendPoint> cumulative_trend_series(std::span<const FlagOutcome> flags, Date from, Date to) {
    if (to < from) throw ValidationError("series range ends before it starts");
    std::map<Date, std::pair<std::uint64_t, std::uint64_t>> steps;
    std::uint64_t flagged = 0;
    std::uint64_t unapproved = 0;
    for (const auto& f : flags) {
        if (f.flagged_on < from) {
            ++flagged;
            if (f.unapproved) ++unapproved;
        } else if (f.flagged_on <= to) {
            auto& s = steps[f.flagged_on];
            ++s.first;
            if (f.unapproved) ++s.second;
        }
    }
    std::vector<TrendPoint> out;
    out.reserve(static_cast<std::size_t>(to - from + 1));
    for (Date d = from; d <= to; d = d + 1) {
        if (const auto it = steps.find(d); it != steps.end()) {
            flagged += it->second.first;
            unapproved += it->second.second;
        }
        out.push_back({d, flagged, unapproved});
    }
    return out;
}

// --- report -------------------------------------------------------------------

namespace {

double mean_positive(const std::vector<double>& xs, double fallback) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const double x : xs) {
        if (x > 0.0) {
            sum += x;
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : fallback;
}

}  // namespace

MetricsReport build_report(const ReportInput& input) {
    using review::Category;
    MetricsReport report;

    std::map<ClusterId, std::vector<const review::ClaimDecision*>> by_cluster;
    for (const auto& d : input.decisions) by_cluster[d.cluster].push_back(&d);
    auto effective = [&](ClusterId id) -> std::optional<Category> {
        const auto it = by_cluster.find(id);
        if (it == by_cluster.end()) return std::nullopt;
        if (input.adjudication == review::Adjudication::AnyUnapproved) {
            for (const auto* d : it->second) {
                if (d->category == Category::Unapproved) return Category::Unapproved;
            }
        }
        return it->second.front()->category;
    };

    // top-K over flagged claims ranked by their p-value at flag time
    auto claims = input.claims;
    std::stable_sort(claims.begin(), claims.end(), [](const ClaimOutcome& a, const ClaimOutcome& b) {
        if (a.p_value != b.p_value) return a.p_value < b.p_value;
        if (a.flagged_on != b.flagged_on) return a.flagged_on < b.flagged_on;
        return a.canonical < b.canonical;
    });
    std::vector<RankedClaim> ranked;
    for (const auto& c : claims) ranked.push_back({c.cluster, effective(c.cluster)});
    for (const auto k : input.ks) {
        const auto topk = pct_unapproved_topk(ranked, k);
        report.pct_unapproved_topk[k] = topk;
        if (topk.short_list) {
            report.warnings.push_back("top-" + std::to_string(k) + " computed over " +
                                      std::to_string(topk.considered) + " ranked claims");
        }
    }

    // timeliness
    for (const auto& c : claims) {
        if (effective(c.cluster) != Category::Unapproved) continue;
        for (const auto* d : by_cluster[c.cluster]) {
            if (d->category == Category::Unapproved && d->debunk_date) {
                report.delta_days[c.cluster] = compute_delta(c.flagged_on, *d->debunk_date);
                break;
            }
        }
    }

    // stage-1 agreement over doubly decided claims
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& [cluster, ds] : by_cluster) {
        if (ds.size() >= 2) {
            pairs.emplace_back(std::string(review::to_string(ds[0]->category)),
                               std::string(review::to_string(ds[1]->category)));
        }
    }
    if (!pairs.empty()) {
        report.cohen_kappa = cohen_kappa(pairs);
    } else {
        report.warnings.push_back("no doubly annotated claims: kappa undefined");
    }

    // stage-2: items are (post, cluster)
    std::map<std::pair<std::string, ClusterId>, std::vector<const review::TweetReview*>> items;
    for (const auto& r : input.reviews) items[{r.post_id, r.cluster}].push_back(&r);
    std::map<std::string, std::size_t> raters;
    for (const auto& r : input.reviews) raters.emplace(r.annotator_id, raters.size());
    RatingMatrix matrix;
    std::map<ClusterId, std::vector<int>> samples;
    for (const auto& [key, rs] : items) {
        std::vector<std::optional<int>> row(raters.size());
        for (const auto* r : rs) {
            if (r->likert) row[raters.at(r->annotator_id)] = *r->likert;
        }
        matrix.push_back(std::move(row));
        const auto first = std::find_if(rs.begin(), rs.end(), [](const auto* r) { return !r->is_duplicate; });
        if (first != rs.end()) {
            samples[key.second].push_back(*(*first)->likert);
            if ((*first)->is_violation()) ++report.violations;
        }
    }
    try {
        report.krippendorff_alpha = krippendorff_alpha_ordinal(matrix);
    } catch (const DomainError&) {
        report.warnings.push_back("no doubly reviewed posts: alpha undefined");
    }

    std::vector<double> claim_secs, tweet_secs;
    for (const auto& d : input.decisions) claim_secs.push_back(d.elapsed_seconds);
    for (const auto& r : input.reviews) tweet_secs.push_back(r.elapsed_seconds);
    if (input.measured_rates) {
        report.rate_claim_seconds = mean_positive(claim_secs, kClaimSeconds);
        report.rate_tweet_seconds = mean_positive(tweet_secs, kTweetSeconds);
    }
    report.annotation_hours = (static_cast<double>(input.decisions.size()) * report.rate_claim_seconds +
                               static_cast<double>(input.reviews.size()) * report.rate_tweet_seconds) /
                              3600.0;
    if (report.annotation_hours > 0.0) {
        report.violations_per_hour =
            violations_per_hour(report.violations, input.decisions.size(), report.rate_claim_seconds / 3600.0,
                                input.reviews.size(), report.rate_tweet_seconds / 3600.0);
    }

    if (!samples.empty()) {
        std::map<ClusterId, std::uint64_t> sizes;
        for (const auto& c : input.claims) sizes[c.cluster] = c.posts;
        for (const auto& [cluster, scores] : samples) {
            auto& size = sizes[cluster];
            if (size < scores.size()) {
                report.warnings.push_back("cluster " + cluster.str() + " size below its sample; using the sample size");
                size = scores.size();
            }
        }
        report.likert_distribution = extrapolate_likert(samples, sizes);
    }

    // cumulative flags
    std::optional<Date> from = input.from;
    std::optional<Date> to = input.to;
    std::vector<FlagOutcome> flags;
    for (const auto& c : input.claims) {
        flags.push_back({c.cluster, c.flagged_on, effective(c.cluster) == Category::Unapproved});
        if (!input.from && (!from || c.flagged_on < *from)) from = c.flagged_on;
        if (!input.to && (!to || c.flagged_on > *to)) to = c.flagged_on;
    }
    if (from && to && !(*to < *from)) report.cumulative_trends = cumulative_trend_series(flags, *from, *to);
    return report;
}

nlohmann::json MetricsReport::to_json() const {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
    nlohmann::json delta = nlohmann::json::object();
    for (const auto& [cluster, d] : delta_days) delta[cluster.str()] = d;
    nlohmann::json topk = nlohmann::json::object();
    for (const auto& [k, t] : pct_unapproved_topk) {
        topk[std::to_string(k)] = {{"percent", t.percent}, {"considered", t.considered}, {"short_list", t.short_list}};
    }
    nlohmann::json likert = nlohmann::json::object();
    for (const auto& [score, share] : likert_distribution) likert[std::to_string(score)] = share;
    nlohmann::json series = nlohmann::json::array();
    for (const auto& p : cumulative_trends) {
        series.push_back({{"date", p.date.str()}, {"flagged", p.flagged}, {"unapproved", p.unapproved}});
    }
    return {{"delta_days", delta},
            {"pct_unapproved_topk", topk},
            {"violations_per_hour", opt(violations_per_hour)},
            {"violations", violations},
            {"annotation_hours", annotation_hours},
            {"rate_claim_seconds", rate_claim_seconds},
            {"rate_tweet_seconds", rate_tweet_seconds},
            {"likert_distribution", likert},
            {"agreement", {{"cohen_kappa", opt(cohen_kappa)}, {"krippendorff_alpha", opt(krippendorff_alpha)}}},
            {"cumulative_trends", series},
            {"warnings", warnings}};
}

void write_trend_series_csv(std::ostream& out, std::span<const TrendPoint> series) {
    out << "date,flagged,unapproved\n";
    for (const auto& p : series) out << p.date.str() << ',' << p.flagged << ',' << p.unapproved << '\n';
}

void write_likert_csv(std::ostream& out, const std::map<int, double>& distribution) {
    out << "score,share\n";
    for (int s = 1; s <= 5; ++s) {
        const auto it = distribution.find(s);
        out << s << ',' << trend::format_double(it == distribution.end() ? 0.0 : it->second) << '\n';
    }
}

}  // namespace trendwatch::metrics
