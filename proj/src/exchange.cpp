#include "trendwatch/exchange.hpp"

#include <algorithm>

#include "trendwatch/errors.hpp"

namespace trendwatch::exchange {

using nlohmann::json;

json to_json(const metrics::ClaimOutcome& c) {
    return {{"cluster_id", c.cluster.value},
            {"canonical", c.canonical},
            {"flagged_on", c.flagged_on.str()},
            {"p_value", c.p_value},
            {"posts", c.posts}};
}

metrics::ClaimOutcome claim_outcome_from_json(const json& j) {
    try {
        metrics::ClaimOutcome c;
        c.cluster = aggregation::ClusterId{j.at("cluster_id").get<std::uint64_t>()};
        c.canonical = j.value("canonical", std::string());
        const auto d = Date::parse(j.at("flagged_on").get<std::string>());
        if (!d) throw ValidationError("claim flagged_on must be YYYY-MM-DD");
        c.flagged_on = *d;
        c.p_value = j.value("p_value", 1.0);
        c.posts = j.value("posts", std::uint64_t{0});
        return c;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad claim record: ") + e.what());
    }
}

json export_reviews(const store::State& state) {
    const auto input = store::report_input(state);
    json claims = json::array();
    for (const auto& c : input.claims) claims.push_back(to_json(c));
    review::ReviewExport data{input.decisions, input.reviews};
    auto j = data.to_json();
    j["run_id"] = state.run_id;
    j["config"] = state.config ? state.config->to_json() : json(nullptr);
    j["claims"] = std::move(claims);
    return j;
}

metrics::ReportInput report_input_from_export(const json& j) {
    if (!j.is_object()) throw ValidationError("export must be a JSON object");
    metrics::ReportInput in;
    for (const auto& c : j.value("claims", json::array())) in.claims.push_back(claim_outcome_from_json(c));
    const auto data = review::ReviewExport::from_json(j);
    in.decisions = data.decisions;
    in.reviews = data.reviews;
    if (j.contains("config") && j["config"].is_object()) {
        in.adjudication = store::RunConfig::from_json(j["config"]).adjudication;
    }
    return in;
}

json ImportResult::to_json() const {
    return {{"applied", applied}, {"duplicates", duplicates}, {"errors", errors}};
}

ImportResult import_reviews(store::Store& store, const review::ReviewExport& data) {
    ImportResult result;
    const auto [decisions, reviews] = store.read([](const store::State& s) {
        return std::pair{s.review.all_decisions(), s.review.all_reviews()};
    });
    for (const auto& d : data.decisions) {
        if (std::find(decisions.begin(), decisions.end(), d) != decisions.end()) {
            ++result.duplicates;
            continue;
        }
        try {
            store.decide(d);
            ++result.applied;
        } catch (const Error& e) {
            result.errors.push_back("decision " + d.cluster.str() + "/" + d.annotator_id + ": " + e.what());
        }
    }
    for (const auto& r : data.reviews) {
        auto same = [&](const review::TweetReview& x) {
            return x.post_id == r.post_id && x.annotator_id == r.annotator_id && x.likert == r.likert &&
                   x.is_duplicate == r.is_duplicate && x.reviewed_at == r.reviewed_at &&
                   (r.cluster.value == 0 || x.cluster == r.cluster);
        };
        if (std::any_of(reviews.begin(), reviews.end(), same)) {
            ++result.duplicates;
            continue;
        }
        try {
            store.review(r);
            ++result.applied;
        } catch (const Error& e) {
            result.errors.push_back("review " + r.post_id + "/" + r.annotator_id + ": " + e.what());
        }
    }
    return result;
}

}  // namespace trendwatch::exchange
