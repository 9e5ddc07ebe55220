#include "trendwatch/review.hpp"

#include <algorithm>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "builtin_configs.hpp"
#include "trendwatch/csv.hpp"
#include "trendwatch/errors.hpp"
#include "trendwatch/hash.hpp"
#include "trendwatch/text.hpp"
#include "trendwatch/trend.hpp"

namespace trendwatch::review {

using text::fold;
using text::fold_collapse;

namespace {

constexpr std::pair<Category, std::string_view> kCategoryNames[] = {
    {Category::Unapproved, "UNAPPROVED"},
    {Category::Approved, "APPROVED"},
    {Category::Unsure, "UNSURE"},
    {Category::NotATreatment, "NOT_A_TREATMENT"},
    {Category::GeneralHealthAdvice, "GENERAL_HEALTH_ADVICE"},
    {Category::Repeat, "REPEAT"},
};

bool is_na(std::string_view s) {
    return s.empty() || fold(s) == "na";
}

ClusterId cluster_from_json(const nlohmann::json& j) {
    if (j.is_number_integer() && j.get<std::int64_t>() > 0) return ClusterId{j.get<std::uint64_t>()};
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        try {
            std::size_t used = 0;
            const auto v = std::stoull(s, &used);
            if (used == s.size()) return ClusterId{v};
        } catch (const std::exception&) {
        }
    }
    throw ValidationError("cluster_id must be a positive integer");
}

Timestamp parse_ts_or_empty(const std::string& s) {
    if (s.empty()) return Timestamp{};
    const auto t = parse_timestamp(s);
    if (!t) throw ValidationError("bad timestamp: '" + s + "'");
    return *t;
}

Timestamp timestamp_field(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return Timestamp{};
    return parse_ts_or_empty(j[key].get<std::string>());
}

double parse_number(const std::string& s, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError(std::string("bad ") + what + ": '" + s + "'");
}

std::string ts_or_empty(Timestamp t) {
    return t == Timestamp{} ? std::string() : format_timestamp(t);
}

std::size_t required_for(std::size_t position, std::size_t every) {
    return every != 0 && position % every == every - 1 ? 2 : 1;
}

// Uniform in [0, bound) by rejection, so the draw is the same on every
// standard library (std distributions are implementation-defined).
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do x = rng();
    while (x >= limit);
    return x % bound;
}

}  // namespace

std::string_view to_string(Category c) {
    for (const auto& [cat, name] : kCategoryNames) {
        if (cat == c) return name;
    }
    return "UNSURE";
}

std::optional<Category> parse_category(std::string_view s) {
    std::string upper(s);
    for (auto& ch : upper) {
        if (ch >= 'a' && ch <= 'z') ch = static_cast<char>(ch - 'a' + 'A');
        if (ch == ' ' || ch == '-') ch = '_';
    }
    for (const auto& [cat, name] : kCategoryNames) {
        if (name == upper) return cat;
    }
    return std::nullopt;
}

// --- records ----------------------------------------------------------------

void ClaimDecision::validate(Date window_start) const {
    if (cluster.value == 0) throw ValidationError("decision without cluster");
    if (annotator_id.empty()) throw ValidationError("decision without annotator");
    if (category != Category::Unapproved && (debunk_date || debunk_url)) {
        throw ValidationError("debunk evidence only applies to UNAPPROVED decisions");
    }
    if (debunk_date && *debunk_date < window_start) {
        throw ValidationError("debunk date " + debunk_date->str() + " precedes " + window_start.str());
    }
    if (!(elapsed_seconds >= 0.0)) throw ValidationError("elapsed_seconds must be non-negative");
}

nlohmann::json ClaimDecision::to_json() const {
    return {{"cluster_id", cluster.value},
            {"annotator_id", annotator_id},
            {"category", to_string(category)},
            {"debunk_date", debunk_date ? nlohmann::json(debunk_date->str()) : nlohmann::json(nullptr)},
            {"debunk_url", debunk_url ? nlohmann::json(*debunk_url) : nlohmann::json(nullptr)},
            {"decided_at", ts_or_empty(decided_at)},
            {"elapsed_seconds", elapsed_seconds}};
}

ClaimDecision ClaimDecision::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("decision must be an object");
    ClaimDecision d;
    try {
        if (j.contains("cluster_id")) d.cluster = cluster_from_json(j.at("cluster_id"));
        d.annotator_id = j.value("annotator_id", std::string());
        const auto cat = parse_category(j.at("category").get<std::string>());
        if (!cat) throw ValidationError("unknown category '" + j.at("category").get<std::string>() + "'");
        d.category = *cat;
        if (j.contains("debunk_date") && j["debunk_date"].is_string() && !is_na(j["debunk_date"].get<std::string>())) {
            d.debunk_date = Date::parse(j["debunk_date"].get<std::string>());
            if (!d.debunk_date) throw ValidationError("debunk_date must be YYYY-MM-DD or NA");
        }
        if (j.contains("debunk_url") && j["debunk_url"].is_string() && !is_na(j["debunk_url"].get<std::string>())) {
            d.debunk_url = j["debunk_url"].get<std::string>();
        }
        d.decided_at = timestamp_field(j, "decided_at");
        d.elapsed_seconds = j.value("elapsed_seconds", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("decision: ") + e.what());
    }
    return d;
}

void TweetReview::validate() const {
    if (post_id.empty()) throw ValidationError("review without post id");
    if (annotator_id.empty()) throw ValidationError("review without annotator");
    if (is_duplicate && likert) throw ValidationError("duplicate-marked reviews carry no score");
    if (!is_duplicate && !likert) throw ValidationError("likert score required unless marked duplicate");
    if (likert && (*likert < 1 || *likert > 5)) throw ValidationError("likert must be in 1..5");
    if (!(elapsed_seconds >= 0.0)) throw ValidationError("elapsed_seconds must be non-negative");
}

nlohmann::json TweetReview::to_json() const {
    return {{"post_id", post_id},
            {"cluster_id", cluster.value},
            {"annotator_id", annotator_id},
            {"likert", likert ? nlohmann::json(*likert) : nlohmann::json(nullptr)},
            {"is_duplicate", is_duplicate},
            {"reviewed_at", ts_or_empty(reviewed_at)},
            {"elapsed_seconds", elapsed_seconds}};
}

TweetReview TweetReview::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("review must be an object");
    TweetReview r;
    try {
        r.post_id = j.value("post_id", std::string());
        if (j.contains("cluster_id") && !j["cluster_id"].is_null()) r.cluster = cluster_from_json(j["cluster_id"]);
        r.annotator_id = j.value("annotator_id", std::string());
        if (j.contains("likert") && !j["likert"].is_null()) {
            if (!j["likert"].is_number_integer()) throw ValidationError("likert must be an integer");
            r.likert = j["likert"].get<int>();
        }
        r.is_duplicate = j.value("is_duplicate", false);
        r.reviewed_at = timestamp_field(j, "reviewed_at");
        r.elapsed_seconds = j.value("elapsed_seconds", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("review: ") + e.what());
    }
    return r;
}

// --- crowd -------------------------------------------------------------------

void AnnotationSet::validate() const {
    std::set<std::string_view> seen;
    for (const auto& [worker, label] : labels) {
        if (!seen.insert(worker).second) {
            throw ValidationError("worker " + worker + " labelled item " + item_id + " twice");
        }
    }
}

stance::StanceLabel aggregate_crowd_labels(const AnnotationSet& set) {
    if (set.labels.empty()) throw ValidationError("annotation set " + set.item_id + " has no labels");
    std::map<stance::StanceLabel, std::size_t> votes;
    for (const auto& [worker, label] : set.labels) ++votes[label];
    for (const auto& [label, n] : votes) {
        if (2 * n > set.labels.size()) return label;
    }
    return stance::StanceLabel::NoStance;
}

GateDecision worker_quality_gate(std::string_view worker_id, std::span<const AnnotationSet> batch,
                                 double threshold) {
    if (batch.empty()) throw ValidationError("quality gate needs a non-empty batch");
    bool seen = false;
    std::size_t considered = 0;
    std::size_t matched = 0;
    for (const auto& set : batch) {
        const auto it = std::find_if(set.labels.begin(), set.labels.end(),
                                     [&](const auto& l) { return l.first == worker_id; });
        if (it == set.labels.end()) continue;
        seen = true;
        if (aggregate_crowd_labels(set) != stance::StanceLabel::Supporting) continue;
        ++considered;
        if (it->second == stance::StanceLabel::Supporting) ++matched;
    }
    if (!seen) throw NotFoundError("worker " + std::string(worker_id) + " has no labels in the batch");
    if (considered == 0) return GateDecision::Retain;
    const double agreement = static_cast<double>(matched) / static_cast<double>(considered);
    return agreement < threshold ? GateDecision::Exclude : GateDecision::Retain;
}

// --- sampling ----------------------------------------------------------------

std::vector<std::string> sample_tweets(ClusterId cluster, std::span<const CandidatePost> posts, std::size_t n,
                                       std::uint64_t seed) {
    if (n < 1) throw ValidationError("sample size must be at least 1");
    std::vector<const CandidatePost*> ordered;
    ordered.reserve(posts.size());
    for (const auto& p : posts) ordered.push_back(&p);
    std::sort(ordered.begin(), ordered.end(), [](const auto* a, const auto* b) { return a->post_id < b->post_id; });

    std::vector<std::string> pool;
    std::unordered_set<std::string> texts;
    std::string last_id;
    for (const auto* p : ordered) {
        if (!pool.empty() && p->post_id == last_id) continue;
        last_id = p->post_id;
        if (texts.insert(fold_collapse(p->text)).second) pool.push_back(p->post_id);
    }

    std::mt19937_64 rng(fnv1a64(cluster.str(), seed ^ 0xcbf29ce484222325ULL));
    const std::size_t k = std::min(n, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + bounded(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

// --- config ------------------------------------------------------------------

nlohmann::json ReviewConfig::to_json() const {
    return {{"overlap_every", overlap_every},
            {"sample_n", sample_n},
            {"seed", seed},
            {"debunk_window_start", debunk_window_start.str()},
            {"adjudication", adjudication == Adjudication::First ? "first" : "any_unapproved"}};
}

ReviewConfig ReviewConfig::from_json(const nlohmann::json& j) {
    ReviewConfig c;
    try {
        c.overlap_every = j.value("overlap_every", c.overlap_every);
        c.sample_n = j.value("sample_n", c.sample_n);
        c.seed = j.value("seed", c.seed);
        if (j.contains("debunk_window_start")) {
            const auto d = Date::parse(j["debunk_window_start"].get<std::string>());
            if (!d) throw ValidationError("debunk_window_start must be YYYY-MM-DD");
            c.debunk_window_start = *d;
        }
        const auto rule = j.value("adjudication", std::string("first"));
        if (rule == "first") {
            c.adjudication = Adjudication::First;
        } else if (rule == "any_unapproved") {
            c.adjudication = Adjudication::AnyUnapproved;
        } else {
            throw ValidationError("adjudication must be 'first' or 'any_unapproved'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("review config: ") + e.what());
    }
    if (c.sample_n < 1) throw ValidationError("sample_n must be at least 1");
    return c;
}

// --- entries -----------------------------------------------------------------

std::optional<Category> ClaimEntry::effective(Adjudication rule) const {
    if (decisions.empty()) return std::nullopt;
    if (rule == Adjudication::AnyUnapproved) {
        for (const auto& d : decisions) {
            if (d.category == Category::Unapproved) return Category::Unapproved;
        }
    }
    return decisions.front().category;
}

nlohmann::json ClaimEntry::to_json() const {
    nlohmann::json ds = nlohmann::json::array();
    for (const auto& d : decisions) ds.push_back(d.to_json());
    return {{"cluster_id", cluster.value}, {"flagged_on", flagged_on.str()}, {"position", position},
            {"required", required},        {"pending", pending()},           {"decisions", ds}};
}

nlohmann::json TweetEntry::to_json() const {
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : reviews) rs.push_back(r.to_json());
    return {{"post_id", post_id}, {"cluster_id", cluster.value}, {"required", required},
            {"pending", pending()}, {"reviews", rs}};
}

// --- queue -------------------------------------------------------------------

std::vector<ClusterId> ReviewQueue::enqueue_flagged(std::span<const ClusterId> clusters, Date date,
                                                    const std::function<bool(ClusterId)>& exists) {
    for (const auto id : clusters) {
        if (exists && !exists(id)) throw NotFoundError("unknown cluster " + id.str());
    }
    std::vector<ClusterId> added;
    for (const auto id : clusters) {
        const bool present = std::any_of(claims_.begin(), claims_.end(), [&](const ClaimEntry& e) {
            return e.cluster == id && (e.flagged_on == date || e.pending());
        });
        if (present) continue;
        ClaimEntry entry;
        entry.cluster = id;
        entry.flagged_on = date;
        entry.position = claims_.size();
        entry.required = required_for(entry.position, config_.overlap_every);
        claims_.push_back(std::move(entry));
        added.push_back(id);
    }
    return added;
}

const ClaimEntry* ReviewQueue::open_entry(ClusterId cluster) const {
    for (const auto& e : claims_) {
        if (e.cluster == cluster && e.pending()) return &e;
    }
    return nullptr;
}

ClaimEntry* ReviewQueue::open_entry(ClusterId cluster) {
    return const_cast<ClaimEntry*>(std::as_const(*this).open_entry(cluster));
}

bool ReviewQueue::spawns(const ClaimEntry& entry, const ClaimDecision& decision) const {
    if (decision.category != Category::Unapproved || samples_.count(entry.cluster)) return false;
    return config_.adjudication == Adjudication::AnyUnapproved || entry.decisions.empty();
}

bool ReviewQueue::check_decision(const ClaimDecision& decision) const {
    decision.validate(config_.debunk_window_start);
    const auto* entry = open_entry(decision.cluster);
    if (!entry) {
        const bool known = std::any_of(claims_.begin(), claims_.end(),
                                       [&](const ClaimEntry& e) { return e.cluster == decision.cluster; });
        if (known) throw ConflictError("claim " + decision.cluster.str() + " is already decided");
        throw NotFoundError("claim " + decision.cluster.str() + " is not in the review queue");
    }
    for (const auto& d : entry->decisions) {
        if (d.annotator_id == decision.annotator_id) {
            throw ConflictError("annotator " + decision.annotator_id + " already decided claim " +
                                decision.cluster.str());
        }
    }
    return spawns(*entry, decision);
}

void ReviewQueue::apply_decision(const ClaimDecision& decision, std::span<const std::string> sample) {
    const bool spawn = check_decision(decision);
    if (!spawn && !sample.empty()) throw ValidationError("stage-2 sample given for a decision that opens none");
    auto* entry = open_entry(decision.cluster);
    entry->decisions.push_back(decision);
    if (!spawn) return;
    auto& recorded = samples_[decision.cluster];
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto key = std::make_pair(sample[i], decision.cluster);
        if (tweets_.count(key)) throw ValidationError("post " + sample[i] + " sampled twice");
        TweetEntry t;
        t.post_id = sample[i];
        t.cluster = decision.cluster;
        t.required = required_for(i, config_.overlap_every);
        tweets_.emplace(key, std::move(t));
        recorded.push_back(sample[i]);
    }
}

std::vector<std::string> ReviewQueue::record_claim_decision(
    const ClaimDecision& decision,
    const std::function<std::vector<std::string>(ClusterId, std::size_t, std::uint64_t)>& sampler) {
    std::vector<std::string> sample;
    if (check_decision(decision) && sampler) sample = sampler(decision.cluster, config_.sample_n, config_.seed);
    apply_decision(decision, sample);
    return sample;
}

ClusterId ReviewQueue::check_review(const TweetReview& review) const {
    review.validate();
    const TweetEntry* entry = nullptr;
    if (review.cluster.value == 0) {
        std::size_t open = 0;
        bool any = false;
        for (const auto& [key, t] : tweets_) {
            if (key.first != review.post_id) continue;
            any = true;
            if (t.pending()) {
                ++open;
                entry = &t;
            }
        }
        if (open > 1) throw ValidationError("post " + review.post_id + " is queued under several claims; give cluster_id");
        if (!any) throw NotFoundError("post " + review.post_id + " is not in the stage-2 queue");
        if (open == 0) throw ConflictError("post " + review.post_id + " is already reviewed");
    } else {
        const auto it = tweets_.find({review.post_id, review.cluster});
        if (it == tweets_.end()) {
            throw NotFoundError("post " + review.post_id + " is not queued under claim " + review.cluster.str());
        }
        entry = &it->second;
        if (!entry->pending()) throw ConflictError("post " + review.post_id + " is already reviewed");
    }
    for (const auto& r : entry->reviews) {
        if (r.annotator_id == review.annotator_id) {
            throw ConflictError("annotator " + review.annotator_id + " already reviewed post " + review.post_id);
        }
    }
    return entry->cluster;
}

void ReviewQueue::apply_review(const TweetReview& review) {
    const auto cluster = check_review(review);
    auto stored = review;
    stored.cluster = cluster;
    tweets_.at({review.post_id, cluster}).reviews.push_back(std::move(stored));
}

TweetReview ReviewQueue::record_tweet_review(TweetReview review) {
    review.cluster = check_review(review);
    apply_review(review);
    return review;
}

std::vector<const ClaimEntry*> ReviewQueue::pending_claims() const {
    std::vector<const ClaimEntry*> out;
    for (const auto& e : claims_) {
        if (e.pending()) out.push_back(&e);
    }
    return out;
}

std::vector<const TweetEntry*> ReviewQueue::pending_tweets() const {
    std::vector<const TweetEntry*> out;
    // claim queue order, then sample order
    for (const auto& e : claims_) {
        const auto it = samples_.find(e.cluster);
        if (it == samples_.end()) continue;
        for (const auto& post : it->second) {
            const auto& t = tweets_.at({post, e.cluster});
            if (t.pending()) out.push_back(&t);
        }
    }
    std::vector<const TweetEntry*> unique;
    std::set<const TweetEntry*> seen;
    for (const auto* t : out) {
        if (seen.insert(t).second) unique.push_back(t);
    }
    return unique;
}

std::vector<const TweetEntry*> ReviewQueue::tweets_for(ClusterId cluster) const {
    std::vector<const TweetEntry*> out;
    const auto it = samples_.find(cluster);
    if (it == samples_.end()) return out;
    for (const auto& post : it->second) out.push_back(&tweets_.at({post, cluster}));
    return out;
}

std::optional<Category> ReviewQueue::effective(ClusterId cluster) const {
    for (const auto& e : claims_) {
        if (e.cluster != cluster) continue;
        if (auto c = e.effective(config_.adjudication)) return c;
    }
    return std::nullopt;
}

std::vector<ClaimDecision> ReviewQueue::all_decisions() const {
    std::vector<ClaimDecision> out;
    for (const auto& e : claims_) out.insert(out.end(), e.decisions.begin(), e.decisions.end());
    return out;
}

std::vector<TweetReview> ReviewQueue::all_reviews() const {
    std::vector<TweetReview> out;
    for (const auto& e : claims_) {
        for (const auto* t : tweets_for(e.cluster)) out.insert(out.end(), t->reviews.begin(), t->reviews.end());
    }
    // a cluster flagged twice would be listed twice above
    std::vector<TweetReview> unique;
    for (auto& r : out) {
        if (std::find(unique.begin(), unique.end(), r) == unique.end()) unique.push_back(std::move(r));
    }
    return unique;
}

nlohmann::json ReviewQueue::to_json() const {
    nlohmann::json claims = nlohmann::json::array();
    for (const auto& e : claims_) claims.push_back(e.to_json());
    nlohmann::json tweets = nlohmann::json::array();
    for (const auto& [key, t] : tweets_) tweets.push_back(t.to_json());
    nlohmann::json samples = nlohmann::json::object();
    for (const auto& [cluster, posts] : samples_) samples[cluster.str()] = posts;
    return {{"config", config_.to_json()}, {"claims", claims}, {"tweets", tweets}, {"samples", samples}};
}

ReviewQueue ReviewQueue::from_json(const nlohmann::json& j) {
    try {
        ReviewQueue q(ReviewConfig::from_json(j.at("config")));
        for (const auto& e : j.at("claims")) {
            ClaimEntry entry;
            entry.cluster = cluster_from_json(e.at("cluster_id"));
            const auto d = Date::parse(e.at("flagged_on").get<std::string>());
            if (!d) throw ValidationError("bad flagged_on");
            entry.flagged_on = *d;
            entry.position = e.at("position").get<std::size_t>();
            entry.required = e.at("required").get<std::size_t>();
            for (const auto& dj : e.at("decisions")) entry.decisions.push_back(ClaimDecision::from_json(dj));
            q.claims_.push_back(std::move(entry));
        }
        for (const auto& t : j.at("tweets")) {
            TweetEntry entry;
            entry.post_id = t.at("post_id").get<std::string>();
            entry.cluster = cluster_from_json(t.at("cluster_id"));
            entry.required = t.at("required").get<std::size_t>();
            for (const auto& rj : t.at("reviews")) entry.reviews.push_back(TweetReview::from_json(rj));
            const auto key = std::make_pair(entry.post_id, entry.cluster);
            q.tweets_.emplace(key, std::move(entry));
        }
        for (const auto& [cluster, posts] : j.at("samples").items()) {
            q.samples_[cluster_from_json(cluster)] = posts.get<std::vector<std::string>>();
        }
        return q;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("review queue: ") + e.what());
    }
}

// --- export / import ---------------------------------------------------------

nlohmann::json ReviewExport::to_json() const {
    nlohmann::json ds = nlohmann::json::array();
    for (const auto& d : decisions) ds.push_back(d.to_json());
    nlohmann::json rs = nlohmann::json::array();
    for (const auto& r : reviews) rs.push_back(r.to_json());
    return {{"decisions", ds}, {"reviews", rs}};
}

ReviewExport ReviewExport::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("review export must be an object");
    ReviewExport out;
    for (const auto& d : j.value("decisions", nlohmann::json::array())) out.decisions.push_back(ClaimDecision::from_json(d));
    for (const auto& r : j.value("reviews", nlohmann::json::array())) out.reviews.push_back(TweetReview::from_json(r));
    return out;
}

namespace {

using trend::csv_escape;
using trend::format_double;

const std::vector<std::string> kDecisionHeader = {"cluster_id", "annotator_id", "category", "debunk_date",
                                                  "debunk_url", "decided_at",   "elapsed_seconds"};
const std::vector<std::string> kReviewHeader = {"post_id",      "cluster_id",  "annotator_id",   "likert",
                                                "is_duplicate", "reviewed_at", "elapsed_seconds"};

void write_header(std::ostream& out, const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
}

std::vector<std::vector<std::string>> body(std::istream& in, const std::vector<std::string>& header) {
    auto rows = csv::read(in);
    if (rows.empty()) return {};
    if (rows.front() != header) throw ValidationError("unexpected CSV header");
    rows.erase(rows.begin());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != header.size()) {
            throw ValidationError("CSV row " + std::to_string(i + 2) + " has " + std::to_string(rows[i].size()) +
                                  " fields");
        }
    }
    return rows;
}

}  // namespace

void write_decisions_csv(std::ostream& out, std::span<const ClaimDecision> decisions) {
    write_header(out, kDecisionHeader);
    for (const auto& d : decisions) {
        out << d.cluster.value << ',' << csv_escape(d.annotator_id) << ',' << to_string(d.category) << ','
            << (d.debunk_date ? d.debunk_date->str() : "") << ',' << csv_escape(d.debunk_url.value_or("")) << ','
            << ts_or_empty(d.decided_at) << ',' << format_double(d.elapsed_seconds) << '\n';
    }
}

std::vector<ClaimDecision> read_decisions_csv(std::istream& in) {
    std::vector<ClaimDecision> out;
    for (const auto& row : body(in, kDecisionHeader)) {
        nlohmann::json j = {{"cluster_id", row[0]}, {"annotator_id", row[1]}, {"category", row[2]},
                            {"debunk_date", row[3]}, {"debunk_url", row[4]}};
        auto d = ClaimDecision::from_json(j);
        d.decided_at = parse_ts_or_empty(row[5]);
        d.elapsed_seconds = row[6].empty() ? 0.0 : parse_number(row[6], "elapsed_seconds");
        out.push_back(std::move(d));
    }
    return out;
}

void write_reviews_csv(std::ostream& out, std::span<const TweetReview> reviews) {
    write_header(out, kReviewHeader);
    for (const auto& r : reviews) {
        out << csv_escape(r.post_id) << ',' << r.cluster.value << ',' << csv_escape(r.annotator_id) << ','
            << (r.likert ? std::to_string(*r.likert) : "") << ',' << (r.is_duplicate ? "true" : "false") << ','
            << ts_or_empty(r.reviewed_at) << ',' << format_double(r.elapsed_seconds) << '\n';
    }
}

std::vector<TweetReview> read_reviews_csv(std::istream& in) {
    std::vector<TweetReview> out;
    for (const auto& row : body(in, kReviewHeader)) {
        TweetReview r;
        r.post_id = row[0];
        if (!row[1].empty()) r.cluster = cluster_from_json(row[1]);
        r.annotator_id = row[2];
        if (!row[3].empty()) {
            const double v = parse_number(row[3], "likert");
            if (v != static_cast<int>(v)) throw ValidationError("likert must be an integer");
            r.likert = static_cast<int>(v);
        }
        const auto dup = fold(row[4]);
        if (dup == "true" || dup == "yes" || dup == "1") {
            r.is_duplicate = true;
        } else if (!(dup.empty() || dup == "false" || dup == "no" || dup == "0")) {
            throw ValidationError("bad is_duplicate: '" + row[4] + "'");
        }
        r.reviewed_at = parse_ts_or_empty(row[5]);
        r.elapsed_seconds = row[6].empty() ? 0.0 : parse_number(row[6], "elapsed_seconds");
        out.push_back(std::move(r));
    }
    return out;
}

// --- guidelines ----------------------------------------------------------------

std::string_view likert_rubric_source() { return builtin::likert_rubric(); }

const std::vector<RubricEntry>& likert_rubric() {
    static const std::vector<RubricEntry> entries = [] {
        std::vector<RubricEntry> out;
        std::istringstream in{std::string(builtin::likert_rubric())};
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line.front() == '#') continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos) continue;
            out.push_back({std::stoi(line.substr(0, tab)), line.substr(tab + 1)});
        }
        return out;
    }();
    return entries;
}

}  // namespace trendwatch::review
