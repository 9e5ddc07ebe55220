#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendwatch/aggregation.hpp"
#include "trendwatch/stance.hpp"
#include "trendwatch/time.hpp"

namespace trendwatch::review {

using aggregation::ClusterId;

enum class Category { Unapproved, Approved, Unsure, NotATreatment, GeneralHealthAdvice, Repeat };

std::string_view to_string(Category c);
std::optional<Category> parse_category(std::string_view s);

struct ClaimDecision {
    ClusterId cluster;
    std::string annotator_id;
    Category category = Category::Unsure;
    std::optional<Date> debunk_date;
    std::optional<std::string> debunk_url;
    Timestamp decided_at{};
    double elapsed_seconds = 0.0;

    /// Throws ValidationError on debunk fields outside UNAPPROVED, a debunk
    /// date before `window_start`, negative elapsed time or an empty annotator.
    void validate(Date window_start) const;

    bool operator==(const ClaimDecision&) const = default;
    nlohmann::json to_json() const;
    /// "NA" (any case) or empty for debunk fields reads as absent.
    static ClaimDecision from_json(const nlohmann::json& j);
};

struct TweetReview {
    std::string post_id;
    ClusterId cluster;
    std::string annotator_id;
    std::optional<int> likert;
    bool is_duplicate = false;
    Timestamp reviewed_at{};
    double elapsed_seconds = 0.0;

    /// likert in 1..5 iff not a duplicate.
    void validate() const;
    bool is_violation() const { return likert && *likert >= 4; }

    bool operator==(const TweetReview&) const = default;
    nlohmann::json to_json() const;
    static TweetReview from_json(const nlohmann::json& j);
};

// --- crowd annotation ------------------------------------------------------

struct AnnotationSet {
    std::string item_id;
    std::vector<std::pair<std::string, stance::StanceLabel>> labels;  // (worker, label)

    /// Throws ValidationError if a worker labels the item twice.
    void validate() const;
};

/// Strict-majority label, NO_STANCE otherwise. Throws ValidationError when empty.
stance::StanceLabel aggregate_crowd_labels(const AnnotationSet& set);

enum class GateDecision { Retain, Exclude };

inline constexpr double kQualityThreshold = 0.75;

/// Agreement with the majority over SUPPORTING-majority items; below the
/// threshold excludes. Throws NotFoundError if the worker labelled nothing in
/// the batch, ValidationError on an empty batch.
GateDecision worker_quality_gate(std::string_view worker_id, std::span<const AnnotationSet> batch,
                                 double threshold = kQualityThreshold);

// --- sampling ----------------------------------------------------------------

struct CandidatePost {
    std::string post_id;
    std::string text;
};

/// Seeded sample without replacement after dropping posts whose case-folded,
/// whitespace-collapsed text repeats an earlier one (input order decides which
/// survives; input is sorted by post id first). Returns all survivors, in
/// sampled order, when fewer than n remain. Throws ValidationError if n < 1.
std::vector<std::string> sample_tweets(ClusterId cluster, std::span<const CandidatePost> posts, std::size_t n,
                                       std::uint64_t seed);

// --- two-stage queue ---------------------------------------------------------

enum class Adjudication {
    First,          // the first recorded decision is the effective one
    AnyUnapproved,  // UNAPPROVED from either annotator wins
};

struct ReviewConfig {
    /// Every `overlap_every`-th stage-1 entry needs two annotators (0 disables).
    std::size_t overlap_every = 3;
    std::size_t sample_n = 10;
    std::uint64_t seed = 20200401;
    Date debunk_window_start{2020, 4, 1};
    Adjudication adjudication = Adjudication::First;

    nlohmann::json to_json() const;
    static ReviewConfig from_json(const nlohmann::json& j);
    bool operator==(const ReviewConfig&) const = default;
};

struct ClaimEntry {
    ClusterId cluster;
    Date flagged_on;
    std::size_t position = 0;  // queue index, in flag order
    std::size_t required = 1;  // annotators needed
    std::vector<ClaimDecision> decisions;

    bool pending() const { return decisions.size() < required; }
    /// Effective category under `rule`; nullopt while undecided.
    std::optional<Category> effective(Adjudication rule) const;
    nlohmann::json to_json() const;
};

struct TweetEntry {
    std::string post_id;
    ClusterId cluster;
    std::size_t required = 1;
    std::vector<TweetReview> reviews;

    bool pending() const { return reviews.size() < required; }
    nlohmann::json to_json() const;
};

/// Pure state machine for both review stages. Every mutation is a
/// compare-and-set on entry status; a losing write throws ConflictError and
/// leaves the state unchanged.
class ReviewQueue {
public:
    explicit ReviewQueue(ReviewConfig config = {}) : config_(config) {}

    /// New entries in flag order; clusters already flagged on `date` (or still
    /// pending) are skipped. Throws NotFoundError for clusters `exists` rejects.
    std::vector<ClusterId> enqueue_flagged(std::span<const ClusterId> clusters, Date date,
                                           const std::function<bool(ClusterId)>& exists);

    /// Checks a decision against the current state without applying it.
    /// Returns true if applying it would open a stage-2 sample.
    bool check_decision(const ClaimDecision& decision) const;

    /// Applies a checked decision; `sample` is the stage-2 post list when
    /// check_decision returned true, and must be empty otherwise.
    void apply_decision(const ClaimDecision& decision, std::span<const std::string> sample);

    /// check + sample + apply. Returns the sampled post ids (possibly empty).
    std::vector<std::string> record_claim_decision(
        const ClaimDecision& decision,
        const std::function<std::vector<std::string>(ClusterId, std::size_t, std::uint64_t)>& sampler);

    /// Resolves the target entry (the post's only open entry when the review
    /// carries no cluster id) and checks the CAS. Returns the cluster.
    ClusterId check_review(const TweetReview& review) const;
    void apply_review(const TweetReview& review);
    /// check_review + apply_review; returns the review with its cluster filled in.
    TweetReview record_tweet_review(TweetReview review);

    std::vector<const ClaimEntry*> pending_claims() const;
    std::vector<const TweetEntry*> pending_tweets() const;
    /// Stage-2 entries for one cluster, in sample order.
    std::vector<const TweetEntry*> tweets_for(ClusterId cluster) const;
    const std::vector<ClaimEntry>& claims() const { return claims_; }
    const std::map<std::pair<std::string, ClusterId>, TweetEntry>& tweets() const { return tweets_; }
    const std::map<ClusterId, std::vector<std::string>>& samples() const { return samples_; }
    std::optional<Category> effective(ClusterId cluster) const;

    std::vector<ClaimDecision> all_decisions() const;
    std::vector<TweetReview> all_reviews() const;
    const ReviewConfig& config() const { return config_; }

    nlohmann::json to_json() const;
    static ReviewQueue from_json(const nlohmann::json& j);

private:
    const ClaimEntry* open_entry(ClusterId cluster) const;
    ClaimEntry* open_entry(ClusterId cluster);
    bool spawns(const ClaimEntry& entry, const ClaimDecision& decision) const;

    ReviewConfig config_;
    std::vector<ClaimEntry> claims_;
    std::map<std::pair<std::string, ClusterId>, TweetEntry> tweets_;
    std::map<ClusterId, std::vector<std::string>> samples_;
};

// --- guidelines ----------------------------------------------------------------

struct RubricEntry {
    int score = 0;
    std::string text;
};

/// The shipped Likert rubric, scores 1..5.
const std::vector<RubricEntry>& likert_rubric();
/// The rubric file as shipped.
std::string_view likert_rubric_source();

// --- export / import ---------------------------------------------------------

struct ReviewExport {
    std::vector<ClaimDecision> decisions;
    std::vector<TweetReview> reviews;

    nlohmann::json to_json() const;
    static ReviewExport from_json(const nlohmann::json& j);
};

/// Header: cluster_id,annotator_id,category,debunk_date,debunk_url,decided_at,elapsed_seconds
void write_decisions_csv(std::ostream& out, std::span<const ClaimDecision> decisions);
std::vector<ClaimDecision> read_decisions_csv(std::istream& in);

/// Header: post_id,cluster_id,annotator_id,likert,is_duplicate,reviewed_at,elapsed_seconds
void write_reviews_csv(std::ostream& out, std::span<const TweetReview> reviews);
std::vector<TweetReview> read_reviews_csv(std::istream& in);

}  // namespace trendwatch::review
