#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendwatch/review.hpp"
#include "trendwatch/time.hpp"

namespace trendwatch::metrics {

using aggregation::ClusterId;

/// Fallback per-item annotation times, seconds.
inline constexpr double kClaimSeconds = 89.7;
inline constexpr double kTweetSeconds = 16.1;

/// debunked - detected, whole UTC days. Non-negative means detected no later.
int compute_delta(Date detected, Date debunked);
/// Same, in hours, for timestamp-level inputs.
double compute_delta_hours(Timestamp detected, Timestamp debunked);

struct RankedClaim {
    ClusterId cluster;
    std::optional<review::Category> category;  // nullopt: undecided
};

struct TopK {
    double percent = 0.0;
    std::size_t considered = 0;
    bool short_list = false;  // fewer than K ranked claims
};

/// 100 * |top-K decided UNAPPROVED| / min(K, ranked). Throws ValidationError if K < 1.
TopK pct_unapproved_topk(std::span<const RankedClaim> ranked, std::size_t k);

/// violations / (n_claims * rate_claim + n_tweets * rate_tweet), rates in
/// hours. Throws DomainError when the total is zero, ValidationError on
/// negative inputs.
double violations_per_hour(std::uint64_t violations, std::uint64_t n_claims, double rate_claim_hours,
                           std::uint64_t n_tweets, double rate_tweet_hours);

/// Weights each cluster's sampled score distribution by its post count and
/// normalises. Throws ValidationError on empty input, scores outside 1..5, a
/// missing size, or a size below the sample count.
std::map<int, double> extrapolate_likert(const std::map<ClusterId, std::vector<int>>& samples,
                                         const std::map<ClusterId, std::uint64_t>& cluster_sizes);

/// Cohen's kappa with marginal-product chance agreement. 1.0 when both
/// observed and chance agreement are 1. Throws ValidationError when empty.
double cohen_kappa(std::span<const std::pair<std::string, std::string>> pairs);

using RatingMatrix = std::vector<std::vector<std::optional<int>>>;  // items x raters

/// Krippendorff's alpha, ordinal metric, coincidence-matrix form; items with
/// fewer than two ratings are dropped. 1.0 when expected disagreement is 0.
/// Throws DomainError when no item has two ratings.
double krippendorff_alpha_ordinal(const RatingMatrix& matrix);

struct F1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Multiset token overlap. Empty vs empty scores 1 everywhere.
F1 token_f1(std::span<const std::string> predicted, std::span<const std::string> gold);

struct FlagOutcome {
    ClusterId cluster;
    Date flagged_on;
    bool unapproved = false;
};

struct TrendPoint {
    Date date;
    std::uint64_t flagged = 0;
    std::uint64_t unapproved = 0;
    bool operator==(const TrendPoint&) const = default;
};

/// Running totals for every date in [from, to]. Throws ValidationError if to < from.
std::vector<TrendPoint> cumulative_trend_series(std::span<const FlagOutcome> flags, Date from, Date to);

// --- report -------------------------------------------------------------------

/// One flagged claim as the report sees it.
struct ClaimOutcome {
    ClusterId cluster;
    std::string canonical;
    Date flagged_on;
    double p_value = 1.0;
    std::uint64_t posts = 0;  // supporting posts in the cluster
};

struct ReportInput {
    std::vector<ClaimOutcome> claims;
    std::vector<review::ClaimDecision> decisions;
    std::vector<review::TweetReview> reviews;
    review::Adjudication adjudication = review::Adjudication::First;
    std::vector<std::size_t> ks = {5, 50, 100};
    /// Use the recorded per-item times when present; otherwise (or when
    /// false) the fallback rates.
    bool measured_rates = true;
    std::optional<Date> from;
    std::optional<Date> to;
};

struct MetricsReport {
    std::map<ClusterId, int> delta_days;
    std::map<std::size_t, TopK> pct_unapproved_topk;
    std::optional<double> violations_per_hour;
    std::uint64_t violations = 0;
    double annotation_hours = 0.0;
    double rate_claim_seconds = kClaimSeconds;
    double rate_tweet_seconds = kTweetSeconds;
    std::map<int, double> likert_distribution;
    std::optional<double> cohen_kappa;
    std::optional<double> krippendorff_alpha;
    std::vector<TrendPoint> cumulative_trends;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

MetricsReport build_report(const ReportInput& input);

/// "date,flagged,unapproved"
void write_trend_series_csv(std::ostream& out, std::span<const TrendPoint> series);
/// "score,share"
void write_likert_csv(std::ostream& out, const std::map<int, double>& distribution);

}  // namespace trendwatch::metrics
