#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendwatch/aggregation.hpp"
#include "trendwatch/fisher.hpp"
#include "trendwatch/time.hpp"

namespace trendwatch::trend {

using aggregation::ClusterId;

inline constexpr double kDefaultAlpha = 1.15e-6;

struct TrendConfig {
    double alpha = kDefaultAlpha;
    /// Days from the first rollup that only accumulate history.
    int warmup_days = 31;
    /// Clusters below this day count are ranked last and never enter the
    /// top-N history or get flagged.
    std::uint64_t min_day_count = 1;
    std::size_t history_depth = 100;

    nlohmann::json to_json() const;
    static TrendConfig from_json(const nlohmann::json& j);
};

struct TrendRecord {
    ClusterId cluster;
    Date date;
    ContingencyTable table;
    double p_value = 1.0;
    double z = 0.0;
    std::size_t rank = 0;
    std::string canonical;
    bool rankable = true;
    bool novel = false;

    bool operator==(const TrendRecord&) const = default;
    nlohmann::json to_json() const;
    static TrendRecord from_json(const nlohmann::json& j);
};

/// Per-day input for one cluster.
struct DayCount {
    ClusterId cluster;
    std::uint64_t count = 0;
    std::string canonical;
};

class TrendState {
public:
    std::uint64_t cumulative(ClusterId id) const;
    std::uint64_t cumulative_total() const { return cumulative_total_; }
    std::optional<Date> last_date() const { return last_date_; }
    std::optional<Date> first_date() const { return first_date_; }

    /// Whether the cluster was ranked in a daily top-N strictly before `date`.
    bool in_history_before(ClusterId id, Date date) const;
    std::optional<Date> first_trending(ClusterId id) const;
    const std::map<ClusterId, Date>& first_trending_all() const { return first_trending_; }
    const std::map<ClusterId, Date>& history() const { return history_; }

    /// Folds `from` into `into` after a cluster merge.
    void merge(ClusterId from, ClusterId into);

    nlohmann::json to_json() const;
    static TrendState from_json(const nlohmann::json& j);
    bool operator==(const TrendState&) const = default;

private:
    friend std::vector<TrendRecord> daily_rollup(TrendState&, Date, std::span<const DayCount>,
                                                 const TrendConfig&);
    std::map<ClusterId, std::uint64_t> cumulative_;
    std::uint64_t cumulative_total_ = 0;
    std::map<ClusterId, std::uint64_t> last_day_;
    std::map<ClusterId, Date> history_;          // cluster -> first date in a top-N list
    std::map<ClusterId, Date> first_trending_;   // cluster -> first flagged date
    std::optional<Date> first_date_;
    std::optional<Date> last_date_;
};

/// Orders records by (rankable first, p asc, a desc, canonical asc, id asc)
/// and assigns ranks 1..n.
void rank_records(std::vector<TrendRecord>& records);

/// Clusters with p < alpha that were not in a top-N list before the
/// records' date. Throws ValidationError on mixed dates or alpha outside (0, 1).
std::vector<ClusterId> detect_novel(std::span<const TrendRecord> records, const TrendState& state,
                                    double alpha);

/// Rolls up one day: builds each cluster's table from its day count, its
/// cumulative count before the day, the day total and the cumulative total
/// before the day; ranks; flags novel clusters; then folds the day into the
/// cumulative counts. Days inside the warm-up window return no records.
/// Throws ValidationError when `date` is not after the last rolled-up date
/// or a cluster appears twice.
std::vector<TrendRecord> daily_rollup(TrendState& state, Date date, std::span<const DayCount> day,
                                      const TrendConfig& config);

/// Serialises rollups: one at a time per detector.
class TrendDetector {
public:
    explicit TrendDetector(TrendConfig config = {}) : config_(config) {}

    std::vector<TrendRecord> rollup(Date date, std::span<const DayCount> day);
    void merge(ClusterId from, ClusterId into);
    TrendState snapshot() const;
    const TrendConfig& config() const { return config_; }

private:
    TrendConfig config_;
    mutable std::mutex mutex_;
    TrendState state_;
};

/// "date,rank,canonical,a,C(T),C(D),N,p,z,novel"
void write_csv_header(std::ostream& out);
void write_csv(std::ostream& out, std::span<const TrendRecord> records);
std::string format_double(double v);
std::string csv_escape(std::string_view field);

}  // namespace trendwatch::trend
