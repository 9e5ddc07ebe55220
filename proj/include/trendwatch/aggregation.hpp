#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendwatch/stance.hpp"
#include "trendwatch/time.hpp"

namespace trendwatch::aggregation {

struct ClusterId {
    std::uint64_t value = 0;
    auto operator<=>(const ClusterId&) const = default;
    std::string str() const { return std::to_string(value); }
};

using TokenSet = std::set<std::string>;

/// Token set of a normalised claim key.
TokenSet key_tokens(std::string_view key);

/// |a ∩ b| / |a ∪ b|; 0 when both are empty.
double jaccard(const TokenSet& a, const TokenSet& b);

class ApprovedList {
public:
    struct Entry {
        std::string source;
        std::string alias;  // normalised
        TokenSet tokens;
    };

    ApprovedList() = default;
    /// Accepts {"source": ..., "treatments": [...]} or an array of them.
    static ApprovedList from_json(const nlohmann::json& j);
    static ApprovedList load(const std::string& path);
    /// The shipped list of approved treatments and preventions.
    static const ApprovedList& builtin();

    /// Whole-alias match: the key's token set equals some alias' token set.
    bool matches(std::string_view normalized_key) const;
    const std::vector<Entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    /// Content hash, stable across runs, used as the list version.
    std::string version() const;

private:
    std::vector<Entry> entries_;
    std::set<TokenSet> token_sets_;
};

std::vector<stance::StancedMention> filter_supporting(std::span<const stance::StancedMention> mentions);

std::vector<stance::StancedMention> filter_approved(std::span<const stance::StancedMention> mentions,
                                                    const ApprovedList& approved);

struct KeyedMention {
    std::string key;  // normalised claim key
    std::string post_id;
    Date date;
};

struct PostRef {
    std::string post_id;
    Date date;
    auto operator<=>(const PostRef&) const = default;
};

struct KeyStat {
    std::uint64_t count = 0;
    Date first_seen;
    bool operator==(const KeyStat&) const = default;
};

struct ClaimCluster {
    ClusterId id;
    std::map<std::string, KeyStat> members;
    std::set<PostRef> posts;

    /// Highest mention count, then earliest first_seen, then lexicographic.
    const std::string& canonical() const;
    Date first_seen() const;
    std::uint64_t mention_count() const;
    nlohmann::json to_json() const;
};

/// Single-link clustering under jaccard >= threshold over the distinct keys
/// of `mentions`. Clusters come back ordered by (first_seen, canonical) and
/// are numbered 1.. in that order. Throws ValidationError unless
/// 0 < threshold <= 1.
std::vector<ClaimCluster> cluster_claims(std::span<const KeyedMention> mentions, double threshold);

/// Incremental single-link index. Adding keys one at a time yields the same
/// partition as cluster_claims over the same keys; when a new key bridges
/// existing clusters they merge into the one with the smallest id.
class ClaimIndex {
public:
    explicit ClaimIndex(double threshold);

    struct AddResult {
        ClusterId cluster;
        std::vector<ClusterId> absorbed;  // clusters merged into `cluster`
        bool created = false;
    };

    AddResult add(const KeyedMention& mention);
    /// What add() would do, without doing it.
    AddResult preview(const KeyedMention& mention) const;

    /// Reapplies a recorded assignment (event replay): puts the key into
    /// `cluster`, merging `absorbed` into it first.
    void apply(const KeyedMention& mention, ClusterId cluster, std::span<const ClusterId> absorbed);

    const ClaimCluster& cluster(ClusterId id) const;
    std::optional<ClusterId> find(std::string_view key) const;
    const std::map<ClusterId, ClaimCluster>& clusters() const { return clusters_; }
    double threshold() const { return threshold_; }

    nlohmann::json to_json() const;
    static ClaimIndex from_json(const nlohmann::json& j);

private:
    void insert_key(const std::string& key, ClusterId id);
    void merge_into(ClusterId from, ClusterId into);

    double threshold_;
    std::uint64_t next_id_ = 1;
    std::map<ClusterId, ClaimCluster> clusters_;
    std::unordered_map<std::string, ClusterId> key_cluster_;
    std::unordered_map<std::string, TokenSet> key_tokens_;
    std::unordered_map<std::string, std::set<std::string>> token_keys_;
};

}  // namespace trendwatch::aggregation

template <>
struct std::hash<trendwatch::aggregation::ClusterId> {
    std::size_t operator()(const trendwatch::aggregation::ClusterId& id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};
