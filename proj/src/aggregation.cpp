#include "trendwatch/aggregation.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "builtin_configs.hpp"
#include "trendwatch/errors.hpp"
#include "trendwatch/hash.hpp"
#include "trendwatch/text.hpp"

namespace trendwatch::aggregation {

TokenSet key_tokens(std::string_view key) {
    TokenSet out;
    for (auto& token : text::tokenize(key)) out.insert(std::move(token.folded));
    return out;
}

double jaccard(const TokenSet& a, const TokenSet& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t shared = 0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) {
            ++ia;
        } else if (*ib < *ia) {
            ++ib;
        } else {
            ++shared;
            ++ia;
            ++ib;
        }
    }
    return static_cast<double>(shared) / static_cast<double>(a.size() + b.size() - shared);
}

// ---------------------------------------------------------------------------
// ApprovedList

ApprovedList ApprovedList::from_json(const nlohmann::json& j) {
    ApprovedList list;
    auto add_group = [&](const nlohmann::json& group) {
        if (!group.is_object() || !group.contains("treatments") || !group["treatments"].is_array()) {
            throw ValidationError("approved list entry needs a 'treatments' array");
        }
        const std::string source = group.value("source", "");
        for (const auto& item : group["treatments"]) {
            if (!item.is_string()) throw ValidationError("approved treatment must be a string");
            Entry entry;
            entry.source = source;
            entry.alias = extraction::normalize_key(item.get<std::string>());
            if (entry.alias.empty()) continue;
            entry.tokens = key_tokens(entry.alias);
            list.token_sets_.insert(entry.tokens);
            list.entries_.push_back(std::move(entry));
        }
    };
    if (j.is_array()) {
        for (const auto& group : j) add_group(group);
    } else {
        add_group(j);
    }
    return list;
}

ApprovedList ApprovedList::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open approved list '" + path + "'");
    try {
        return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("approved list '" + path + "': " + e.what());
    }
}

const ApprovedList& ApprovedList::builtin() {
    static const ApprovedList list = from_json(nlohmann::json::parse(builtin::approved_treatments()));
    return list;
}

bool ApprovedList::matches(std::string_view normalized_key) const {
    if (token_sets_.empty()) return false;
    return token_sets_.count(key_tokens(normalized_key)) > 0;
}

std::string ApprovedList::version() const {
    std::uint64_t h = fnv1a64("approved-list");
    for (const auto& entry : entries_) {
        h = fnv1a64(entry.source, h);
        h = fnv1a64(std::string_view("\x1f", 1), h);
        h = fnv1a64(entry.alias, h);
        h = fnv1a64(std::string_view("\x1e", 1), h);
    }
    return hex64(h);
}

// ---------------------------------------------------------------------------
// Filters

std::vector<stance::StancedMention> filter_supporting(std::span<const stance::StancedMention> mentions) {
    std::vector<stance::StancedMention> out;
    std::copy_if(mentions.begin(), mentions.end(), std::back_inserter(out),
                 [](const auto& m) { return m.stance == stance::StanceLabel::Supporting; });
    return out;
}

std::vector<stance::StancedMention> filter_approved(std::span<const stance::StancedMention> mentions,
                                                    const ApprovedList& approved) {
    std::vector<stance::StancedMention> out;
    std::copy_if(mentions.begin(), mentions.end(), std::back_inserter(out),
                 [&](const auto& m) { return !approved.matches(m.claim.normalized); });
    return out;
}

// ---------------------------------------------------------------------------
// Clusters

const std::string& ClaimCluster::canonical() const {
    if (members.empty()) throw Error("cluster " + id.str() + " has no members");
    auto best = members.begin();
    for (auto it = std::next(members.begin()); it != members.end(); ++it) {
        const auto& [key, stat] = *it;
        const auto& [best_key, best_stat] = *best;
        if (stat.count != best_stat.count) {
            if (stat.count > best_stat.count) best = it;
        } else if (stat.first_seen != best_stat.first_seen) {
            if (stat.first_seen < best_stat.first_seen) best = it;
        }
        // equal count and date: map order already favours the smaller key
    }
    return best->first;
}

Date ClaimCluster::first_seen() const {
    Date earliest = members.begin()->second.first_seen;
    for (const auto& [key, stat] : members) earliest = std::min(earliest, stat.first_seen);
    return earliest;
}

std::uint64_t ClaimCluster::mention_count() const {
    std::uint64_t total = 0;
    for (const auto& [key, stat] : members) total += stat.count;
    return total;
}

nlohmann::json ClaimCluster::to_json() const {
    nlohmann::json member_list = nlohmann::json::array();
    for (const auto& [key, stat] : members) {
        member_list.push_back({{"key", key}, {"count", stat.count}, {"first_seen", stat.first_seen.str()}});
    }
    nlohmann::json post_list = nlohmann::json::array();
    for (const auto& ref : posts) post_list.push_back({{"post_id", ref.post_id}, {"date", ref.date.str()}});
    return {{"cluster_id", id.value},
            {"canonical", canonical()},
            {"first_seen", first_seen().str()},
            {"members", member_list},
            {"posts", post_list}};
}

namespace {

void check_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        throw ValidationError("jaccard threshold must lie in (0, 1]");
    }
}

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

std::vector<ClaimCluster> cluster_claims(std::span<const KeyedMention> mentions, double threshold) {
    check_threshold(threshold);
    std::map<std::string, KeyStat> stats;
    std::map<std::string, std::set<PostRef>> posts;
    for (const auto& m : mentions) {
        auto [it, inserted] = stats.try_emplace(m.key, KeyStat{0, m.date});
        ++it->second.count;
        it->second.first_seen = std::min(it->second.first_seen, m.date);
        posts[m.key].insert({m.post_id, m.date});
    }
    std::vector<std::string> keys;
    std::vector<TokenSet> tokens;
    std::map<std::string, std::vector<std::size_t>> by_token;
    for (const auto& [key, stat] : stats) {
        keys.push_back(key);
        tokens.push_back(key_tokens(key));
        for (const auto& t : tokens.back()) by_token[t].push_back(keys.size() - 1);
    }
    DisjointSets sets(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        std::set<std::size_t> candidates;
        for (const auto& t : tokens[i]) {
            for (std::size_t j : by_token[t]) {
                if (j > i) candidates.insert(j);
            }
        }
        for (std::size_t j : candidates) {
            if (jaccard(tokens[i], tokens[j]) >= threshold) sets.unite(i, j);
        }
    }
    std::map<std::size_t, ClaimCluster> grouped;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        auto& cluster = grouped[sets.find(i)];
        cluster.members.emplace(keys[i], stats[keys[i]]);
        cluster.posts.insert(posts[keys[i]].begin(), posts[keys[i]].end());
    }
    std::vector<ClaimCluster> out;
    for (auto& [root, cluster] : grouped) out.push_back(std::move(cluster));
    std::sort(out.begin(), out.end(), [](const ClaimCluster& a, const ClaimCluster& b) {
        if (a.first_seen() != b.first_seen()) return a.first_seen() < b.first_seen();
        return a.canonical() < b.canonical();
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = ClusterId{i + 1};
    return out;
}

ClaimIndex::ClaimIndex(double threshold) : threshold_(threshold) { check_threshold(threshold); }

void ClaimIndex::insert_key(const std::string& key, ClusterId id) {
    key_cluster_[key] = id;
    auto tokens = key_tokens(key);
    for (const auto& t : tokens) token_keys_[t].insert(key);
    key_tokens_[key] = std::move(tokens);
}

void ClaimIndex::merge_into(ClusterId from, ClusterId into) {
    if (from == into) return;
    auto it = clusters_.find(from);
    if (it == clusters_.end()) throw NotFoundError("unknown cluster " + from.str());
    auto& target = clusters_.at(into);
    for (auto& [key, stat] : it->second.members) {
        key_cluster_[key] = into;
        target.members.emplace(key, stat);
    }
    target.posts.insert(it->second.posts.begin(), it->second.posts.end());
    clusters_.erase(it);
}

ClaimIndex::AddResult ClaimIndex::preview(const KeyedMention& mention) const {
    AddResult result;
    if (auto existing = find(mention.key)) {
        result.cluster = *existing;
        return result;
    }
    const auto tokens = key_tokens(mention.key);
    std::set<ClusterId> linked;
    std::set<std::string> seen;
    for (const auto& t : tokens) {
        const auto hit = token_keys_.find(t);
        if (hit == token_keys_.end()) continue;
        for (const auto& other : hit->second) {
            if (!seen.insert(other).second) continue;
            if (jaccard(tokens, key_tokens_.at(other)) >= threshold_) linked.insert(key_cluster_.at(other));
        }
    }
    if (linked.empty()) {
        result.cluster = ClusterId{next_id_};
        result.created = true;
    } else {
        result.cluster = *linked.begin();
        result.absorbed.assign(std::next(linked.begin()), linked.end());
    }
    return result;
}

ClaimIndex::AddResult ClaimIndex::add(const KeyedMention& mention) {
    auto result = preview(mention);
    apply(mention, result.cluster, result.absorbed);
    return result;
}

nlohmann::json ClaimIndex::to_json() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& [id, c] : clusters_) {
        nlohmann::json members = nlohmann::json::array();
        for (const auto& [key, stat] : c.members) {
            members.push_back({{"key", key}, {"count", stat.count}, {"first_seen", stat.first_seen.str()}});
        }
        nlohmann::json posts = nlohmann::json::array();
        for (const auto& ref : c.posts) posts.push_back({ref.post_id, ref.date.str()});
        list.push_back({{"id", id.value}, {"members", members}, {"posts", posts}});
    }
    return {{"threshold", threshold_}, {"next_id", next_id_}, {"clusters", list}};
}

ClaimIndex ClaimIndex::from_json(const nlohmann::json& j) {
    auto date = [](const nlohmann::json& v) {
        const auto d = Date::parse(v.get<std::string>());
        if (!d) throw ValidationError("bad date in claim index");
        return *d;
    };
    try {
        ClaimIndex index(j.at("threshold").get<double>());
        for (const auto& c : j.at("clusters")) {
            const ClusterId id{c.at("id").get<std::uint64_t>()};
            auto& cluster = index.clusters_[id];
            cluster.id = id;
            for (const auto& m : c.at("members")) {
                const auto key = m.at("key").get<std::string>();
                if (index.key_cluster_.count(key)) throw ValidationError("key '" + key + "' in two clusters");
                cluster.members[key] = KeyStat{m.at("count").get<std::uint64_t>(), date(m.at("first_seen"))};
                index.insert_key(key, id);
            }
            for (const auto& ref : c.at("posts")) cluster.posts.insert({ref.at(0).get<std::string>(), date(ref.at(1))});
        }
        index.next_id_ = j.at("next_id").get<std::uint64_t>();
        return index;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("claim index: ") + e.what());
    }
}

void ClaimIndex::apply(const KeyedMention& mention, ClusterId cluster,
                       std::span<const ClusterId> absorbed) {
    auto [it, created] = clusters_.try_emplace(cluster);
    if (created) {
        it->second.id = cluster;
        next_id_ = std::max(next_id_, cluster.value + 1);
    }
    for (const auto& from : absorbed) merge_into(from, cluster);
    auto& target = clusters_.at(cluster);
    const auto known = key_cluster_.find(mention.key);
    if (known == key_cluster_.end()) {
        insert_key(mention.key, cluster);
    } else if (known->second != cluster) {
        throw ValidationError("key '" + mention.key + "' already belongs to cluster " + known->second.str());
    }
    auto [stat, fresh] = target.members.try_emplace(mention.key, KeyStat{0, mention.date});
    ++stat->second.count;
    stat->second.first_seen = std::min(stat->second.first_seen, mention.date);
    target.posts.insert({mention.post_id, mention.date});
}

const ClaimCluster& ClaimIndex::cluster(ClusterId id) const {
    const auto it = clusters_.find(id);
    if (it == clusters_.end()) throw NotFoundError("unknown cluster " + id.str());
    return it->second;
}

std::optional<ClusterId> ClaimIndex::find(std::string_view key) const {
    const auto it = key_cluster_.find(std::string(key));
    if (it == key_cluster_.end()) return std::nullopt;
    return it->second;
}

}  // namespace trendwatch::aggregation
