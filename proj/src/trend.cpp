#include "trendwatch/trend.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "trendwatch/errors.hpp"

namespace trendwatch::trend {

nlohmann::json TrendConfig::to_json() const {
    return {{"alpha", alpha},
            {"warmup_days", warmup_days},
            {"min_day_count", min_day_count},
            {"history_depth", history_depth}};
}

TrendConfig TrendConfig::from_json(const nlohmann::json& j) {
    TrendConfig c;
    c.alpha = j.value("alpha", c.alpha);
    c.warmup_days = j.value("warmup_days", c.warmup_days);
    c.min_day_count = j.value("min_day_count", c.min_day_count);
    c.history_depth = j.value("history_depth", c.history_depth);
    return c;
}

nlohmann::json TrendRecord::to_json() const {
    return {{"cluster_id", cluster.value},
            {"date", date.str()},
            {"a", table.a},
            {"b", table.b},
            {"c", table.c},
            {"d", table.d},
            {"p", p_value},
            {"z", z},
            {"rank", rank},
            {"canonical", canonical},
            {"rankable", rankable},
            {"novel", novel}};
}

TrendRecord TrendRecord::from_json(const nlohmann::json& j) {
    TrendRecord r;
    r.cluster = ClusterId{j.at("cluster_id").get<std::uint64_t>()};
    const auto date = Date::parse(j.at("date").get<std::string>());
    if (!date) throw ValidationError("bad trend record date");
    r.date = *date;
    r.table = {j.at("a").get<std::uint64_t>(), j.at("b").get<std::uint64_t>(),
               j.at("c").get<std::uint64_t>(), j.at("d").get<std::uint64_t>()};
    r.p_value = j.at("p").get<double>();
    r.z = j.at("z").get<double>();
    r.rank = j.at("rank").get<std::size_t>();
    r.canonical = j.at("canonical").get<std::string>();
    r.rankable = j.at("rankable").get<bool>();
    r.novel = j.at("novel").get<bool>();
    return r;
}

std::uint64_t TrendState::cumulative(ClusterId id) const {
    const auto it = cumulative_.find(id);
    return it == cumulative_.end() ? 0 : it->second;
}

bool TrendState::in_history_before(ClusterId id, Date date) const {
    const auto it = history_.find(id);
    return it != history_.end() && it->second < date;
}

std::optional<Date> TrendState::first_trending(ClusterId id) const {
    const auto it = first_trending_.find(id);
    if (it == first_trending_.end()) return std::nullopt;
    return it->second;
}

void TrendState::merge(ClusterId from, ClusterId into) {
    if (from == into) return;
    auto fold_min = [&](std::map<ClusterId, Date>& m) {
        const auto it = m.find(from);
        if (it == m.end()) return;
        const auto target = m.find(into);
        if (target == m.end() || it->second < target->second) m[into] = it->second;
        m.erase(from);
    };
    if (const auto it = cumulative_.find(from); it != cumulative_.end()) {
        cumulative_[into] += it->second;
        cumulative_.erase(it);
    }
    if (const auto it = last_day_.find(from); it != last_day_.end()) {
        last_day_[into] += it->second;
        last_day_.erase(it);
    }
    fold_min(history_);
    fold_min(first_trending_);
}

namespace {

nlohmann::json id_map(const std::map<ClusterId, std::uint64_t>& m) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [id, n] : m) out.push_back({id.value, n});
    return out;
}

nlohmann::json date_map(const std::map<ClusterId, Date>& m) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& [id, d] : m) out.push_back({id.value, d.str()});
    return out;
}

Date parse_date(const nlohmann::json& j) {
    const auto d = Date::parse(j.get<std::string>());
    if (!d) throw ValidationError("bad date in trend state");
    return *d;
}

}  // namespace

nlohmann::json TrendState::to_json() const {
    return {{"cumulative", id_map(cumulative_)},
            {"cumulative_total", cumulative_total_},
            {"last_day", id_map(last_day_)},
            {"history", date_map(history_)},
            {"first_trending", date_map(first_trending_)},
            {"first_date", first_date_ ? nlohmann::json(first_date_->str()) : nlohmann::json()},
            {"last_date", last_date_ ? nlohmann::json(last_date_->str()) : nlohmann::json()}};
}

TrendState TrendState::from_json(const nlohmann::json& j) {
    TrendState s;
    for (const auto& e : j.at("cumulative")) s.cumulative_[ClusterId{e[0].get<std::uint64_t>()}] = e[1];
    s.cumulative_total_ = j.at("cumulative_total").get<std::uint64_t>();
    for (const auto& e : j.at("last_day")) s.last_day_[ClusterId{e[0].get<std::uint64_t>()}] = e[1];
    for (const auto& e : j.at("history")) s.history_[ClusterId{e[0].get<std::uint64_t>()}] = parse_date(e[1]);
    for (const auto& e : j.at("first_trending")) {
        s.first_trending_[ClusterId{e[0].get<std::uint64_t>()}] = parse_date(e[1]);
    }
    if (!j.at("first_date").is_null()) s.first_date_ = parse_date(j["first_date"]);
    if (!j.at("last_date").is_null()) s.last_date_ = parse_date(j["last_date"]);
    return s;
}

void rank_records(std::vector<TrendRecord>& records) {
    std::sort(records.begin(), records.end(), [](const TrendRecord& x, const TrendRecord& y) {
        if (x.rankable != y.rankable) return x.rankable;
        if (x.p_value != y.p_value) return x.p_value < y.p_value;
        if (x.table.a != y.table.a) return x.table.a > y.table.a;
        if (x.canonical != y.canonical) return x.canonical < y.canonical;
        return x.cluster < y.cluster;
    });
    for (std::size_t i = 0; i < records.size(); ++i) records[i].rank = i + 1;
}

std::vector<ClusterId> detect_novel(std::span<const TrendRecord> records, const TrendState& state,
                                    double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    std::vector<ClusterId> flagged;
    if (records.empty()) return flagged;
    const Date date = records.front().date;
    for (const auto& r : records) {
        if (r.date != date) throw ValidationError("detect_novel needs records from a single date");
        if (r.rankable && r.p_value < alpha && !state.in_history_before(r.cluster, date)) {
            flagged.push_back(r.cluster);
        }
    }
    return flagged;
}

std::vector<TrendRecord> daily_rollup(TrendState& state, Date date, std::span<const DayCount> day,
                                      const TrendConfig& config) {
    if (state.last_date_ && date <= *state.last_date_) {
        throw ValidationError("rollup date " + date.str() + " is not after " + state.last_date_->str());
    }
    std::set<ClusterId> seen;
    std::uint64_t day_total = 0;
    for (const auto& entry : day) {
        if (!seen.insert(entry.cluster).second) {
            throw ValidationError("cluster " + entry.cluster.str() + " listed twice for " + date.str());
        }
        day_total += entry.count;
    }
    if (!state.first_date_) state.first_date_ = date;
    const bool warming_up = date < *state.first_date_ + config.warmup_days;

    std::vector<TrendRecord> records;
    const std::uint64_t before_total = state.cumulative_total_;
    if (!warming_up && before_total + day_total > 0) {
        records.reserve(day.size());
        for (const auto& entry : day) {
            TrendRecord r;
            r.cluster = entry.cluster;
            r.date = date;
            r.canonical = entry.canonical;
            const std::uint64_t before = state.cumulative(entry.cluster);
            r.table = {entry.count, before, day_total - entry.count, before_total - before};
            r.p_value = fisher_one_tailed(r.table);
            r.z = trendiness(r.p_value);
            r.rankable = entry.count >= config.min_day_count;
            records.push_back(std::move(r));
        }
        rank_records(records);
        const auto flagged = detect_novel(records, state, config.alpha);
        const std::set<ClusterId> flagged_set(flagged.begin(), flagged.end());
        for (auto& r : records) {
            if (flagged_set.count(r.cluster) > 0) {
                r.novel = true;
                state.first_trending_.try_emplace(r.cluster, date);
            }
            if (r.rankable && r.rank <= config.history_depth) state.history_.try_emplace(r.cluster, date);
        }
    }
    state.last_day_.clear();
    for (const auto& entry : day) {
        if (entry.count == 0) continue;
        state.cumulative_[entry.cluster] += entry.count;
        state.last_day_[entry.cluster] = entry.count;
    }
    state.cumulative_total_ += day_total;
    state.last_date_ = date;
    return records;
}

std::vector<TrendRecord> TrendDetector::rollup(Date date, std::span<const DayCount> day) {
    std::lock_guard lock(mutex_);
    return daily_rollup(state_, date, day, config_);
}

void TrendDetector::merge(ClusterId from, ClusterId into) {
    std::lock_guard lock(mutex_);
    state_.merge(from, into);
}

TrendState TrendDetector::snapshot() const {
    std::lock_guard lock(mutex_);
    return state_;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char ch : field) {
        if (ch == '"') out.push_back('"');
        out.push_back(ch);
    }
    out.push_back('"');
    return out;
}

void write_csv_header(std::ostream& out) { out << "date,rank,canonical,a,C(T),C(D),N,p,z,novel\n"; }

void write_csv(std::ostream& out, std::span<const TrendRecord> records) {
    for (const auto& r : records) {
        out << r.date.str() << ',' << r.rank << ',' << csv_escape(r.canonical) << ',' << r.table.a
            << ',' << r.table.claim_total() << ',' << r.table.day_total() << ',' << r.table.n() << ','
            << format_double(r.p_value) << ',' << format_double(r.z) << ','
            << (r.novel ? "true" : "false") << '\n';
    }
}

}  // namespace trendwatch::trend
