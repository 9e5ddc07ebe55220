#include "trendwatch/ingest.hpp"

#include <fstream>
#include <unordered_set>

#include "trendwatch/errors.hpp"
#include "trendwatch/text.hpp"

namespace trendwatch::ingest {

namespace {

std::vector<std::string> token_strings(std::string_view s) {
    std::vector<std::string> out;
    for (auto& token : text::tokenize(s)) out.push_back(std::move(token.folded));
    return out;
}

const std::string& require_string(const nlohmann::json& j, const char* field) {
    const auto it = j.find(field);
    if (it == j.end() || !it->is_string()) {
        throw ValidationError(std::string("missing or non-string field '") + field + "'");
    }
    return it->get_ref<const std::string&>();
}

}  // namespace

nlohmann::json to_json(const Post& post) {
    return {{"id", post.post_id},
            {"text", post.text},
            {"created_at", format_timestamp(post.created_at)},
            {"author_id", post.author_id}};
}

Post post_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("record is not a JSON object");
    Post post;
    post.post_id = require_string(j, "id");
    if (post.post_id.empty()) throw ValidationError("empty id");
    post.text = require_string(j, "text");
    const auto& created = require_string(j, "created_at");
    const auto ts = parse_timestamp(created);
    if (!ts) throw ValidationError("bad created_at '" + created + "'");
    post.created_at = *ts;
    post.author_id = require_string(j, "author_id");
    return post;
}

KeywordFilter::KeywordFilter(const std::vector<std::string>& keywords) {
    for (const auto& keyword : keywords) {
        auto tokens = token_strings(keyword);
        if (tokens.empty()) continue;
        std::string joined = tokens.front();
        for (std::size_t i = 1; i < tokens.size(); ++i) joined += " " + tokens[i];
        keywords_.insert(std::move(joined));
    }
    if (keywords_.empty()) throw ValidationError("keyword filter must not be empty");
}

KeywordFilter KeywordFilter::parse(std::string_view csv) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= csv.size()) {
        const std::size_t comma = csv.find(',', start);
        const std::size_t end = comma == std::string_view::npos ? csv.size() : comma;
        parts.emplace_back(csv.substr(start, end - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return KeywordFilter{parts};
}

bool KeywordFilter::matches(std::string_view text) const {
    const auto tokens = token_strings(text);
    for (const auto& keyword : keywords_) {
        const auto parts = token_strings(keyword);
        if (parts.size() > tokens.size()) continue;
        for (std::size_t i = 0; i + parts.size() <= tokens.size(); ++i) {
            bool hit = true;
            for (std::size_t k = 0; k < parts.size() && hit; ++k) hit = tokens[i + k] == parts[k];
            if (hit) return true;
        }
    }
    return false;
}

nlohmann::json IngestReport::to_json() const {
    return {{"read", read},
            {"emitted", emitted},
            {"skipped", skipped},
            {"duplicates", duplicates},
            {"warnings", warnings}};
}

IngestResult ingest_stream(std::istream& source, const KeywordFilter& filter) {
    IngestResult result;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(source, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        ++result.report.read;
        Post post;
        try {
            post = post_from_json(nlohmann::json::parse(line));
        } catch (const nlohmann::json::exception& e) {
            ++result.report.skipped;
            result.report.warnings.push_back("line " + std::to_string(line_no) + ": " + e.what());
            continue;
        } catch (const ValidationError& e) {
            ++result.report.skipped;
            result.report.warnings.push_back("line " + std::to_string(line_no) + ": " + e.what());
            continue;
        }
        if (!seen.insert(post.post_id).second) {
            ++result.report.duplicates;
            result.report.warnings.push_back("line " + std::to_string(line_no) +
                                             ": duplicate id '" + post.post_id + "'");
            continue;
        }
        if (!filter.matches(post.text)) continue;
        result.posts.push_back(std::move(post));
        ++result.report.emitted;
    }
    if (source.bad()) throw IoError("read error on post stream");
    return result;
}

IngestResult ingest_file(const std::string& path, const KeywordFilter& filter) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open corpus '" + path + "'");
    return ingest_stream(in, filter);
}

}  // namespace trendwatch::ingest
