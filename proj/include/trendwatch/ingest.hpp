#pragma once

#include <cstddef>
#include <istream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "trendwatch/time.hpp"

namespace trendwatch::ingest {

struct Post {
    std::string post_id;
    std::string text;
    Timestamp created_at;
    std::string author_id;

    Date date() const { return Date::of(created_at); }

    bool operator==(const Post&) const = default;
};

nlohmann::json to_json(const Post& post);
/// Throws ValidationError on a missing or mistyped field or a bad timestamp.
Post post_from_json(const nlohmann::json& j);

/// Case-insensitive whole-token keyword set.
class KeywordFilter {
public:
    /// Throws ValidationError when no non-empty keyword is given.
    explicit KeywordFilter(const std::vector<std::string>& keywords);
    /// Parses a comma-separated list ("cure,prevention").
    static KeywordFilter parse(std::string_view csv);

    bool matches(std::string_view text) const;
    const std::set<std::string>& keywords() const { return keywords_; }

private:
    std::set<std::string> keywords_;
};

struct IngestReport {
    std::size_t read = 0;
    std::size_t emitted = 0;
    std::size_t skipped = 0;     // malformed lines
    std::size_t duplicates = 0;  // repeated post ids (first occurrence wins)
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

struct IngestResult {
    std::vector<Post> posts;
    IngestReport report;
};

/// Reads JSON Lines records and keeps posts that contain at least one
/// keyword. Blank lines are ignored and not counted.
IngestResult ingest_stream(std::istream& source, const KeywordFilter& filter);

/// Throws IoError when the file cannot be opened.
IngestResult ingest_file(const std::string& path, const KeywordFilter& filter);

}  // namespace trendwatch::ingest
