#include "trendwatch/extraction.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "builtin_configs.hpp"
#include "trendwatch/errors.hpp"
#include "trendwatch/text.hpp"

namespace trendwatch::extraction {

namespace {

std::vector<std::string> split_ws(std::string_view s) {
    std::vector<std::string> out;
    std::istringstream in{std::string(s)};
    std::string word;
    while (in >> word) out.push_back(word);
    return out;
}

bool all_punct(std::string_view s) {
    std::size_t pos = 0;
    while (pos < s.size()) {
        if (!text::is_punct(text::decode_utf8(s, pos))) return false;
    }
    return !s.empty();
}

struct Match {
    std::size_t literal_begin = 0;  // first token of the cue
    std::size_t literal_end = 0;    // one past the last cue token
};

class SentenceMatcher {
public:
    SentenceMatcher(std::string_view text, const std::vector<text::Token>& tokens,
                    const CuePattern& pattern)
        : text_(text), tokens_(tokens), slots_(pattern.slots()) {}

    // Tries to match the literal slots starting at token `begin`. On success
    // returns the end token index; `gap_after` is set when a trailing gap slot
    // must be checked against the capture.
    std::optional<std::size_t> match_at(std::size_t begin, std::string* trailing_gap) const {
        return match(0, begin, begin, trailing_gap);
    }

private:
    bool gap_contains(std::size_t left_token, std::size_t right_token, std::string_view chars) const {
        const std::size_t from = tokens_[left_token].end;
        const std::size_t to = tokens_[right_token].start;
        const std::string_view gap = text_.substr(from, to - from);
        std::size_t pos = 0;
        while (pos < chars.size()) {
            const std::size_t at = pos;
            text::decode_utf8(chars, pos);
            if (gap.find(chars.substr(at, pos - at)) != std::string_view::npos) return true;
        }
        return false;
    }

    std::optional<std::size_t> match(std::size_t slot, std::size_t tok, std::size_t begin,
                                     std::string* trailing_gap) const {
        if (slot == slots_.size()) return tok;
        const auto& s = slots_[slot];
        if (s.kind == CuePattern::Slot::Kind::Gap) {
            if (slot + 1 == slots_.size()) {
                // Checked against the capture by the caller.
                if (tok == begin) return std::nullopt;
                *trailing_gap = s.gap_chars;
                return tok;
            }
            if (tok == begin || tok >= tokens_.size()) return std::nullopt;
            if (!gap_contains(tok - 1, tok, s.gap_chars)) return std::nullopt;
            return match(slot + 1, tok, begin, trailing_gap);
        }
        if (tok < tokens_.size() && s.alternatives.count(tokens_[tok].folded) > 0) {
            if (auto end = match(slot + 1, tok + 1, begin, trailing_gap)) return end;
        }
        if (s.optional) return match(slot + 1, tok, begin, trailing_gap);
        return std::nullopt;
    }

    std::string_view text_;
    const std::vector<text::Token>& tokens_;
    const std::vector<CuePattern::Slot>& slots_;
};

}  // namespace

std::string normalize_key(std::string_view surface) {
    std::string collapsed = text::fold_collapse(surface);
    // Strip punctuation (and any whitespace it exposes) from both ends.
    std::size_t begin = 0;
    std::size_t end = collapsed.size();
    for (bool changed = true; changed;) {
        changed = false;
        if (begin < end) {
            std::size_t pos = begin;
            const char32_t cp = text::decode_utf8(collapsed, pos);
            if (text::is_punct(cp) || text::is_space(cp)) {
                begin = pos;
                changed = true;
            }
        }
        if (begin < end) {
            std::size_t back = end - 1;
            while (back > begin && (static_cast<unsigned char>(collapsed[back]) & 0xC0) == 0x80) --back;
            std::size_t pos = back;
            const char32_t cp = text::decode_utf8(collapsed, pos);
            if (text::is_punct(cp) || text::is_space(cp)) {
                end = back;
                changed = true;
            }
        }
    }
    return collapsed.substr(begin, end - begin);
}

std::optional<ClaimSpan> make_span(const ingest::Post& post, std::size_t start, std::size_t end) {
    const auto& t = post.text;
    if (start >= end || end > t.size()) return std::nullopt;
    auto continuation = [&](std::size_t i) {
        return i < t.size() && (static_cast<unsigned char>(t[i]) & 0xC0) == 0x80;
    };
    if (continuation(start) || continuation(end)) return std::nullopt;
    ClaimSpan span;
    span.post_id = post.post_id;
    span.surface = t.substr(start, end - start);
    span.char_start = start;
    span.char_end = end;
    span.normalized = normalize_key(span.surface);
    if (span.normalized.empty()) return std::nullopt;
    return span;
}

std::vector<ClaimSpan> extract(const ingest::Post& post, const Extractor& extractor) {
    if (post.text.empty()) throw ValidationError("cannot extract claims from empty text");
    return extractor.extract(post);
}

CuePattern CuePattern::compile(std::string_view line) {
    CuePattern pattern;
    pattern.source_ = std::string(line);
    const auto words = split_ws(line);
    int captures = 0;
    for (std::size_t i = 0; i < words.size(); ++i) {
        std::string word = words[i];
        if (word == "<NP>") {
            ++captures;
            if (i != 0 && i + 1 != words.size()) {
                throw ValidationError("<NP> must be the first or last slot: " + pattern.source_);
            }
            pattern.capture_first_ = i == 0;
            continue;
        }
        Slot slot;
        if (word.size() > 1 && word.back() == '?') {
            slot.optional = true;
            word.pop_back();
        }
        if (all_punct(word) && word.find('|') == std::string::npos) {
            if (slot.optional) throw ValidationError("gap slots cannot be optional: " + pattern.source_);
            slot.kind = Slot::Kind::Gap;
            slot.gap_chars = word;
        } else {
            std::size_t start = 0;
            while (start <= word.size()) {
                const std::size_t bar = word.find('|', start);
                const std::size_t end = bar == std::string::npos ? word.size() : bar;
                const auto alt = text::fold(std::string_view(word).substr(start, end - start));
                if (!alt.empty()) slot.alternatives.insert(alt);
                if (bar == std::string::npos) break;
                start = bar + 1;
            }
            if (slot.alternatives.empty()) throw ValidationError("empty slot in " + pattern.source_);
        }
        pattern.slots_.push_back(std::move(slot));
    }
    if (captures != 1) throw ValidationError("pattern needs exactly one <NP>: " + pattern.source_);
    if (pattern.slots_.empty()) throw ValidationError("pattern has no cue: " + pattern.source_);
    if (pattern.slots_.front().kind == Slot::Kind::Gap) {
        throw ValidationError("pattern cannot start with a gap: " + pattern.source_);
    }
    return pattern;
}

PatternConfig PatternConfig::parse(std::string_view text) {
    PatternConfig config;
    std::istringstream in{std::string(text)};
    std::string line;
    auto word_set = [](std::string_view rest) {
        std::set<std::string> out;
        for (const auto& w : split_ws(rest)) out.insert(text::fold(w));
        return out;
    };
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string_view body = std::string_view(line).substr(first, last - first + 1);
        if (body.rfind("version ", 0) == 0) {
            config.version = std::stoi(std::string(body.substr(8)));
        } else if (body.rfind("stop:", 0) == 0) {
            auto words = word_set(body.substr(5));
            config.stop_words.insert(words.begin(), words.end());
        } else if (body.rfind("break:", 0) == 0) {
            auto words = word_set(body.substr(6));
            config.breakers.insert(words.begin(), words.end());
        } else if (body.rfind("max_tokens:", 0) == 0) {
            config.max_span_tokens = std::stoul(std::string(body.substr(11)));
        } else {
            config.patterns.push_back(CuePattern::compile(body));
        }
    }
    if (config.patterns.empty()) throw ValidationError("pattern file defines no patterns");
    return config;
}

PatternConfig PatternConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open pattern file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const PatternConfig& PatternConfig::builtin() {
    static const PatternConfig config = parse(builtin::cue_patterns());
    return config;
}

std::string_view default_pattern_text() { return builtin::cue_patterns(); }

std::vector<ClaimSpan> PatternExtractor::extract_text(std::string_view text) const {
    std::vector<ClaimSpan> spans;
    const auto all_tokens = text::tokenize(text);
    for (const auto& sentence : text::split_sentences(text)) {
        std::vector<text::Token> tokens;
        for (const auto& token : all_tokens) {
            if (token.start >= sentence.start && token.end <= sentence.end) tokens.push_back(token);
        }
        if (tokens.empty()) continue;

        std::optional<std::pair<std::size_t, std::size_t>> found;  // token range of the capture
        for (const auto& pattern : config_.patterns) {
            const SentenceMatcher matcher(text, tokens, pattern);
            for (std::size_t begin = 0; begin < tokens.size() && !found; ++begin) {
                std::string trailing_gap;
                const auto end = matcher.match_at(begin, &trailing_gap);
                if (!end) continue;
                std::size_t lo = 0;
                std::size_t hi = 0;
                if (pattern.capture_first()) {
                    hi = begin;
                    lo = begin;
                    while (lo > 0 && hi - lo < config_.max_span_tokens &&
                           config_.breakers.count(tokens[lo - 1].folded) == 0) {
                        --lo;
                    }
                } else {
                    lo = *end;
                    hi = *end;
                    if (!trailing_gap.empty() && lo < tokens.size()) {
                        const auto gap = text.substr(tokens[lo - 1].end, tokens[lo].start - tokens[lo - 1].end);
                        bool ok = false;
                        for (char c : trailing_gap) ok = ok || gap.find(c) != std::string_view::npos;
                        if (!ok) continue;
                    }
                    while (hi < tokens.size() && hi - lo < config_.max_span_tokens &&
                           config_.breakers.count(tokens[hi].folded) == 0) {
                        ++hi;
                    }
                }
                while (lo < hi && config_.stop_words.count(tokens[lo].folded) > 0) ++lo;
                while (hi > lo && config_.stop_words.count(tokens[hi - 1].folded) > 0) --hi;
                if (lo < hi) found.emplace(lo, hi);
            }
            if (found) break;
        }
        if (!found) continue;
        ingest::Post scratch;
        scratch.text = std::string(text);
        if (auto span = make_span(scratch, tokens[found->first].start, tokens[found->second - 1].end)) {
            spans.push_back(std::move(*span));
        }
    }
    return spans;
}

std::vector<ClaimSpan> PatternExtractor::extract(const ingest::Post& post) const {
    auto spans = extract_text(post.text);
    for (auto& span : spans) span.post_id = post.post_id;
    return spans;
}

std::vector<ClaimSpan> pattern_baseline_extract(std::string_view text) {
    static const PatternExtractor extractor;
    return extractor.extract_text(text);
}

HttpExtractor::HttpExtractor(std::string base_url, remote::ClientOptions options)
    : base_url_(base_url), client_(std::make_unique<remote::JsonClient>(std::move(base_url), options)) {}

HttpExtractor::~HttpExtractor() = default;

std::vector<ClaimSpan> HttpExtractor::extract(const ingest::Post& post) const {
    const auto response = client_->post("/extract", {{"text", post.text}});
    if (!response.is_object() || !response.contains("spans") || !response["spans"].is_array()) {
        throw Error("extractor response lacks a 'spans' array");
    }
    std::vector<ClaimSpan> spans;
    for (const auto& item : response["spans"]) {
        if (!item.is_object() || !item.contains("start") || !item.contains("end") ||
            !item["start"].is_number_integer() || !item["end"].is_number_integer()) {
            throw Error("extractor returned a malformed span");
        }
        const auto start = item["start"].get<long long>();
        const auto end = item["end"].get<long long>();
        if (start < 0 || end < 0) throw Error("extractor returned negative offsets");
        auto span = make_span(post, static_cast<std::size_t>(start), static_cast<std::size_t>(end));
        if (!span) throw Error("extractor returned an invalid span for post " + post.post_id);
        spans.push_back(std::move(*span));
    }
    std::sort(spans.begin(), spans.end(),
              [](const ClaimSpan& a, const ClaimSpan& b) { return a.char_start < b.char_start; });
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].char_start < spans[i - 1].char_end) {
            throw Error("extractor returned overlapping spans for post " + post.post_id);
        }
    }
    return spans;
}

}  // namespace trendwatch::extraction
