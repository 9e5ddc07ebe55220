#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "trendwatch/ingest.hpp"
#include "trendwatch/remote.hpp"

namespace trendwatch::extraction {

/// An extracted claim: the treatment span X of "X is an effective COVID-19
/// treatment". Offsets are byte offsets into the post text.
struct ClaimSpan {
    std::string post_id;
    std::string surface;
    std::size_t char_start = 0;
    std::size_t char_end = 0;
    std::string normalized;

    bool operator==(const ClaimSpan&) const = default;
};

/// Claim-key normalisation: case fold, collapse whitespace, strip leading
/// and trailing punctuation (including a leading '#'). Idempotent.
std::string normalize_key(std::string_view surface);

/// Builds a span from offsets, validating them against the text.
/// Returns nullopt when the offsets are out of range, split a UTF-8
/// sequence, or the span normalises to an empty key.
std::optional<ClaimSpan> make_span(const ingest::Post& post, std::size_t start, std::size_t end);

class Extractor {
public:
    virtual ~Extractor() = default;
    virtual std::string name() const = 0;
    /// Deterministic for a fixed configuration.
    virtual std::vector<ClaimSpan> extract(const ingest::Post& post) const = 0;
};

/// Runs `extractor` on `post`. Throws ValidationError on empty text.
std::vector<ClaimSpan> extract(const ingest::Post& post, const Extractor& extractor);

/// One line of the cue-pattern file, compiled.
///
/// Grammar (whitespace-separated slots):
///   <NP>        the captured phrase; exactly one, first or last slot
///   a|b|c       a token equal to any alternative (case-folded)
///   slot?       the slot may be absent
///   :           a slot made only of punctuation requires the gap between
///               the neighbouring tokens to contain one of those characters
class CuePattern {
public:
    static CuePattern compile(std::string_view line);

    const std::string& source() const { return source_; }

    struct Slot {
        enum class Kind { Capture, Literal, Gap } kind = Kind::Literal;
        std::set<std::string> alternatives;
        std::string gap_chars;
        bool optional = false;
    };
    const std::vector<Slot>& slots() const { return slots_; }
    bool capture_first() const { return capture_first_; }

private:
    std::string source_;
    std::vector<Slot> slots_;  // excluding the capture
    bool capture_first_ = true;
};

struct PatternConfig {
    int version = 1;
    std::vector<CuePattern> patterns;
    /// Trimmed from the edges of a captured phrase.
    std::set<std::string> stop_words;
    /// Ends a captured phrase when scanning away from the cue.
    std::set<std::string> breakers;
    std::size_t max_span_tokens = 5;

    /// Parses the plain-text pattern file. Lines: "version N",
    /// "stop: w1 w2 ...", "break: w1 w2 ...", '#' comments, else a pattern.
    static PatternConfig parse(std::string_view text);
    static PatternConfig load(const std::string& path);
    static const PatternConfig& builtin();
};

/// The text of the shipped default pattern file.
std::string_view default_pattern_text();

/// Deterministic cue-pattern extractor. The first pattern (in file order)
/// that matches a sentence wins; at most one claim per sentence.
class PatternExtractor final : public Extractor {
public:
    PatternExtractor() : PatternExtractor(PatternConfig::builtin()) {}
    explicit PatternExtractor(PatternConfig config) : config_(std::move(config)) {}

    std::string name() const override {
        return "pattern-baseline-v" + std::to_string(config_.version);
    }
    std::vector<ClaimSpan> extract(const ingest::Post& post) const override;

    /// Span extraction over bare text (post_id left empty).
    std::vector<ClaimSpan> extract_text(std::string_view text) const;

private:
    PatternConfig config_;
};

/// Convenience wrapper around the default PatternExtractor.
std::vector<ClaimSpan> pattern_baseline_extract(std::string_view text);

/// Client for an external model server speaking
///   POST /extract {"text": ...} -> {"spans": [{"start": int, "end": int}]}
/// Offsets in the response are byte offsets into the UTF-8 text.
/// Throws RetryableError once all attempts have failed.
class HttpExtractor final : public Extractor {
public:
    HttpExtractor(std::string base_url, remote::ClientOptions options = {});
    ~HttpExtractor() override;

    std::string name() const override { return "http:" + base_url_; }
    std::vector<ClaimSpan> extract(const ingest::Post& post) const override;

private:
    std::string base_url_;
    std::unique_ptr<remote::JsonClient> client_;
};

}  // namespace trendwatch::extraction
