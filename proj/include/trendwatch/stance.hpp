#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trendwatch/extraction.hpp"
#include "trendwatch/ingest.hpp"
#include "trendwatch/remote.hpp"

namespace trendwatch::stance {

enum class StanceLabel { Supporting, Refuting, NoStance };

std::string_view to_string(StanceLabel label);
/// Accepts "SUPPORTING", "REFUTING", "NO_STANCE".
std::optional<StanceLabel> parse_label(std::string_view s);

struct StancedMention {
    extraction::ClaimSpan claim;
    StanceLabel stance = StanceLabel::NoStance;
    double confidence = 1.0;

    bool operator==(const StancedMention&) const = default;
};

struct Lexicon {
    std::vector<std::vector<std::string>> negation;   // token sequences
    std::vector<std::vector<std::string>> assertive;
    int window = 6;

    /// Sections "[negation]", "[assertive]", "[settings]" (window = N).
    static Lexicon parse(std::string_view text);
    static Lexicon load(const std::string& path);
    static const Lexicon& builtin();
};

/// Rule order: question -> NO_STANCE; negation within the window ->
/// REFUTING; assertive cue within the window -> SUPPORTING; else NO_STANCE.
/// Only the sentence containing the span is considered.
StanceLabel lexicon_baseline(std::string_view text, std::size_t span_start, std::size_t span_end,
                             const Lexicon& lexicon = Lexicon::builtin());

class StanceClassifier {
public:
    virtual ~StanceClassifier() = default;
    virtual std::string name() const = 0;
    virtual StancedMention classify(const ingest::Post& post,
                                    const extraction::ClaimSpan& claim) const = 0;
};

class LexiconClassifier final : public StanceClassifier {
public:
    LexiconClassifier() : lexicon_(Lexicon::builtin()) {}
    explicit LexiconClassifier(Lexicon lexicon) : lexicon_(std::move(lexicon)) {}

    std::string name() const override { return "lexicon-baseline"; }
    StancedMention classify(const ingest::Post& post,
                            const extraction::ClaimSpan& claim) const override;

private:
    Lexicon lexicon_;
};

/// Client for POST /stance {"text", "start", "end"} ->
/// {"label": "SUPPORTING|REFUTING|NO_STANCE", "confidence": float}.
class HttpStanceClassifier final : public StanceClassifier {
public:
    explicit HttpStanceClassifier(std::string base_url, remote::ClientOptions options = {});
    ~HttpStanceClassifier() override;

    std::string name() const override { return "http:" + client_->base_url(); }
    StancedMention classify(const ingest::Post& post,
                            const extraction::ClaimSpan& claim) const override;

private:
    std::unique_ptr<remote::JsonClient> client_;
};

/// Checks that `claim` belongs to `post` (ValidationError otherwise), then
/// delegates to `classifier`.
StancedMention classify_stance(const ingest::Post& post, const extraction::ClaimSpan& claim,
                               const StanceClassifier& classifier);

}  // namespace trendwatch::stance
