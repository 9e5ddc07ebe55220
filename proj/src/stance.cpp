#include "trendwatch/stance.hpp"

#include <fstream>
#include <sstream>

#include "builtin_configs.hpp"
#include "trendwatch/errors.hpp"
#include "trendwatch/text.hpp"

namespace trendwatch::stance {

namespace {

using Phrase = std::vector<std::string>;

// Whether any phrase occurs within `window` tokens of the span [lo, hi)
// without overlapping it.
bool cue_near(const std::vector<text::Token>& tokens, std::size_t lo, std::size_t hi,
              const std::vector<Phrase>& phrases, int window) {
    const auto w = static_cast<std::size_t>(window);
    for (const auto& phrase : phrases) {
        if (phrase.empty() || phrase.size() > tokens.size()) continue;
        for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
            const std::size_t end = i + phrase.size();
            if (end > lo && i < hi) continue;  // overlaps the span
            const std::size_t distance = i >= hi ? i - (hi - 1) : lo - (end - 1);
            if (distance > w) continue;
            bool hit = true;
            for (std::size_t k = 0; k < phrase.size() && hit; ++k) hit = tokens[i + k].folded == phrase[k];
            if (hit) return true;
        }
    }
    return false;
}

}  // namespace

std::string_view to_string(StanceLabel label) {
    switch (label) {
        case StanceLabel::Supporting: return "SUPPORTING";
        case StanceLabel::Refuting: return "REFUTING";
        case StanceLabel::NoStance: return "NO_STANCE";
    }
    return "NO_STANCE";
}

std::optional<StanceLabel> parse_label(std::string_view s) {
    if (s == "SUPPORTING") return StanceLabel::Supporting;
    if (s == "REFUTING") return StanceLabel::Refuting;
    if (s == "NO_STANCE") return StanceLabel::NoStance;
    return std::nullopt;
}

Lexicon Lexicon::parse(std::string_view source) {
    Lexicon lexicon;
    std::istringstream in{std::string(source)};
    std::string line;
    std::string section;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        const std::string body = line.substr(first, last - first + 1);
        if (body.front() == '[' && body.back() == ']') {
            section = body.substr(1, body.size() - 2);
            if (section != "negation" && section != "assertive" && section != "settings") {
                throw ValidationError("unknown lexicon section [" + section + "]");
            }
            continue;
        }
        if (section == "settings") {
            const auto eq = body.find('=');
            if (eq == std::string::npos) throw ValidationError("bad setting: " + body);
            auto key = body.substr(0, eq);
            key.erase(key.find_last_not_of(' ') + 1);
            if (key != "window") throw ValidationError("unknown setting: " + key);
            lexicon.window = std::stoi(body.substr(eq + 1));
            if (lexicon.window < 1) throw ValidationError("window must be positive");
            continue;
        }
        Phrase phrase;
        for (auto& token : text::tokenize(body)) phrase.push_back(std::move(token.folded));
        if (phrase.empty()) continue;
        if (section == "negation") {
            lexicon.negation.push_back(std::move(phrase));
        } else if (section == "assertive") {
            lexicon.assertive.push_back(std::move(phrase));
        } else {
            throw ValidationError("lexicon entry outside a section: " + body);
        }
    }
    return lexicon;
}

Lexicon Lexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open lexicon '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

const Lexicon& Lexicon::builtin() {
    static const Lexicon lexicon = parse(builtin::stance_lexicon());
    return lexicon;
}

StanceLabel lexicon_baseline(std::string_view text, std::size_t span_start, std::size_t span_end,
                             const Lexicon& lexicon) {
    if (span_start >= span_end || span_end > text.size()) {
        throw ValidationError("span lies outside the text");
    }
    const auto sentences = text::split_sentences(text);
    const text::Sentence* containing = nullptr;
    for (const auto& sentence : sentences) {
        if (span_start >= sentence.start && span_start < sentence.end) {
            containing = &sentence;
            break;
        }
    }
    if (containing == nullptr) return StanceLabel::NoStance;
    if (containing->question) return StanceLabel::NoStance;

    std::vector<text::Token> tokens;
    for (auto& token : text::tokenize(text)) {
        if (token.start >= containing->start && token.end <= containing->end) tokens.push_back(std::move(token));
    }
    std::size_t lo = tokens.size();
    std::size_t hi = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].end > span_start && tokens[i].start < span_end) {
            lo = std::min(lo, i);
            hi = i + 1;
        }
    }
    if (lo >= hi) return StanceLabel::NoStance;
    if (cue_near(tokens, lo, hi, lexicon.negation, lexicon.window)) return StanceLabel::Refuting;
    if (cue_near(tokens, lo, hi, lexicon.assertive, lexicon.window)) return StanceLabel::Supporting;
    return StanceLabel::NoStance;
}

StancedMention LexiconClassifier::classify(const ingest::Post& post,
                                           const extraction::ClaimSpan& claim) const {
    return {claim, lexicon_baseline(post.text, claim.char_start, claim.char_end, lexicon_), 1.0};
}

HttpStanceClassifier::HttpStanceClassifier(std::string base_url, remote::ClientOptions options)
    : client_(std::make_unique<remote::JsonClient>(std::move(base_url), options)) {}

HttpStanceClassifier::~HttpStanceClassifier() = default;

StancedMention HttpStanceClassifier::classify(const ingest::Post& post,
                                              const extraction::ClaimSpan& claim) const {
    const auto response = client_->post(
        "/stance", {{"text", post.text}, {"start", claim.char_start}, {"end", claim.char_end}});
    if (!response.is_object() || !response.contains("label") || !response["label"].is_string()) {
        throw Error("stance response lacks a 'label'");
    }
    const auto label = parse_label(response["label"].get<std::string>());
    if (!label) throw Error("stance response has unknown label " + response["label"].dump());
    double confidence = 1.0;
    if (response.contains("confidence")) {
        if (!response["confidence"].is_number()) throw Error("stance confidence is not a number");
        confidence = response["confidence"].get<double>();
        if (!(confidence >= 0.0 && confidence <= 1.0)) throw Error("stance confidence outside [0,1]");
    }
    return {claim, *label, confidence};
}

StancedMention classify_stance(const ingest::Post& post, const extraction::ClaimSpan& claim,
                               const StanceClassifier& classifier) {
    if (claim.post_id != post.post_id) {
        throw ValidationError("claim from post '" + claim.post_id + "' applied to post '" + post.post_id + "'");
    }
    if (claim.char_end > post.text.size() || claim.char_start >= claim.char_end ||
        post.text.compare(claim.char_start, claim.char_end - claim.char_start, claim.surface) != 0) {
        throw ValidationError("claim span does not match post text");
    }
    return classifier.classify(post, claim);
}

}  // namespace trendwatch::stance
