#include "trendwatch/text.hpp"

namespace trendwatch::text {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

bool in(char32_t cp, char32_t lo, char32_t hi) { return cp >= lo && cp <= hi; }

bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == 0x2019; }

bool is_terminator(char32_t cp) {
    return cp == U'.' || cp == U'!' || cp == U'?' || cp == 0xFF01 || cp == 0xFF1F ||
           cp == 0x3002;
}

bool is_question_mark(char32_t cp) { return cp == U'?' || cp == 0xFF1F; }

bool is_digit(char32_t cp) { return in(cp, U'0', U'9'); }

}  // namespace

char32_t decode_utf8(std::string_view s, std::size_t& pos) {
    const auto b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    int len = 0;
    char32_t cp = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        ++pos;
        return kReplacement;
    }
    if (pos + len > s.size()) {
        ++pos;
        return kReplacement;
    }
    for (int i = 1; i < len; ++i) {
        const auto b = static_cast<unsigned char>(s[pos + i]);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return kReplacement;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        in(cp, 0xD800, 0xDFFF) || cp > 0x10FFFF) {
        ++pos;
        return kReplacement;
    }
    pos += len;
    return cp;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

bool is_valid_utf8(std::string_view s) {
    std::size_t pos = 0;
    while (pos < s.size()) {
        const std::size_t before = pos;
        const char32_t cp = decode_utf8(s, pos);
        if (cp == kReplacement && pos - before != 3) return false;
    }
    return true;
}

bool is_space(char32_t cp) {
    return in(cp, 0x09, 0x0D) || cp == 0x20 || cp == 0x85 || cp == 0xA0 || cp == 0x1680 ||
           in(cp, 0x2000, 0x200A) || cp == 0x2028 || cp == 0x2029 || cp == 0x202F ||
           cp == 0x205F || cp == 0x3000;
}

bool is_punct(char32_t cp) {
    if (cp < 0x80) {
        return in(cp, 0x21, 0x2F) || in(cp, 0x3A, 0x40) || in(cp, 0x5B, 0x60) ||
               in(cp, 0x7B, 0x7E);
    }
    // Latin-1 punctuation and symbols, keeping the ordinal indicators,
    // micro sign and superscripts as word characters.
    if (in(cp, 0xA1, 0xBF)) {
        return !(cp == 0xAA || cp == 0xB2 || cp == 0xB3 || cp == 0xB5 || cp == 0xB9 ||
                 cp == 0xBA);
    }
    // Pictographs count as boundaries so "cure💊" still yields "cure".
    return cp == 0xD7 || cp == 0xF7 || in(cp, 0x2010, 0x2027) || in(cp, 0x2030, 0x205E) ||
           in(cp, 0x3001, 0x303F) || in(cp, 0xFF01, 0xFF0F) || in(cp, 0xFF1A, 0xFF20) ||
           in(cp, 0xFF3B, 0xFF40) || in(cp, 0xFF5B, 0xFF65) || in(cp, 0x2190, 0x2BFF) ||
           in(cp, 0x1F000, 0x1FAFF) || cp == 0xFE0F || cp == 0x200D;
}

char32_t fold_case(char32_t cp) {
    if (in(cp, U'A', U'Z')) return cp + 32;
    if (cp < 0x80) return cp;
    if (cp == 0xB5) return 0x3BC;
    if (in(cp, 0xC0, 0xDE) && cp != 0xD7) return cp + 32;
    if (in(cp, 0x100, 0x17F)) {
        if (cp == 0x130 || cp == 0x131 || cp == 0x138 || cp == 0x149) return cp;
        if (cp == 0x178) return 0xFF;
        if (cp == 0x17F) return U's';
        if (in(cp, 0x139, 0x148) || in(cp, 0x179, 0x17E)) return (cp % 2 == 1) ? cp + 1 : cp;
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp == 0x386) return 0x3AC;
    if (in(cp, 0x388, 0x38A)) return cp + 37;
    if (cp == 0x38C) return 0x3CC;
    if (in(cp, 0x38E, 0x38F)) return cp + 63;
    if (in(cp, 0x391, 0x3AB) && cp != 0x3A2) return cp + 32;
    if (cp == 0x3C2) return 0x3C3;
    if (in(cp, 0x400, 0x40F)) return cp + 80;
    if (in(cp, 0x410, 0x42F)) return cp + 32;
    if (in(cp, 0x460, 0x481) || in(cp, 0x48A, 0x4BF) || in(cp, 0x4D0, 0x52F)) {
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp == 0x4C0) return 0x4CF;
    if (in(cp, 0x4C1, 0x4CE)) return (cp % 2 == 1) ? cp + 1 : cp;
    if (in(cp, 0x531, 0x556)) return cp + 48;
    if (in(cp, 0x1E00, 0x1E95) || in(cp, 0x1EA0, 0x1EFF)) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x1E9E) return 0xDF;
    if (in(cp, 0xFF21, 0xFF3A)) return cp + 32;
    return cp;
}

std::string fold(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    std::size_t pos = 0;
    while (pos < s.size()) append_utf8(out, fold_case(decode_utf8(s, pos)));
    return out;
}

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> tokens;
    Token current;
    bool open = false;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const std::size_t at = pos;
        const char32_t cp = decode_utf8(s, pos);
        bool boundary = is_space(cp) || is_punct(cp);
        if (boundary && open && is_apostrophe(cp) && pos < s.size()) {
            std::size_t peek = pos;
            const char32_t next = decode_utf8(s, peek);
            if (!is_space(next) && !is_punct(next)) boundary = false;
        }
        if (boundary) {
            if (open) {
                current.end = at;
                tokens.push_back(std::move(current));
                current = Token{};
                open = false;
            }
            continue;
        }
        if (!open) {
            current.start = at;
            open = true;
        }
        // Normalise the typographic apostrophe so "won’t" matches "won't".
        append_utf8(current.folded, cp == 0x2019 ? U'\'' : fold_case(cp));
    }
    if (open) {
        current.end = s.size();
        tokens.push_back(std::move(current));
    }
    return tokens;
}

std::vector<Sentence> split_sentences(std::string_view s) {
    std::vector<Sentence> out;
    std::size_t pos = 0;
    std::size_t start = 0;
    bool started = false;
    char32_t prev = 0;
    auto close = [&](std::size_t end, bool question) {
        if (started) out.push_back({start, end, question});
        started = false;
    };
    while (pos < s.size()) {
        const std::size_t at = pos;
        const char32_t cp = decode_utf8(s, pos);
        if (cp == U'\n') {
            close(at, false);
            prev = cp;
            continue;
        }
        if (is_terminator(cp)) {
            // "3.5" is not a sentence break.
            if (cp == U'.' && is_digit(prev) && pos < s.size() && is_digit(static_cast<unsigned char>(s[pos]))) {
                prev = cp;
                continue;
            }
            bool question = is_question_mark(cp);
            std::size_t end = pos;
            while (end < s.size()) {
                std::size_t peek = end;
                const char32_t next = decode_utf8(s, peek);
                if (!is_terminator(next)) break;
                question = question || is_question_mark(next);
                end = peek;
            }
            if (!started) {
                start = at;
                started = true;
            }
            close(end, question);
            pos = end;
            prev = cp;
            continue;
        }
        if (!started && !is_space(cp)) {
            start = at;
            started = true;
        }
        prev = cp;
    }
    close(s.size(), false);
    // trim trailing whitespace from each range
    for (auto& sentence : out) {
        while (sentence.end > sentence.start &&
               (s[sentence.end - 1] == ' ' || s[sentence.end - 1] == '\t' || s[sentence.end - 1] == '\r')) {
            --sentence.end;
        }
    }
    return out;
}

std::string fold_collapse(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    std::size_t pos = 0;
    while (pos < s.size()) {
        const char32_t cp = decode_utf8(s, pos);
        if (is_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        append_utf8(out, fold_case(cp));
    }
    return out;
}

}  // namespace trendwatch::text
