#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace trendwatch::text {

/// A token with byte offsets into the source string.
struct Token {
    std::string folded;  // case-folded form
    std::size_t start = 0;
    std::size_t end = 0;  // one past the last byte
};

/// Decodes one UTF-8 code point at `pos`, advancing `pos`. Invalid bytes
/// decode as U+FFFD and consume a single byte.
char32_t decode_utf8(std::string_view s, std::size_t& pos);

void append_utf8(std::string& out, char32_t cp);

bool is_space(char32_t cp);
bool is_punct(char32_t cp);

/// Simple (1:1) case folding for the Latin, Greek, Cyrillic and
/// Armenian blocks plus fullwidth ASCII. Other code points fold to themselves.
char32_t fold_case(char32_t cp);

std::string fold(std::string_view s);

/// Splits on whitespace and punctuation. Apostrophes between two letters
/// stay inside the token so "won't" is one token.
std::vector<Token> tokenize(std::string_view s);

/// Sentence boundaries as [start, end) byte ranges. A sentence ends after
/// a run of '.', '!', '?' (or their fullwidth forms) or a newline.
struct Sentence {
    std::size_t start = 0;
    std::size_t end = 0;
    bool question = false;
};
std::vector<Sentence> split_sentences(std::string_view s);

/// Lowercase and collapse internal whitespace runs to a single space.
std::string fold_collapse(std::string_view s);

bool is_valid_utf8(std::string_view s);

}  // namespace trendwatch::text
