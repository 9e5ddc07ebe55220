#pragma once

#include <string_view>

// Contents of the files under config/, embedded at build time.
namespace trendwatch::builtin {

std::string_view cue_patterns();
std::string_view stance_lexicon();
std::string_view approved_treatments();
std::string_view likert_rubric();

}  // namespace trendwatch::builtin
