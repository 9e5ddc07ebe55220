#pragma once

#include <istream>
#include <string>
#include <vector>

namespace trendwatch::csv {

/// Reads RFC 4180-style records: quoted fields may hold commas, doubled
/// quotes and newlines; CRLF and LF both end a record. Blank lines are
/// skipped. Throws ValidationError on an unterminated quote.
std::vector<std::vector<std::string>> read(std::istream& in);

}  // namespace trendwatch::csv
