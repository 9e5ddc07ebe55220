#include "trendwatch/csv.hpp"

#include <iterator>

#include "trendwatch/errors.hpp"

namespace trendwatch::csv {

std::vector<std::vector<std::string>> read(std::istream& in) {
    const std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool touched = false;  // row has content (distinguishes "" from a blank line)

    auto end_row = [&] {
        if (touched || !field.empty() || !row.empty()) {
            row.push_back(std::move(field));
            rows.push_back(std::move(row));
        }
        row.clear();
        field.clear();
        touched = false;
    };

    for (std::size_t i = 0; i < data.size(); ++i) {
        const char ch = data[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
            case '"':
                quoted = true;
                touched = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                touched = true;
                break;
            case '\r':
                if (i + 1 < data.size() && data[i + 1] == '\n') ++i;
                end_row();
                break;
            case '\n':
                end_row();
                break;
            default:
                field.push_back(ch);
        }
    }
    if (quoted) throw ValidationError("csv: unterminated quoted field");
    end_row();
    return rows;
}

}  // namespace trendwatch::csv
