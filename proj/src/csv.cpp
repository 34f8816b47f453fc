#include "gridlag/csv.hpp"

#include <fmt/format.h>

namespace gridlag::csv {

bool Reader::next(std::vector<std::string>& fields) {
    fields.clear();
    std::string line;
    if (!std::getline(in_, line)) return false;
    ++line_;
    record_line_ = line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (record_line_ == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    while (true) {
        if (i == line.size()) {
            if (quoted) {
                // Embedded line break inside a quoted field.
                std::string more;
                if (!std::getline(in_, more)) break;
                ++line_;
                if (!more.empty() && more.back() == '\r') more.pop_back();
                field.push_back('\n');
                line = std::move(more);
                i = 0;
                continue;
            }
            break;
        }
        char c = line[i++];
        if (quoted) {
            if (c == '"') {
                if (i < line.size() && line[i] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delim_) {
            fields.push_back(std::move(field));
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    fields.push_back(std::move(field));
    return true;
}

std::string escape(std::string_view field, char delimiter) {
    if (field.find_first_of(std::string{delimiter} + "\"\n\r") == std::string_view::npos)
        return std::string{field};
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out.put(delimiter);
        out << escape(fields[i], delimiter);
    }
    out.put('\n');
}

std::string num(double v) { return fmt::format("{}", v); }

}  // namespace gridlag::csv
