#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace gridlag::csv {

/// Streaming reader for delimiter-separated text with RFC 4180 quoting.
/// Quoted fields may contain delimiters, doubled quotes and line breaks.
class Reader {
public:
    explicit Reader(std::istream& in, char delimiter = ',') : in_(in), delim_(delimiter) {}

    /// Reads the next record into `fields`. Returns false at end of input.
    bool next(std::vector<std::string>& fields);

    /// 1-based physical line number where the last record started.
    [[nodiscard]] std::size_t line() const noexcept { return record_line_; }

private:
    std::istream& in_;
    char delim_;
    std::size_t line_ = 0;
    std::size_t record_line_ = 0;
};

/// Quotes a field when it contains the delimiter, a quote or a line break.
[[nodiscard]] std::string escape(std::string_view field, char delimiter = ',');

void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

/// Shortest round-trip decimal representation of a double.
[[nodiscard]] std::string num(double v);

}  // namespace gridlag::csv
