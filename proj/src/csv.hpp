#pragma once

#include <string>
#include <vector>

namespace factimp {

/// Parsed CSV contents. `line` holds the 1-based physical line on which each
/// record started, for error reporting against the original file.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> line;

    int column(const std::string& name) const;  // -1 when absent
};

/// RFC-4180 reader: quoted fields, doubled quotes, embedded newlines,
/// tolerant of CRLF. Requires a header row.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text, const std::string& origin);

/// Quotes a field iff it contains a comma, quote, or newline.
std::string csv_escape(const std::string& field);

/// Shortest-round-trip decimal rendering with 12 significant digits;
/// locale-independent, byte-stable across runs.
std::string format_double(double v);

}  // namespace factimp
