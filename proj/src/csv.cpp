#include "csv.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace factimp {

int CsvTable::column(const std::string& name) const {
    for (size_t j = 0; j < header.size(); ++j) {
        if (header[j] == name) return static_cast<int>(j);
    }
    return -1;
}

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<int> lines;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool pending = false;  // current record has content
    int line_no = 1;
    int record_line = 1;

    auto end_field = [&] {
        record.push_back(field);
        field.clear();
        pending = true;
    };
    auto end_record = [&] {
        if (pending || !record.empty()) {
            end_field();
            records.push_back(record);
            lines.push_back(record_line);
            record.clear();
            pending = false;
        }
        record_line = line_no;
    };

    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_no;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                pending = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                ++line_no;
                end_record();
                break;
            default:
                field += c;
                pending = true;
        }
    }
    if (in_quotes) {
        throw ValidationError(origin + ": unterminated quoted field");
    }
    end_record();

    if (records.empty()) {
        throw ValidationError(origin + ": empty file (header row required)");
    }
    CsvTable table;
    table.header = records.front();
    table.rows.assign(records.begin() + 1, records.end());
    table.line.assign(lines.begin() + 1, lines.end());
    return table;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ValidationError("cannot open '" + path + "': " + std::strerror(errno));
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path);
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

}  // namespace factimp
