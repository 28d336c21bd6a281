#ifndef SYNTHDSE_IO_CSV_HPP
#define SYNTHDSE_IO_CSV_HPP
//! \file
//! \brief Minimal delimited-text reader: mandatory header, '#' comment
//! lines, double-quoted fields with "" escapes, line numbers kept for errors.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "synthdse/error.hpp"

namespace synthdse::io {

struct CsvRow {
    std::size_t line = 0; // 1-based line number in the file
    std::vector<std::string> fields;
};

struct CsvTable {
    std::string source; // path, for messages
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
    std::vector<std::string> comments; // '#' lines, without the marker

    [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        return std::nullopt;
    }

    [[nodiscard]] std::size_t require_column(std::string_view name) const {
        auto c = column(name);
        if (!c) {
            throw parse_error(source + ": missing column '" + std::string(name) + "'");
        }
        return *c;
    }
};

inline std::vector<std::string> split_csv_line(std::string_view line, const std::string &where) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += ch;
            }
        } else if (ch == '"' && field.empty() && !was_quoted) {
            quoted = true;
            was_quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(field));
            field.clear();
            was_quoted = false;
        } else {
            field += ch;
        }
    }
    if (quoted) {
        throw parse_error(where + ": unterminated quoted field");
    }
    out.push_back(std::move(field));
    return out;
}

inline CsvTable parse_csv(std::istream &in, const std::string &source) {
    CsvTable t;
    t.source = source;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        if (line.front() == '#') {
            t.comments.push_back(line.substr(1));
            continue;
        }
        const std::string where = source + ":" + std::to_string(lineno);
        auto fields = split_csv_line(line, where);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size()) {
            throw parse_error(where + ": expected " + std::to_string(t.header.size()) +
                              " fields, found " + std::to_string(fields.size()));
        }
        t.rows.push_back({lineno, std::move(fields)});
    }
    if (!have_header) {
        throw parse_error(source + ": missing header line");
    }
    return t;
}

inline CsvTable read_csv(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw parse_error(path + ": cannot open file");
    }
    return parse_csv(in, path);
}

inline std::string quote_csv(std::string_view s) {
    if (s.find_first_of(",\"\n") == std::string_view::npos) {
        return std::string(s);
    }
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') {
            out += '"';
        }
        out += ch;
    }
    out += '"';
    return out;
}

// --- field conversion -----------------------------------------------------------

inline std::string location(const CsvTable &t, const CsvRow &r) {
    return t.source + ":" + std::to_string(r.line);
}

inline std::int64_t parse_integer(const CsvTable &t, const CsvRow &r, std::size_t col) {
    const std::string &s = r.fields[col];
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw parse_error(location(t, r) + ": column '" + t.header[col] +
                          "' expects an integer, found '" + s + "'");
    }
    return v;
}

inline double parse_real(const CsvTable &t, const CsvRow &r, std::size_t col) {
    const std::string &s = r.fields[col];
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
        throw parse_error(location(t, r) + ": column '" + t.header[col] +
                          "' expects a number, found '" + s + "'");
    }
    return v;
}

inline std::string parse_label(const CsvTable &t, const CsvRow &r, std::size_t col) {
    const std::string &s = r.fields[col];
    if (s.empty()) {
        throw parse_error(location(t, r) + ": column '" + t.header[col] + "' is empty");
    }
    return s;
}

} // namespace synthdse::io

#endif
