#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "recap/errors.hpp"

namespace recap {

// Dialect: comma separated, mandatory header row, UTF-8, '.' decimal point,
// no quoting (fields must not contain commas).

inline std::string format_double(double value) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

inline double parse_double_field(const std::string& field, const std::string& file, std::size_t line,
                                 const std::string& column) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw ParseError(file + ":" + std::to_string(line) + ": column '" + column + "': '" + field +
                         "' is not a number");
    return value;
}

inline std::int64_t parse_int_field(const std::string& field, const std::string& file, std::size_t line,
                                    const std::string& column) {
    std::int64_t value = 0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw ParseError(file + ":" + std::to_string(line) + ": column '" + column + "': '" + field +
                         "' is not an integer");
    return value;
}

inline bool parse_bool_field(const std::string& field, const std::string& file, std::size_t line,
                             const std::string& column) {
    if (field == "1" || field == "true")
        return true;
    if (field == "0" || field == "false")
        return false;
    throw ParseError(file + ":" + std::to_string(line) + ": column '" + column + "': '" + field +
                     "' is not a boolean (use 0/1/true/false)");
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(current);
            current.clear();
        } else if (c != '\r') {
            current.push_back(c);
        }
    }
    fields.push_back(current);
    return fields;
}

/// Streams a CSV file row by row. The header must match `expected_header`; a
/// trailing optional column may be allowed by passing optional_tail. The
/// callback receives the 1-based line number and the split fields.
inline void read_csv(const std::string& path, const std::vector<std::string>& expected_header,
                     const std::function<void(std::size_t, const std::vector<std::string>&)>& on_row,
                     const std::string& optional_tail = {}) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(path + ": cannot open file");
    std::string line;
    if (!std::getline(in, line))
        throw ParseError(path + ":1: missing header row");
    const std::vector<std::string> header = split_csv_line(line);

    bool has_tail = false;
    bool header_ok = header.size() == expected_header.size() ||
                     (!optional_tail.empty() && header.size() == expected_header.size() + 1);
    if (header_ok) {
        for (std::size_t i = 0; i < expected_header.size(); ++i)
            header_ok = header_ok && header[i] == expected_header[i];
        if (header.size() == expected_header.size() + 1) {
            header_ok = header_ok && header.back() == optional_tail;
            has_tail = true;
        }
    }
    if (!header_ok) {
        std::string expected;
        for (const std::string& h : expected_header)
            expected += (expected.empty() ? "" : ",") + h;
        if (!optional_tail.empty())
            expected += "[," + optional_tail + "]";
        throw ParseError(path + ":1: header mismatch; expected '" + expected + "', got '" + line + "'");
    }

    const std::size_t want = expected_header.size() + (has_tail ? 1 : 0);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r")
            continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != want)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(want) +
                             " fields, got " + std::to_string(fields.size()));
        on_row(line_no, fields);
    }
}

/// Writes content to a temporary file beside `path`, then renames it over the
/// target, so readers never observe a partial file.
inline void atomic_write_file(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    if (target.has_parent_path())
        std::filesystem::create_directories(target.parent_path());
    const std::filesystem::path temp = target.string() + ".tmp";
    {
        std::ofstream out(temp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot open '" + temp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out)
            throw Error("write to '" + temp.string() + "' failed");
    }
    std::filesystem::rename(temp, target);
}

} // namespace recap
