#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vbal/core.hpp"
#include "vbal/errors.hpp"

namespace vbal::io {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view token, std::size_t line_no) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw ValidationError("line " + std::to_string(line_no) + ": cannot parse '" + std::string(token) +
                              "' as a number");
    }
    return value;
}

inline std::vector<double> parse_row(std::string_view line, std::size_t line_no) {
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        row.push_back(parse_double(line.substr(start, comma - start), line_no));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return row;
}

// Parses "# m=<m> n=<n>"; returns nullopt for any other comment.
inline std::optional<std::pair<std::size_t, std::size_t>> parse_header(std::string_view line) {
    line = trim(line.substr(1));
    std::size_t m = 0, n = 0;
    if (std::sscanf(std::string(line).c_str(), "m=%zu n=%zu", &m, &n) == 2) return std::pair{m, n};
    return std::nullopt;
}

}  // namespace detail

/// Reads an instance: one line per column vector, m comma-separated values.
/// An optional "# m=<m> n=<n>" header is checked against the data.
inline VectorSet read_instance(std::istream& in) {
    std::vector<std::vector<double>> columns;
    std::optional<std::pair<std::size_t, std::size_t>> header;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = detail::trim(line);
        if (view.empty()) continue;
        if (view.front() == '#') {
            if (auto h = detail::parse_header(view)) header = h;
            continue;
        }
        columns.push_back(detail::parse_row(view, line_no));
    }
    if (columns.empty()) throw ValidationError("instance: no data rows");
    auto x = VectorSet::from_columns(columns);
    if (header && (header->first != x.dim() || header->second != x.count())) {
        throw DimensionError("instance: header says m=" + std::to_string(header->first) +
                             " n=" + std::to_string(header->second) + " but data has m=" +
                             std::to_string(x.dim()) + " n=" + std::to_string(x.count()));
    }
    return x;
}

inline VectorSet read_instance_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open instance file '" + path + "'");
    return read_instance(in);
}

inline void write_instance(std::ostream& out, const VectorSet& x) {
    out << "# m=" << x.dim() << " n=" << x.count() << '\n';
    char buf[32];
    for (std::size_t i = 0; i < x.count(); ++i) {
        auto col = x.column(i);
        for (std::size_t k = 0; k < col.size(); ++k) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, col[k]);
            if (k) out << ',';
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

/// Two-column (x, density) table.
inline std::pair<std::vector<double>, std::vector<double>> read_table(std::istream& in) {
    std::vector<double> xs, ys;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto view = detail::trim(line);
        if (view.empty() || view.front() == '#') continue;
        auto row = detail::parse_row(view, line_no);
        if (row.size() != 2) {
            throw ValidationError("table line " + std::to_string(line_no) + ": expected 2 columns");
        }
        xs.push_back(row[0]);
        ys.push_back(row[1]);
    }
    return {std::move(xs), std::move(ys)};
}

inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace vbal::io
