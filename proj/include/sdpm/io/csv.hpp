// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sdpm/model/model.hpp"

namespace sdpm {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view unquote(std::string_view s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
    return s;
}

/// Strict decimal parse; "inf"/"nan" are accepted only when `allow_inf`.
inline bool parse_double(std::string_view s, double& out, bool allow_inf = false) {
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return false;
    if (std::isnan(out)) return false;
    return allow_inf || std::isfinite(out);
}

inline bool parse_long(std::string_view s, long long& out) {
    if (s.empty()) return false;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Lines of `text` with CR stripped; trailing empty lines removed.
inline std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t pos = text.find('\n', start);
        std::string_view line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        lines.push_back(line);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    return lines;
}

}  // namespace detail

/// Header row of column names, then one numeric row per observation.
inline DataMatrix parse_csv(std::string_view text) {
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF && static_cast<unsigned char>(text[1]) == 0xBB &&
        static_cast<unsigned char>(text[2]) == 0xBF) {
        text.remove_prefix(3);
    }
    const auto lines = detail::split_lines(text);
    if (lines.empty()) throw ParseError(1, "empty file");
    std::vector<std::string> names;
    for (auto cell : detail::split_commas(lines.front())) {
        cell = detail::unquote(cell);
        if (cell.empty()) throw ParseError(1, "empty column name");
        names.emplace_back(cell);
    }
    if (lines.size() < 2) throw ParseError(2, "no data rows");
    const auto d = static_cast<Eigen::Index>(names.size());
    Mat values(static_cast<Eigen::Index>(lines.size() - 1), d);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto cells = detail::split_commas(lines[li]);
        if (static_cast<Eigen::Index>(cells.size()) != d) {
            throw ParseError(li + 1, "expected " + std::to_string(d) + " fields, found " + std::to_string(cells.size()));
        }
        for (Eigen::Index j = 0; j < d; ++j) {
            double v = 0.0;
            if (!detail::parse_double(cells[static_cast<std::size_t>(j)], v)) {
                throw ParseError(li + 1, "non-numeric or non-finite value '" + std::string(cells[static_cast<std::size_t>(j)]) + "'");
            }
            values(static_cast<Eigen::Index>(li - 1), j) = v;
        }
    }
    return DataMatrix(std::move(values), std::move(names));
}

inline DataMatrix read_csv(const std::string& path) { return parse_csv(detail::read_file(path)); }

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_csv(const DataMatrix& data, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + path + "'");
    for (std::size_t j = 0; j < data.names().size(); ++j) out << (j ? "," : "") << data.names()[j];
    out << '\n';
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
        for (Eigen::Index j = 0; j < data.cols(); ++j) out << (j ? "," : "") << format_double(data.values()(i, j));
        out << '\n';
    }
    if (!out) throw ArgumentError("write failed for '" + path + "'");
}

/// Labels file: a header, then either "index,label" rows or one label per row.
inline std::vector<int> parse_labels(std::string_view text) {
    const auto lines = detail::split_lines(text);
    if (lines.size() < 2) throw ParseError(lines.empty() ? 1 : 2, "no label rows");
    const std::size_t width = detail::split_commas(lines.front()).size();
    if (width != 1 && width != 2) throw ParseError(1, "label file must have one or two columns");
    std::vector<int> labels;
    labels.reserve(lines.size() - 1);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto cells = detail::split_commas(lines[li]);
        if (cells.size() != width) throw ParseError(li + 1, "wrong number of fields");
        long long v = 0;
        if (!detail::parse_long(cells.back(), v)) throw ParseError(li + 1, "label is not an integer");
        if (width == 2) {
            long long idx = 0;
            if (!detail::parse_long(cells.front(), idx) || idx != static_cast<long long>(li)) {
                throw ParseError(li + 1, "row index out of sequence");
            }
        }
        labels.push_back(static_cast<int>(v));
    }
    return labels;
}

inline std::vector<int> read_labels(const std::string& path) { return parse_labels(detail::read_file(path)); }

inline void write_labels(const std::vector<int>& labels, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot write '" + path + "'");
    out << "obs,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i) out << (i + 1) << ',' << labels[i] << '\n';
    if (!out) throw ArgumentError("write failed for '" + path + "'");
}

}  // namespace sdpm
