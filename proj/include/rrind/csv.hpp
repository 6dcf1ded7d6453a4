#pragma once

// CSV ingestion: one observation per row, one column per coordinate, or a
// square precomputed distance table.

#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rrind/core.hpp"

namespace rrind {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
    std::size_t b = raw.find_first_not_of(" \t\r");
    std::size_t e = raw.find_last_not_of(" \t\r");
    if (b == std::string::npos)
        throw std::invalid_argument("empty CSV cell at row " + std::to_string(row) + ", column " + std::to_string(col));
    const std::string s = raw.substr(b, e - b + 1);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v))
        throw std::invalid_argument("malformed CSV cell '" + s + "' at row " + std::to_string(row) + ", column " +
                                    std::to_string(col));
    return v;
}

}  // namespace detail

/// Reads a numeric table. Blank lines are skipped. Every row must have the
/// same number of columns.
inline std::vector<Point> read_points_csv(std::istream& in, bool has_header) {
    std::vector<Point> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_pending = has_header;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        Point p;
        p.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) p.push_back(detail::parse_cell(cells[c], lineno, c + 1));
        if (!rows.empty() && p.size() != rows.front().size())
            throw std::invalid_argument("CSV row " + std::to_string(lineno) + " has " + std::to_string(p.size()) +
                                        " columns, expected " + std::to_string(rows.front().size()));
        rows.push_back(std::move(p));
    }
    return rows;
}

inline std::vector<Point> read_points_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_points_csv(in, has_header);
}

/// Square distance table; symmetry and zero diagonal validated within 1e-9.
inline DistanceMatrix read_distance_csv(std::istream& in, bool has_header) {
    auto rows = read_points_csv(in, has_header);
    const std::size_t n = rows.size();
    if (n < 2) throw std::invalid_argument("distance table needs at least 2 rows");
    std::vector<double> flat;
    flat.reserve(n * n);
    for (const auto& r : rows) {
        if (r.size() != n) throw std::invalid_argument("distance table must be square");
        flat.insert(flat.end(), r.begin(), r.end());
    }
    return DistanceMatrix(n, std::move(flat), 1e-9);
}

inline DistanceMatrix read_distance_csv(const std::string& path, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_distance_csv(in, has_header);
}

inline void write_points_csv(std::ostream& out, const std::vector<Point>& pts) {
    std::ostringstream line;
    line.precision(17);
    for (const auto& p : pts) {
        line.str("");
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (k) line << ',';
            line << p[k];
        }
        out << line.str() << '\n';
    }
}

}  // namespace rrind
