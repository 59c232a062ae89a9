#pragma once

// Deterministic text output (CSV preambles, 17-digit numbers, JSON with
// explicit infinity encoding) and two-column table input.

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace flatzone::io {

using ordered_json = nlohmann::ordered_json;

// 17 significant digits: lossless double round-trip, '.' decimal.
inline std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

// A JSON value that spells out divergence instead of losing it to null.
inline ordered_json json_number(double x) {
    if (std::isinf(x)) return ordered_json{{"infinite", true}};
    return ordered_json(x);
}

// Two-column CSV `x,value` with strictly increasing first column. Blank lines
// and '#' comments are skipped; one leading non-numeric row is tolerated as a
// header.
inline std::vector<std::pair<double, double>> read_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open table file: " + path);
    std::vector<std::pair<double, double>> rows;
    std::string line;
    bool header_allowed = true;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t b = line.find_first_not_of(" \t");
        if (b == std::string::npos || line[b] == '#') continue;
        const std::size_t comma = line.find(',');
        const std::string where = path + ":" + std::to_string(lineno);
        if (comma == std::string::npos)
            throw std::invalid_argument("table row needs two comma-separated columns: " + where);
        char* end = nullptr;
        const std::string c0 = line.substr(0, comma), c1 = line.substr(comma + 1);
        const double x = std::strtod(c0.c_str(), &end);
        const bool x_ok = end != c0.c_str() && end != nullptr;
        if (!x_ok) {
            if (header_allowed) {
                header_allowed = false;
                continue;
            }
            throw std::invalid_argument("unparseable table row: " + where);
        }
        header_allowed = false;
        end = nullptr;
        const double y = std::strtod(c1.c_str(), &end);
        if (end == c1.c_str())
            throw std::invalid_argument("unparseable table value: " + where);
        if (!std::isfinite(x) || !std::isfinite(y))
            throw std::invalid_argument("non-finite table entry: " + where);
        if (!rows.empty() && !(x > rows.back().first))
            throw std::invalid_argument("table first column must be strictly increasing: " + where);
        rows.emplace_back(x, y);
    }
    if (rows.size() < 2)
        throw std::invalid_argument("table needs at least two data rows: " + path);
    return rows;
}

// Piecewise-linear sample, clamped to the end values outside the table.
inline double interp_table(const std::vector<std::pair<double, double>>& tab, double x) {
    if (x <= tab.front().first) return tab.front().second;
    if (x >= tab.back().first) return tab.back().second;
    std::size_t lo = 0, hi = tab.size() - 1;
    while (hi - lo > 1) {
        const std::size_t mid = (lo + hi) / 2;
        (tab[mid].first <= x ? lo : hi) = mid;
    }
    const double t = (x - tab[lo].first) / (tab[hi].first - tab[lo].first);
    return tab[lo].second + t * (tab[hi].second - tab[lo].second);
}

// Write to the given path, or to the fallback stream when the path is empty.
// Binary mode keeps outputs byte-identical across platforms.
inline int write_output(const std::string& path, const std::string& content, std::ostream& fallback,
                        std::ostream& err) {
    if (path.empty()) {
        fallback << content;
        return 0;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        err << "cannot open output file: " << path << "\n";
        return 2;
    }
    f << content;
    f.flush();
    if (!f.good()) {
        err << "write failed: " << path << "\n";
        return 2;
    }
    return 0;
}

}  // namespace flatzone::io
