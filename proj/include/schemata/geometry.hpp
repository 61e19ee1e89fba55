#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdlib>
#include <iterator>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace schemata {

struct Cell {
    int row = 0;
    int col = 0;
    auto operator<=>(const Cell&) const = default;
};

/// Translation applied to an object's local cells.
struct Pose {
    int row = 0;
    int col = 0;
    auto operator<=>(const Pose&) const = default;
};

using CellSet = std::set<Cell>;
using Mask = CellSet;

inline Cell operator+(Cell c, Pose p) { return {c.row + p.row, c.col + p.col}; }
inline Cell operator-(Cell c, Pose p) { return {c.row - p.row, c.col - p.col}; }

inline CellSet translate(const CellSet& cells, Pose by) {
    CellSet out;
    for (const auto& c : cells) out.insert(c + by);
    return out;
}

inline CellSet intersect(const CellSet& a, const CellSet& b) {
    CellSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

inline CellSet unite(const CellSet& a, const CellSet& b) {
    CellSet out = a;
    out.insert(b.begin(), b.end());
    return out;
}

/// Intersection over union; two empty sets count as identical (1.0).
inline double iou(const CellSet& a, const CellSet& b) {
    if (a.empty() && b.empty()) return 1.0;
    const auto inter = intersect(a, b).size();
    const auto uni = unite(a, b).size();
    return static_cast<double>(inter) / static_cast<double>(uni);
}

inline bool adjacent4(Cell a, Cell b) {
    return std::abs(a.row - b.row) + std::abs(a.col - b.col) == 1;
}

inline constexpr Cell kNeighbours4[4] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};

inline bool is_4_connected(const CellSet& cells) {
    if (cells.empty()) return false;
    CellSet seen{*cells.begin()};
    std::queue<Cell> todo;
    todo.push(*cells.begin());
    while (!todo.empty()) {
        auto c = todo.front();
        todo.pop();
        for (auto d : kNeighbours4) {
            Cell n{c.row + d.row, c.col + d.col};
            if (cells.count(n) && seen.insert(n).second) todo.push(n);
        }
    }
    return seen.size() == cells.size();
}

/// Empty cells fully enclosed by `cells` (not 4-reachable from outside the bounding box).
inline CellSet enclosed_holes(const CellSet& cells) {
    if (cells.empty()) return {};
    int r0 = cells.begin()->row, r1 = r0, c0 = cells.begin()->col, c1 = c0;
    for (auto c : cells) {
        r0 = std::min(r0, c.row);
        r1 = std::max(r1, c.row);
        c0 = std::min(c0, c.col);
        c1 = std::max(c1, c.col);
    }
    // Flood the complement from a one-cell frame around the bounding box.
    CellSet outside;
    std::queue<Cell> todo;
    auto inside_frame = [&](Cell c) {
        return c.row >= r0 - 1 && c.row <= r1 + 1 && c.col >= c0 - 1 && c.col <= c1 + 1;
    };
    Cell start{r0 - 1, c0 - 1};
    outside.insert(start);
    todo.push(start);
    while (!todo.empty()) {
        auto c = todo.front();
        todo.pop();
        for (auto d : kNeighbours4) {
            Cell n{c.row + d.row, c.col + d.col};
            if (inside_frame(n) && !cells.count(n) && outside.insert(n).second) todo.push(n);
        }
    }
    CellSet holes;
    for (int r = r0; r <= r1; ++r)
        for (int c = c0; c <= c1; ++c)
            if (!cells.count({r, c}) && !outside.count({r, c})) holes.insert({r, c});
    return holes;
}

/// Run-length encoding along rows: "r,c,len;r,c,len;..." (empty string for an empty set).
inline std::string encode_rle(const CellSet& cells) {
    std::ostringstream out;
    bool first = true;
    auto it = cells.begin();
    while (it != cells.end()) {
        Cell start = *it;
        int len = 1;
        auto next = std::next(it);
        while (next != cells.end() && next->row == start.row && next->col == start.col + len) {
            ++len;
            ++next;
        }
        if (!first) out << ';';
        out << start.row << ',' << start.col << ',' << len;
        first = false;
        it = next;
    }
    return out.str();
}

inline CellSet decode_rle(const std::string& text) {
    CellSet cells;
    std::stringstream in(text);
    std::string run;
    while (std::getline(in, run, ';')) {
        if (run.empty()) continue;
        int r = 0, c = 0, len = 0;
        char comma1 = 0, comma2 = 0;
        std::istringstream rs(run);
        if (!(rs >> r >> comma1 >> c >> comma2 >> len) || comma1 != ',' || comma2 != ',' || len < 1)
            throw std::invalid_argument("malformed run-length entry: " + run);
        for (int k = 0; k < len; ++k) cells.insert({r, c + k});
    }
    return cells;
}

}  // namespace schemata
