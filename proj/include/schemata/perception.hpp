#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "schemata/belief_store.hpp"
#include "schemata/detector.hpp"
#include "schemata/geometry.hpp"
#include "schemata/microworld.hpp"
#include "schemata/query.hpp"

namespace schemata {

using ObjectPair = std::pair<std::string, std::string>;

struct PerceptReport {
    int tick = 0;
    std::vector<Triple> triples;  ///< canonical order, no duplicates
    std::map<ObjectPair, CellSet> contact_masks;
    std::map<ObjectPair, CellSet> detections;  ///< (object, concept) -> part cells

    bool operator==(const PerceptReport&) const = default;

    bool empty() const { return triples.empty() && contact_masks.empty() && detections.empty(); }

    bool has(Polarity p, const std::string& pred, const std::string& s, const std::string& o) const {
        return std::any_of(triples.begin(), triples.end(), [&](const Triple& t) {
            return t.polarity == p && t.predicate == pred && t.subject == s && t.object == o;
        });
    }

    /// Line-delimited triples followed by run-length-encoded masks.
    std::string dump() const {
        std::string out = "tick " + std::to_string(tick) + "\n";
        for (const auto& t : triples) out += t.statement() + "\n";
        for (const auto& [k, m] : contact_masks) out += "contact-mask " + k.first + " " + k.second + " " + encode_rle(m) + "\n";
        for (const auto& [k, m] : detections) out += "part-mask " + k.first + " " + k.second + " " + encode_rle(m) + "\n";
        return out;
    }
};

namespace detail {

inline std::vector<std::pair<Cell, Cell>> adjacent_pairs(const CellSet& a, const CellSet& b) {
    std::vector<std::pair<Cell, Cell>> out;
    for (const auto& c : a)
        for (const auto& n : kNeighbours4) {
            Cell d{c.row + n.row, c.col + n.col};
            if (b.count(d)) out.emplace_back(c, d);
        }
    return out;
}

inline long min_sq_distance(const CellSet& a, const CellSet& b) {
    long best = std::numeric_limits<long>::max();
    for (const auto& x : a)
        for (const auto& y : b) {
            long dr = x.row - y.row, dc = x.col - y.col;
            best = std::min(best, dr * dr + dc * dc);
        }
    return best;
}

/// Centroid displacement of an object between two frames, in cells.
inline std::pair<double, double> displacement(const CellSet& before, const CellSet& after) {
    auto centroid = [](const CellSet& m) {
        double r = 0, c = 0;
        for (const auto& x : m) {
            r += x.row;
            c += x.col;
        }
        return std::pair{r / static_cast<double>(m.size()), c / static_cast<double>(m.size())};
    };
    auto [r0, c0] = centroid(before);
    auto [r1, c1] = centroid(after);
    return {r1 - r0, c1 - c0};
}

inline bool is_zero(double x) { return std::abs(x) < 1e-9; }

}  // namespace detail

/// Cells within Chebyshev distance rho of an adjacent cell pair between a and b; empty if not adjacent.
inline CellSet contact_mask(const Frame& f, const std::string& a, const std::string& b, int rho = 1) {
    const auto pairs = detail::adjacent_pairs(f.mask(a), f.mask(b));
    CellSet out;
    for (const auto& [x, y] : pairs)
        for (const auto& c : {x, y})
            for (int dr = -rho; dr <= rho; ++dr)
                for (int dc = -rho; dc <= rho; ++dc) {
                    Cell n{c.row + dr, c.col + dc};
                    if (f.in_bounds(n)) out.insert(n);
                }
    return out;
}

struct PerceptionOptions {
    int rho = 1;
};

/// Answers queries over two consecutive frames. Pure: the result depends only on the arguments.
inline PerceptReport perceive(const Frame& prev, const Frame& curr, const std::set<PerceptionQuery>& queries,
                              const DetectorRegistry& registry = {}, PerceptionOptions opts = {}) {
    if (curr.tick != prev.tick + 1)
        throw Error("frames are not consecutive: " + std::to_string(prev.tick) + " and " + std::to_string(curr.tick));
    if (curr.rows != prev.rows || curr.cols != prev.cols) throw Error("frames differ in size");
    PerceptReport rep;
    rep.tick = curr.tick;
    std::vector<Triple> out;
    auto emit = [&](Polarity p, const std::string& pred, const std::string& s, const std::string& o) {
        out.push_back({p, pred, s, o, Provenance::perceived(curr.tick)});
    };
    auto partners = [&](const PerceptionQuery& q) {
        std::vector<std::string> objs;
        if (q.object) {
            curr.mask(*q.object);
            prev.mask(*q.object);
            if (*q.object != q.subject) objs.push_back(*q.object);
        } else {
            for (const auto& [id, m] : curr.masks)
                if (id != q.subject) objs.push_back(id);
        }
        return objs;
    };

    std::set<std::string> subjects;
    for (const auto& q : queries) {
        const auto& now = curr.mask(q.subject);
        const auto& before = prev.mask(q.subject);
        subjects.insert(q.subject);
        if (q.kind == PerceptionQuery::Kind::relative_movement) {
            auto [dr, dc] = detail::displacement(before, now);
            if (dr <= -1) emit(Polarity::pos, "movDir", q.subject, "up");
            if (dr >= 1) emit(Polarity::pos, "movDir", q.subject, "down");
            if (dc <= -1) emit(Polarity::pos, "movDir", q.subject, "left");
            if (dc >= 1) emit(Polarity::pos, "movDir", q.subject, "right");
            const bool s_still = detail::is_zero(dr) && detail::is_zero(dc);
            for (const auto& o : partners(q)) {
                auto [odr, odc] = detail::displacement(prev.mask(o), curr.mask(o));
                if (s_still && detail::is_zero(odr) && detail::is_zero(odc)) {
                    emit(Polarity::pos, "stillness", q.subject, o);
                    continue;
                }
                auto d0 = detail::min_sq_distance(before, prev.mask(o));
                auto d1 = detail::min_sq_distance(now, curr.mask(o));
                if (d1 < d0) emit(Polarity::pos, "approaches", q.subject, o);
                if (d1 > d0) emit(Polarity::pos, "departs", q.subject, o);
            }
        } else {
            for (const auto& o : partners(q)) {
                const auto pairs = detail::adjacent_pairs(now, curr.mask(o));
                if (pairs.empty()) {
                    emit(Polarity::neg, "contacts", q.subject, o);
                    continue;
                }
                emit(Polarity::pos, "contacts", q.subject, o);
                rep.contact_masks[{q.subject, o}] = contact_mask(curr, q.subject, o, opts.rho);
                std::size_t o_beneath = 0, s_beneath = 0;
                for (const auto& [a, b] : pairs) {
                    if (b.row == a.row + 1) ++o_beneath;
                    if (a.row == b.row + 1) ++s_beneath;
                }
                if (2 * o_beneath > pairs.size()) emit(Polarity::pos, "below", o, q.subject);
                if (2 * s_beneath > pairs.size()) emit(Polarity::pos, "below", q.subject, o);
            }
        }
    }
    for (const auto& s : subjects) {
        auto cls = curr.classes.find(s);
        if (cls == curr.classes.end()) continue;
        for (const auto* m : registry.for_host(cls->second))
            rep.detections[{s, m->concept_name}] = detect(*m, curr.mask(s));
    }
    auto order = [](const Triple& t) { return std::tie(t.predicate, t.subject, t.object, t.polarity); };
    std::sort(out.begin(), out.end(), [&](const Triple& a, const Triple& b) { return order(a) < order(b); });
    out.erase(std::unique(out.begin(), out.end(), [](const Triple& a, const Triple& b) { return a.same_statement(b); }),
              out.end());
    rep.triples = std::move(out);
    return rep;
}

/// Stateful front end: queries submitted during one tick are answered at the next perceive.
class Perception {
public:
    explicit Perception(PerceptionOptions opts = {}) : opts_(opts) {}

    void submit_queries(std::set<PerceptionQuery> queries) { pending_ = std::move(queries); }
    const std::set<PerceptionQuery>& pending() const { return pending_; }

    DetectorRegistry& registry() { return registry_; }
    const DetectorRegistry& registry() const { return registry_; }

    PerceptReport perceive(const Frame& prev, const Frame& curr) const {
        return schemata::perceive(prev, curr, pending_, registry_, opts_);
    }

private:
    PerceptionOptions opts_;
    std::set<PerceptionQuery> pending_;
    DetectorRegistry registry_;
};

}  // namespace schemata
