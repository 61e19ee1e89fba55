#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "schemata/belief_store.hpp"
#include "schemata/detector.hpp"
#include "schemata/microworld.hpp"
#include "schemata/perception.hpp"
#include "schemata/support_theory.hpp"

namespace schemata {

enum class PlanMode { whole, part };

inline std::string_view to_string(PlanMode m) { return m == PlanMode::whole ? "whole" : "part"; }

inline PlanMode parse_plan_mode(std::string_view s) {
    if (s == "whole") return PlanMode::whole;
    if (s == "part") return PlanMode::part;
    throw Error("unknown plan mode '" + std::string(s) + "'");
}

/// Where `moving` may go: its focus cells touch `target`, the target is beneath it, nothing overlaps.
struct PlacementConstraint {
    std::string moving;
    std::string target;
    CellSet focus;  ///< local frame of the moving object
};

inline PlacementConstraint whole_constraint(const World& w, const std::string& moving, const std::string& target) {
    w.body(target);
    return {moving, target, w.body(moving).spec.cells};
}

/// True iff the moving object at `pose` satisfies the constraint against the world's other objects.
inline bool satisfies(const World& w, const PlacementConstraint& c, Pose pose) {
    const auto& body = w.body(c.moving);
    if (w.blocked(c.moving, body.spec.cells, pose)) return false;
    const auto target = w.body(c.target).occupied();
    bool touches = false;
    for (const auto& f : c.focus) {
        auto cell = f + pose;
        for (const auto& n : kNeighbours4)
            if (target.count({cell.row + n.row, cell.col + n.col})) touches = true;
    }
    if (!touches) return false;
    const auto pairs = detail::adjacent_pairs(translate(body.spec.cells, pose), target);
    std::size_t beneath = 0;
    for (const auto& [a, b] : pairs)
        if (b.row == a.row + 1) ++beneath;
    return 2 * beneath > pairs.size();
}

/// All in-bounds translations meeting the constraint, row-major.
inline std::vector<Pose> candidate_poses(const World& w, const PlacementConstraint& c) {
    if (c.focus.empty()) throw Error("empty focus mask");
    const auto& body = w.body(c.moving);
    w.body(c.target);
    for (const auto& f : c.focus)
        if (!body.spec.cells.count(f)) throw Error("focus mask is not part of '" + c.moving + "'");
    int min_r = 1 << 30, min_c = 1 << 30, max_r = -(1 << 30), max_c = -(1 << 30);
    for (const auto& cell : body.spec.cells) {
        min_r = std::min(min_r, cell.row);
        min_c = std::min(min_c, cell.col);
        max_r = std::max(max_r, cell.row);
        max_c = std::max(max_c, cell.col);
    }
    std::vector<Pose> out;
    for (int r = -min_r; r + max_r < w.rows(); ++r)
        for (int col = -min_c; col + max_c < w.cols(); ++col)
            if (satisfies(w, c, {r, col})) out.push_back({r, col});
    return out;
}

struct PoseVerdict {
    Pose pose;
    bool stable = false;
};

struct Plan {
    PlanMode mode = PlanMode::whole;
    std::optional<Pose> pose;
    bool stable = false;
    std::vector<PoseVerdict> census;
    std::vector<ScriptEntry> script;

    std::size_t candidate_count() const { return census.size(); }

    std::size_t stable_count() const {
        std::size_t n = 0;
        for (const auto& v : census) n += v.stable;
        return n;
    }

    std::string str() const {
        std::ostringstream out;
        out << "mode " << to_string(mode) << "\n";
        out << "candidates " << census.size() << "\nstable " << stable_count() << "\n";
        if (pose) out << "pose " << pose->row << "," << pose->col << "\n";
        out << "verified " << (stable ? "true" : "false") << "\n";
        for (const auto& v : census)
            out << "  " << v.pose.row << "," << v.pose.col << " " << (v.stable ? "stable" : "unstable") << "\n";
        for (const auto& e : script) out << "script " << e.str() << "\n";
        return out.str();
    }
};

/// The world with `id` placed at `pose` and no pending script.
inline World with_pose(const World& w, const std::string& id, Pose pose) {
    World sim = w;
    sim.script().clear();
    sim.set_held(id, false);
    sim.place(id, pose);
    return sim;
}

/// Plans a placement of `object` onto `target`. Part mode restricts contact to the
/// detected functional part, so `registry` needs a model for the pair's concept.
inline Plan plan_support(const World& w, const std::string& object, const std::string& target, PlanMode mode,
                         const DetectorRegistry& registry = {}, int horizon = 20) {
    const auto& body = w.body(object);
    const auto& tgt = w.body(target);
    if (object == target) throw Error("an object cannot support itself");
    PlacementConstraint c = whole_constraint(w, object, target);
    if (mode == PlanMode::part) {
        const DetectorModel* model = nullptr;
        for (const auto& [name, m] : registry.models()) {
            const auto& def = registry.concepts().at(name);
            if (def.host_class == body.spec.class_name && def.partner_class == tgt.spec.class_name) model = &m;
        }
        if (!model)
            throw Error("part mode needs a trained detector for " + body.spec.class_name + " on " + tgt.spec.class_name);
        CellSet focus;
        for (const auto& cell : detect(*model, body.occupied())) focus.insert(cell - body.pose);
        if (focus.empty()) throw Error("detector found no part on '" + object + "'");
        c.focus = std::move(focus);
    }
    Plan plan;
    plan.mode = mode;
    for (const auto& p : candidate_poses(w, c))
        plan.census.push_back({p, is_settled(with_pose(w, object, p), object, horizon)});
    if (plan.census.empty()) throw Error("no candidate pose puts '" + object + "' on '" + target + "'");
    for (const auto& v : plan.census)
        if (v.stable) {
            plan.pose = v.pose;
            plan.stable = true;
            break;
        }
    if (!plan.pose) plan.pose = plan.census.front().pose;
    plan.script.push_back({w.tick(), object, std::nullopt, plan.pose, false});
    return plan;
}

namespace detail {

inline std::pair<int, int> column_span(const CellSet& cells) {
    int lo = 1 << 30, hi = -(1 << 30);
    for (const auto& c : cells) {
        lo = std::min(lo, c.col);
        hi = std::max(hi, c.col);
    }
    return {lo, hi};
}

inline bool touching(const World& w, const std::string& a, const std::string& b) {
    return !adjacent_pairs(w.body(a).occupied(), w.body(b).occupied()).empty();
}

}  // namespace detail

/// Plans taking `object` off whatever the store believes supports it: lift while holding
/// until contact breaks, then, unless the supporter spans the grid, carry it sideways
/// clear of the supporter's columns and let go.
inline Plan plan_unsupport(const World& w, const BeliefStore& store, const std::string& object, int horizon = 20) {
    w.body(object);
    std::optional<std::string> supper;
    for (const auto& d : support_descriptions(store))
        if (d.suppee == object) {
            supper = d.supper;
            break;
        }
    if (!supper) throw Error("no believed support of '" + object + "' to remove");
    w.body(*supper);

    Plan plan;
    plan.mode = PlanMode::whole;
    World sim = w;
    sim.script().clear();
    int t = w.tick();
    auto run = [&](ScriptEntry e) {
        plan.script.push_back(e);
        sim.script() = {e};
        sim = step(std::move(sim));
        if (!sim.events().empty()) throw Error("cannot remove support: " + sim.events().front());
    };
    while (detail::touching(sim, object, *supper)) run({t++, object, Direction::up, std::nullopt, true});

    const auto [slo, shi] = detail::column_span(sim.body(*supper).occupied());
    if (!(slo == 0 && shi == sim.cols() - 1)) {
        const auto [olo, ohi] = detail::column_span(sim.body(object).occupied());
        std::optional<Pose> dest;
        for (int d = 1; d < sim.cols() && !dest; ++d)
            for (int sign : {1, -1}) {
                Pose p{sim.body(object).pose.row, sim.body(object).pose.col + sign * d};
                if (olo + sign * d > shi + 1 || ohi + sign * d < slo - 1) {
                    if (sim.can_place(object, p)) {
                        dest = p;
                        break;
                    }
                }
            }
        if (!dest) throw Error("no free pose clear of '" + *supper + "'");
        run({t++, object, std::nullopt, dest, true});
        run({t++, object, std::nullopt, std::nullopt, false});
    }
    sim.script().clear();
    for (int i = 0; i < horizon; ++i) sim = step(std::move(sim));
    plan.pose = sim.body(object).pose;
    plan.stable = !detail::touching(sim, object, *supper);
    plan.census.push_back({*plan.pose, plan.stable});
    return plan;
}

}  // namespace schemata
