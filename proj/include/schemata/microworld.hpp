#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "schemata/belief_store.hpp"
#include "schemata/geometry.hpp"
#include "schemata/query.hpp"

namespace schemata {

enum class Direction { up, down, left, right };

inline std::string_view to_string(Direction d) {
    switch (d) {
        case Direction::up: return "up";
        case Direction::down: return "down";
        case Direction::left: return "left";
        case Direction::right: return "right";
    }
    return "up";
}

inline Direction parse_direction(std::string_view s) {
    if (s == "up") return Direction::up;
    if (s == "down") return Direction::down;
    if (s == "left") return Direction::left;
    if (s == "right") return Direction::right;
    throw Error("unknown direction '" + std::string(s) + "'");
}

inline Pose offset(Direction d) {
    switch (d) {
        case Direction::up: return {-1, 0};
        case Direction::down: return {1, 0};
        case Direction::left: return {0, -1};
        case Direction::right: return {0, 1};
    }
    return {};
}

struct ObjectSpec {
    std::string id;
    std::string class_name;
    CellSet cells;  ///< local frame
    bool fixed = false;
};

struct Body {
    ObjectSpec spec;
    Pose pose;
    bool held = false;

    CellSet occupied() const { return translate(spec.cells, pose); }
};

/// One scripted action: a unit move, or a pick-and-place to an absolute pose.
struct ScriptEntry {
    int tick = 0;
    std::string object;
    std::optional<Direction> move;
    std::optional<Pose> place;
    std::optional<bool> hold;

    std::string str() const {
        std::string s = "t" + std::to_string(tick) + " " + object;
        if (move) s += " move " + std::string(to_string(*move));
        if (place) s += " place " + std::to_string(place->row) + "," + std::to_string(place->col);
        if (hold) s += *hold ? " hold" : " release";
        return s;
    }
};

/// Snapshot of the world as perception sees it: a label grid plus ground-truth masks.
struct Frame {
    int tick = 0;
    int rows = 0;
    int cols = 0;
    std::vector<std::string> labels;  ///< row-major, "" for empty
    std::map<std::string, CellSet> masks;
    std::map<std::string, std::string> classes;

    bool operator==(const Frame&) const = default;

    bool in_bounds(Cell c) const { return c.row >= 0 && c.row < rows && c.col >= 0 && c.col < cols; }
    const std::string& label(Cell c) const { return labels[c.row * cols + c.col]; }

    const CellSet& mask(const std::string& id) const {
        auto it = masks.find(id);
        if (it == masks.end()) throw Error("unknown object '" + id + "' in frame " + std::to_string(tick));
        return it->second;
    }

    /// One character per cell: '.' for empty, otherwise the first letter of the object's id.
    std::string ascii() const {
        std::string out;
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                const auto& l = label({r, c});
                out += l.empty() ? '.' : l.front();
            }
            out += '\n';
        }
        return out;
    }
};

class World {
public:
    World() = default;
    World(int rows, int cols) : rows_(rows), cols_(cols) {
        if (rows <= 1 || cols <= 0) throw Error("grid must have at least 2 rows and 1 column");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int tick() const { return tick_; }
    void set_tick(int t) { tick_ = t; }

    bool in_bounds(Cell c) const { return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_; }

    const std::map<std::string, Body>& bodies() const { return bodies_; }
    bool has(const std::string& id) const { return bodies_.count(id) > 0; }

    const Body& body(const std::string& id) const {
        auto it = bodies_.find(id);
        if (it == bodies_.end()) throw Error("unknown object '" + id + "'");
        return it->second;
    }

    void add_object(ObjectSpec spec, Pose pose) {
        if (spec.cells.empty()) throw Error("object '" + spec.id + "' has no cells");
        if (!is_4_connected(spec.cells)) throw Error("object '" + spec.id + "' is not 4-connected");
        if (bodies_.count(spec.id)) throw Error("duplicate object id '" + spec.id + "'");
        Body b{std::move(spec), pose, false};
        const auto id = b.spec.id;
        if (auto why = blocked(b.spec.id, b.spec.cells, pose)) throw Error("cannot add '" + id + "': " + *why);
        bodies_.emplace(id, std::move(b));
    }

    /// Reason a body's cells cannot sit at `pose`, or nullopt if they can.
    std::optional<std::string> blocked(const std::string& id, const CellSet& local, Pose pose) const {
        for (const auto& c : local) {
            auto w = c + pose;
            if (!in_bounds(w)) return "out of bounds";
            for (const auto& [other_id, other] : bodies_) {
                if (other_id == id) continue;
                if (other.occupied().count(w)) return "overlaps '" + other_id + "'";
            }
        }
        return std::nullopt;
    }

    bool can_place(const std::string& id, Pose pose) const { return !blocked(id, body(id).spec.cells, pose); }

    void place(const std::string& id, Pose pose) {
        if (auto why = blocked(id, body(id).spec.cells, pose)) throw Error("cannot place '" + id + "': " + *why);
        bodies_.at(id).pose = pose;
    }

    void set_held(const std::string& id, bool held) {
        body(id);
        bodies_.at(id).held = held;
    }

    std::vector<ScriptEntry>& script() { return script_; }
    const std::vector<ScriptEntry>& script() const { return script_; }

    /// Messages from the most recent step (blocked moves and the like).
    const std::vector<std::string>& events() const { return events_; }

    /// Floor present, fixed and covering the bottom row; no overlaps.
    void validate() const {
        auto it = bodies_.find("floor");
        if (it == bodies_.end()) throw Error("scenario has no 'floor' object");
        if (!it->second.spec.fixed) throw Error("floor must be fixed");
        auto floor = it->second.occupied();
        for (int c = 0; c < cols_; ++c)
            if (!floor.count({rows_ - 1, c})) throw Error("floor must occupy the whole bottom row");
        std::map<Cell, std::string> seen;
        for (const auto& [id, b] : bodies_)
            for (const auto& c : b.occupied()) {
                if (!in_bounds(c)) throw Error("object '" + id + "' is out of bounds");
                auto [pos_it, inserted] = seen.emplace(c, id);
                if (!inserted) throw Error("objects '" + pos_it->second + "' and '" + id + "' overlap");
            }
    }

    bool operator==(const World& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_ || tick_ != o.tick_ || bodies_.size() != o.bodies_.size()) return false;
        for (const auto& [id, b] : bodies_) {
            auto it = o.bodies_.find(id);
            if (it == o.bodies_.end() || it->second.pose != b.pose || it->second.held != b.held ||
                it->second.spec.cells != b.spec.cells)
                return false;
        }
        return true;
    }

private:
    friend World step(World world);

    int rows_ = 0;
    int cols_ = 0;
    int tick_ = 0;
    std::map<std::string, Body> bodies_;
    std::vector<ScriptEntry> script_;
    std::vector<std::string> events_;
};

namespace detail {

/// Support test for a resting object: hanging from a point above its centre of mass is
/// stable, otherwise the centre-of-mass column must lie within the supporting columns.
/// Returns the lateral shift (-1, 0, +1) the object would tip by, or nullopt if unsupported.
inline std::optional<int> support_shift(const World& w, const Body& b) {
    const auto cells = b.occupied();
    long n = 0, sum_row = 0, sum_col = 0;
    for (const auto& c : cells) {
        ++n;
        sum_row += c.row;
        sum_col += c.col;
    }
    std::vector<Cell> supports;
    for (const auto& c : cells) {
        Cell below{c.row + 1, c.col};
        if (cells.count(below) || !w.in_bounds(below)) continue;
        for (const auto& [id, other] : w.bodies())
            if (id != b.spec.id && other.occupied().count(below)) {
                supports.push_back(c);
                break;
            }
    }
    if (supports.empty()) return std::nullopt;
    for (const auto& s : supports)
        if (s.row * n < sum_row) return 0;  // hanging
    int lo = supports.front().col, hi = lo;
    for (const auto& s : supports) {
        lo = std::min(lo, s.col);
        hi = std::max(hi, s.col);
    }
    if (sum_col < lo * n) return -1;
    if (sum_col > hi * n) return 1;
    return 0;
}

}  // namespace detail

/// Advances the world by one tick: scripted actions, then gravity bottom-most first.
inline World step(World world) {
    world.events_.clear();
    for (const auto& entry : world.script_) {
        if (entry.tick != world.tick_) continue;
        if (!world.has(entry.object)) {
            world.events_.push_back("script refers to unknown object '" + entry.object + "'");
            continue;
        }
        auto& b = world.bodies_.at(entry.object);
        if (b.spec.fixed) {
            world.events_.push_back("rejected " + entry.str() + ": object is fixed");
            continue;
        }
        if (entry.hold) b.held = *entry.hold;
        std::optional<Pose> target;
        if (entry.move) target = Pose{b.pose.row + offset(*entry.move).row, b.pose.col + offset(*entry.move).col};
        if (entry.place) target = entry.place;
        if (!target) continue;
        if (auto why = world.blocked(entry.object, b.spec.cells, *target))
            world.events_.push_back("blocked " + entry.str() + ": " + *why);
        else
            b.pose = *target;
    }

    std::vector<std::string> order;
    for (const auto& [id, b] : world.bodies_)
        if (!b.spec.fixed && !b.held) order.push_back(id);
    auto bottom = [&](const std::string& id) {
        int r = -1;
        for (const auto& c : world.bodies_.at(id).occupied()) r = std::max(r, c.row);
        return r;
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](const auto& a, const auto& b) { return bottom(a) > bottom(b); });
    for (const auto& id : order) {
        auto& b = world.bodies_.at(id);
        auto shift = detail::support_shift(world, b);
        Pose target = b.pose;
        if (!shift) target.row += 1;
        else if (*shift != 0) target.col += *shift;
        else continue;
        if (!world.blocked(id, b.spec.cells, target)) b.pose = target;
    }
    ++world.tick_;
    return world;
}

inline Frame render(const World& w) {
    Frame f;
    f.tick = w.tick();
    f.rows = w.rows();
    f.cols = w.cols();
    f.labels.assign(static_cast<std::size_t>(w.rows() * w.cols()), "");
    for (const auto& [id, b] : w.bodies()) {
        auto cells = b.occupied();
        for (const auto& c : cells) f.labels[c.row * f.cols + c.col] = id;
        f.masks.emplace(id, std::move(cells));
        f.classes.emplace(id, b.spec.class_name);
    }
    return f;
}

/// True iff the object's pose is unchanged over k simulated steps of a copy.
inline bool is_settled(const World& w, const std::string& id, int k) {
    if (k < 1) throw Error("settling horizon must be at least 1");
    const Pose start = w.body(id).pose;
    World sim = w;
    for (int i = 0; i < k; ++i) {
        sim = step(std::move(sim));
        if (sim.body(id).pose != start) return false;
    }
    return true;
}

struct Goal {
    enum class Kind { support, unsupport };
    int tick = 0;
    Kind kind = Kind::support;
    std::string object;
    std::string target;
    std::string mode = "part";
};

struct Scenario {
    World world;
    std::vector<PerceptionQuery> standing_queries;
    /// object id -> region name -> cells in the object's local frame
    std::map<std::string, std::map<std::string, CellSet>> annotations;
    std::vector<Goal> goals;

    /// An annotated region in world coordinates at the object's current pose.
    CellSet annotated(const std::string& object, const std::string& region) const {
        auto it = annotations.find(object);
        if (it == annotations.end() || !it->second.count(region))
            throw Error("no annotation '" + region + "' for '" + object + "'");
        return translate(it->second.at(region), world.body(object).pose);
    }
};

namespace detail {

inline CellSet cells_from_json(const nlohmann::json& j) {
    CellSet out;
    for (const auto& c : j) {
        if (!c.is_array() || c.size() != 2) throw Error("cell must be [row, col]");
        out.insert({c[0].get<int>(), c[1].get<int>()});
    }
    return out;
}

}  // namespace detail

/// Parses and validates a JSON scenario.
inline Scenario load_scenario(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("scenario parse error: ") + e.what());
    }
    try {
        Scenario s;
        const auto& grid = j.at("grid");
        s.world = World(grid.at(0).get<int>(), grid.at(1).get<int>());
        for (const auto& o : j.at("objects")) {
            ObjectSpec spec;
            spec.id = o.at("id").get<std::string>();
            spec.class_name = o.at("class").get<std::string>();
            spec.cells = detail::cells_from_json(o.at("cells"));
            spec.fixed = o.value("fixed", false);
            const auto& p = o.at("pose");
            if (spec.class_name == "Mug" && enclosed_holes(spec.cells).empty())
                throw Error("mug '" + spec.id + "' needs a closed handle ring");
            s.world.add_object(std::move(spec), {p.at(0).get<int>(), p.at(1).get<int>()});
        }
        if (j.contains("script"))
            for (const auto& e : j.at("script")) {
                ScriptEntry entry;
                entry.tick = e.at("tick").get<int>();
                entry.object = e.at("object").get<std::string>();
                if (e.contains("move")) entry.move = parse_direction(e.at("move").get<std::string>());
                if (e.contains("place")) entry.place = Pose{e.at("place").at(0).get<int>(), e.at("place").at(1).get<int>()};
                if (e.contains("hold")) entry.hold = e.at("hold").get<bool>();
                s.world.script().push_back(entry);
            }
        if (j.contains("standing_queries"))
            for (const auto& q : j.at("standing_queries")) {
                PerceptionQuery pq;
                auto pred = q.at("predicate").get<std::string>();
                if (pred == "contact") pq.kind = PerceptionQuery::Kind::contact;
                else if (pred == "relativeMovement") pq.kind = PerceptionQuery::Kind::relative_movement;
                else throw Error("unknown standing query predicate '" + pred + "'");
                pq.subject = q.at("subject").get<std::string>();
                if (q.contains("object") && !q.at("object").is_null()) pq.object = q.at("object").get<std::string>();
                s.standing_queries.push_back(pq);
            }
        if (j.contains("annotations"))
            for (const auto& [obj, regions] : j.at("annotations").items())
                for (const auto& [name, cells] : regions.items())
                    s.annotations[obj][name] = detail::cells_from_json(cells);
        if (j.contains("goals"))
            for (const auto& g : j.at("goals")) {
                Goal goal;
                goal.tick = g.value("tick", 0);
                auto kind = g.at("kind").get<std::string>();
                if (kind == "support") goal.kind = Goal::Kind::support;
                else if (kind == "unsupport") goal.kind = Goal::Kind::unsupport;
                else throw Error("unknown goal kind '" + kind + "'");
                goal.object = g.at("object").get<std::string>();
                goal.target = g.value("target", "");
                goal.mode = g.value("mode", "part");
                s.goals.push_back(goal);
            }
        s.world.validate();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("scenario schema error: ") + e.what());
    }
}

inline Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open scenario '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_scenario(buf.str());
}

}  // namespace schemata
