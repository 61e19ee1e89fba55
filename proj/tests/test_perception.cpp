#include <gtest/gtest.h>

#include <random>

#include "schemata/perception.hpp"

using namespace schemata;

namespace {

const std::string kAssets = SCHEMATA_ASSET_DIR;

World with_floor(int rows, int cols) {
    World w(rows, cols);
    CellSet floor;
    for (int c = 0; c < cols; ++c) floor.insert({0, c});
    w.add_object({"floor", "Floor", floor, true}, {rows - 1, 0});
    return w;
}

std::pair<Frame, Frame> advance(World& w) {
    auto prev = render(w);
    w = step(std::move(w));
    return {prev, render(w)};
}

/// Chebyshev dilation straight from its definition: every grid cell within rho of a seed.
CellSet dilate(const Frame& f, const CellSet& seeds, int rho) {
    CellSet out;
    for (int r = 0; r < f.rows; ++r)
        for (int c = 0; c < f.cols; ++c)
            for (const auto& s : seeds)
                if (std::max(std::abs(s.row - r), std::abs(s.col - c)) <= rho) out.insert({r, c});
    return out;
}

}  // namespace

TEST(Perception, NoQueriesNoPercepts) {
    auto sc = load_scenario_file(kAssets + "/scenarios/mug_on_hook.json");
    auto [prev, curr] = advance(sc.world);
    EXPECT_TRUE(perceive(prev, curr, {}).empty());
    Perception p;
    EXPECT_TRUE(p.perceive(prev, curr).empty());
}

TEST(Perception, FallingObjectMovesDownAndApproachesTheFloor) {
    auto w = with_floor(8, 6);
    w.add_object({"a", "Block", {{0, 0}}, false}, {2, 2});
    auto [prev, curr] = advance(w);
    auto rep = perceive(prev, curr, {relative_movement("a", "floor")});
    EXPECT_EQ(rep.tick, 1);
    EXPECT_TRUE(rep.has(Polarity::pos, "movDir", "a", "down"));
    EXPECT_TRUE(rep.has(Polarity::pos, "approaches", "a", "floor"));
    EXPECT_FALSE(rep.has(Polarity::pos, "stillness", "a", "floor"));
    EXPECT_EQ(rep.triples.size(), 2u);
    for (const auto& t : rep.triples) EXPECT_EQ(t.provenance.source, Provenance::Source::perceived);
}

TEST(Perception, StillnessAndLateralMotion) {
    auto w = with_floor(6, 8);
    w.add_object({"a", "Block", {{0, 0}}, false}, {4, 1});
    w.add_object({"b", "Block", {{0, 0}}, false}, {4, 5});
    w.script().push_back({1, "a", Direction::right, std::nullopt, std::nullopt});
    auto [p0, c0] = advance(w);
    auto still = perceive(p0, c0, {relative_movement("a")});
    EXPECT_TRUE(still.has(Polarity::pos, "stillness", "a", "b"));
    EXPECT_TRUE(still.has(Polarity::pos, "stillness", "a", "floor"));
    auto [p1, c1] = advance(w);
    auto moved = perceive(p1, c1, {relative_movement("a")});
    EXPECT_TRUE(moved.has(Polarity::pos, "movDir", "a", "right"));
    EXPECT_TRUE(moved.has(Polarity::pos, "approaches", "a", "b"));
    EXPECT_FALSE(moved.has(Polarity::pos, "approaches", "a", "floor"));
    EXPECT_FALSE(moved.has(Polarity::pos, "departs", "a", "floor"));
    EXPECT_FALSE(moved.has(Polarity::pos, "stillness", "a", "floor"));
}

TEST(Perception, HangingMugTouchesTheHookFromBelow) {
    auto sc = load_scenario_file(kAssets + "/scenarios/mug_on_hook.json");
    for (int i = 0; i < 4; ++i) sc.world = step(std::move(sc.world));
    auto [prev, curr] = advance(sc.world);
    auto rep = perceive(prev, curr, {contact_query("mug1"), relative_movement("mug1", "floor")});
    EXPECT_TRUE(rep.has(Polarity::pos, "contacts", "mug1", "hook1"));
    EXPECT_TRUE(rep.has(Polarity::neg, "contacts", "mug1", "floor"));
    EXPECT_TRUE(rep.has(Polarity::pos, "below", "hook1", "mug1"));
    EXPECT_TRUE(rep.has(Polarity::pos, "stillness", "mug1", "floor"));
    ASSERT_TRUE(rep.contact_masks.count({"mug1", "hook1"}));
    EXPECT_FALSE(rep.contact_masks.count({"mug1", "floor"}));
    const auto& mask = rep.contact_masks.at({"mug1", "hook1"});
    EXPECT_TRUE(intersect(mask, sc.annotated("mug1", "handle_contact")) == sc.annotated("mug1", "handle_contact"));
}

TEST(Perception, ContactMaskIsTheDilatedSeam) {
    auto w = with_floor(8, 8);
    w.add_object({"a", "Block", {{0, 0}}, true}, {3, 3});
    w.add_object({"b", "Block", {{0, 0}}, true}, {3, 4});
    auto f = render(w);
    auto m = contact_mask(f, "a", "b", 1);
    EXPECT_EQ(m, dilate(f, {{3, 3}, {3, 4}}, 1));
    EXPECT_EQ(m.size(), 12u);
    EXPECT_EQ(contact_mask(f, "a", "b", 0), (CellSet{{3, 3}, {3, 4}}));
    EXPECT_EQ(contact_mask(f, "a", "b", 2).size(), 30u);
    EXPECT_TRUE(contact_mask(f, "a", "floor", 1).empty());
    EXPECT_EQ(contact_mask(f, "b", "a", 1), m);

    w.place("a", {6, 0});
    auto g = render(w);
    auto corner = contact_mask(g, "a", "floor", 1);
    EXPECT_EQ(corner, dilate(g, {{6, 0}, {7, 0}}, 1));
    for (const auto& c : corner) EXPECT_TRUE(g.in_bounds(c));
}

TEST(Perception, RejectsBadInputs) {
    auto w = with_floor(6, 4);
    w.add_object({"a", "Block", {{0, 0}}, false}, {1, 1});
    auto f0 = render(w);
    w = step(std::move(w));
    w = step(std::move(w));
    auto f2 = render(w);
    EXPECT_THROW(perceive(f0, f2, {contact_query("a")}), Error);
    auto [prev, curr] = advance(w);
    EXPECT_THROW(perceive(prev, curr, {contact_query("ghost")}), Error);
    EXPECT_THROW(perceive(prev, curr, {contact_query("a", "ghost")}), Error);
}

TEST(Perception, SubmittedQueriesReplaceThePendingSet) {
    auto w = with_floor(6, 4);
    w.add_object({"a", "Block", {{0, 0}}, false}, {1, 1});
    auto [prev, curr] = advance(w);
    Perception p;
    p.submit_queries({contact_query("a"), relative_movement("a")});
    EXPECT_EQ(p.pending().size(), 2u);
    p.submit_queries({relative_movement("a", "floor")});
    auto rep = p.perceive(prev, curr);
    for (const auto& t : rep.triples) EXPECT_NE(t.predicate, "contacts");
    EXPECT_TRUE(rep.has(Polarity::pos, "movDir", "a", "down"));
    p.submit_queries({});
    EXPECT_TRUE(p.perceive(prev, curr).empty());
}

TEST(Perception, ReportsAreTaskSpecificAndSymmetric) {
    std::mt19937 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        auto w = with_floor(10, 10);
        int placed = 0;
        for (int k = 0; k < 8 && placed < 4; ++k) {
            ObjectSpec spec{"o" + std::to_string(placed), "Block", {{0, 0}, {0, 1}}, false};
            if (rng() % 2) spec.cells = {{0, 0}, {1, 0}};
            Pose pose{static_cast<int>(rng() % 8), static_cast<int>(rng() % 8)};
            if (w.blocked(spec.id, spec.cells, pose)) continue;
            w.add_object(spec, pose);
            ++placed;
        }
        auto [prev, curr] = advance(w);
        std::vector<std::string> ids;
        for (const auto& [id, m] : curr.masks) ids.push_back(id);
        for (const auto& s : ids) {
            auto rep = perceive(prev, curr, {contact_query(s), relative_movement(s)});
            for (const auto& t : rep.triples) {
                if (t.predicate == "below") EXPECT_TRUE(t.subject == s || t.object == s) << t.statement();
                else EXPECT_EQ(t.subject, s) << t.statement();
            }
            for (const auto& o : ids) {
                if (o == s) continue;
                auto back = perceive(prev, curr, {contact_query(o, s)});
                EXPECT_EQ(rep.has(Polarity::pos, "contacts", s, o), back.has(Polarity::pos, "contacts", o, s));
                EXPECT_EQ(rep.has(Polarity::pos, "below", s, o), back.has(Polarity::pos, "below", s, o));
                if (rep.contact_masks.count({s, o})) {
                    EXPECT_EQ(rep.contact_masks.at({s, o}), back.contact_masks.at({o, s}));
                }
            }
            auto only_move = perceive(prev, curr, {relative_movement(s)});
            for (const auto& t : only_move.triples) EXPECT_NE(t.predicate, "contacts");
            EXPECT_TRUE(only_move.contact_masks.empty());
        }
    }
}

TEST(Perception, DumpListsTriplesAndMasks) {
    auto w = with_floor(4, 3);
    w.add_object({"b", "Block", {{0, 0}}, false}, {2, 1});
    auto [prev, curr] = advance(w);
    auto dump = perceive(prev, curr, {contact_query("b", "floor")}).dump();
    EXPECT_EQ(dump.rfind("tick 1\n", 0), 0u);
    EXPECT_NE(dump.find("pos contacts b floor"), std::string::npos);
    EXPECT_NE(dump.find("pos below floor b"), std::string::npos);
    EXPECT_NE(dump.find("contact-mask b floor "), std::string::npos);
}

TEST(Perception, PerceptsAreMutuallyConsistent) {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 40; ++trial) {
        auto w = with_floor(10, 10);
        for (int k = 0, placed = 0; k < 10 && placed < 4; ++k) {
            ObjectSpec spec{"o" + std::to_string(placed), "Block", {{0, 0}, {0, 1}, {1, 0}}, rng() % 4 == 0};
            Pose pose{static_cast<int>(rng() % 8), static_cast<int>(rng() % 8)};
            if (w.blocked(spec.id, spec.cells, pose)) continue;
            w.add_object(spec, pose);
            ++placed;
        }
        for (int t = 0, n = static_cast<int>(rng() % 4); t < n; ++t) w = step(std::move(w));
        auto [prev, curr] = advance(w);
        for (const auto& [s, m] : curr.masks) {
            auto rep = perceive(prev, curr, {contact_query(s), relative_movement(s)});
            for (const auto& [o, om] : curr.masks) {
                if (o == s) continue;
                EXPECT_NE(rep.has(Polarity::pos, "contacts", s, o), rep.has(Polarity::neg, "contacts", s, o));
                EXPECT_FALSE(rep.has(Polarity::pos, "below", s, o) && rep.has(Polarity::pos, "below", o, s));
                if (!rep.has(Polarity::pos, "stillness", s, o)) continue;
                for (const auto* d : {"up", "down", "left", "right"}) EXPECT_FALSE(rep.has(Polarity::pos, "movDir", s, d));
            }
        }
    }
}
