#include <gtest/gtest.h>

#include <random>

#include "schemata/microworld.hpp"

using namespace schemata;

namespace {

const std::string kAssets = SCHEMATA_ASSET_DIR;

CellSet row_of(int n) {
    CellSet out;
    for (int c = 0; c < n; ++c) out.insert({0, c});
    return out;
}

World with_floor(int rows, int cols) {
    World w(rows, cols);
    w.add_object({"floor", "Floor", row_of(cols), true}, {rows - 1, 0});
    return w;
}

World run(World w, int n) {
    for (int i = 0; i < n; ++i) w = step(std::move(w));
    return w;
}

std::string scenario_with(const std::string& objects) {
    return R"({"grid": [6, 4], "objects": [{"id": "floor", "class": "Floor", "fixed": true, "pose": [5, 0],
               "cells": [[0,0],[0,1],[0,2],[0,3]]})" +
           objects + "]}";
}

}  // namespace

TEST(Microworld, ShippedScenariosLoad) {
    for (const auto* name : {"mug_on_hook", "mug_on_floor", "block_stack", "rehang"}) {
        auto s = load_scenario_file(kAssets + "/scenarios/" + name + ".json");
        EXPECT_NO_THROW(s.world.validate()) << name;
        EXPECT_TRUE(s.world.has("floor"));
    }
    auto mug = load_scenario_file(kAssets + "/scenarios/mug_on_hook.json");
    EXPECT_FALSE(enclosed_holes(mug.world.body("mug1").spec.cells).empty());
    EXPECT_EQ(mug.standing_queries.size(), 2u);
    EXPECT_EQ(mug.annotated("mug1", "handle_contact").size(), 3u);
    EXPECT_THROW(mug.annotated("mug1", "rim"), Error);
    EXPECT_EQ(load_scenario_file(kAssets + "/scenarios/rehang.json").goals.size(), 2u);
}

TEST(Microworld, RejectsMalformedScenarios) {
    EXPECT_THROW(load_scenario("{not json"), Error);
    EXPECT_THROW(load_scenario(R"({"grid": [6, 4], "objects": []})"), Error);
    EXPECT_THROW(load_scenario(scenario_with(R"(, {"id": "a", "class": "Block", "pose": [4, 0], "cells": [[0,0],[1,0]]})")),
                 Error);
    EXPECT_THROW(load_scenario(scenario_with(R"(, {"id": "a", "class": "Block", "pose": [1, 0], "cells": [[0,0],[0,2]]})")),
                 Error);
    EXPECT_THROW(load_scenario(scenario_with(R"(, {"id": "m", "class": "Mug", "pose": [1, 0], "cells": [[0,0],[0,1]]})")),
                 Error);
    EXPECT_THROW(load_scenario(scenario_with(R"(, {"id": "a", "class": "Block", "pose": [1, 3], "cells": [[0,0],[0,1]]})")),
                 Error);
    EXPECT_THROW(load_scenario(scenario_with(R"(, {"id": "a", "class": "Block", "cells": [[0,0]]})")), Error);
    EXPECT_THROW(load_scenario(scenario_with(R"(], "goals": [{"kind": "levitate", "object": "floor"}]})")), Error);
    EXPECT_THROW(load_scenario(R"({"grid": [6, 4], "objects": [{"id": "floor", "class": "Floor", "fixed": true,
                                   "pose": [5, 0], "cells": [[0,0],[0,1]]}]})"),
                 Error);
    EXPECT_NO_THROW(load_scenario(scenario_with(R"(, {"id": "a", "class": "Block", "pose": [1, 1], "cells": [[0,0]]})")));
}

TEST(Microworld, UnsupportedObjectsFallOneRowPerTick) {
    auto w = with_floor(8, 6);
    w.add_object({"a", "Block", {{0, 0}}, false}, {2, 2});
    for (int t = 1; t <= 4; ++t) {
        w = step(std::move(w));
        EXPECT_EQ(w.body("a").pose, (Pose{2 + t, 2}));
        EXPECT_EQ(w.tick(), t);
    }
    EXPECT_TRUE(is_settled(w, "a", 20));
    EXPECT_TRUE(is_settled(with_floor(8, 6), "floor", 1));
}

TEST(Microworld, StacksFallTogetherBottomFirst) {
    auto w = with_floor(8, 4);
    w.add_object({"low", "Block", {{0, 0}}, false}, {4, 1});
    w.add_object({"high", "Block", {{0, 0}}, false}, {3, 1});
    w = step(std::move(w));
    EXPECT_EQ(w.body("low").pose, (Pose{5, 1}));
    EXPECT_EQ(w.body("high").pose, (Pose{4, 1}));
    w = run(std::move(w), 3);
    EXPECT_EQ(w.body("low").pose, (Pose{6, 1}));
    EXPECT_EQ(w.body("high").pose, (Pose{5, 1}));
}

TEST(Microworld, OverhangingBarsTipTowardTheirCentreOfMass) {
    auto w = with_floor(6, 6);
    w.add_object({"post", "Block", {{0, 0}, {1, 0}}, true}, {3, 1});
    w.add_object({"bar", "Block", row_of(3), false}, {2, 1});
    w = step(std::move(w));
    EXPECT_EQ(w.body("bar").pose, (Pose{2, 2}));
    w = step(std::move(w));
    EXPECT_EQ(w.body("bar").pose, (Pose{3, 2}));

    auto balanced = with_floor(6, 6);
    balanced.add_object({"post", "Block", {{0, 0}, {1, 0}}, true}, {3, 2});
    balanced.add_object({"bar", "Block", row_of(3), false}, {2, 1});
    EXPECT_TRUE(is_settled(balanced, "bar", 20));
}

TEST(Microworld, HangingFromAboveTheCentreOfMassIsStable) {
    auto w = with_floor(8, 6);
    w.add_object({"peg", "Hook", {{0, 0}}, true}, {2, 2});
    // An upside-down U whose crossbar rests on the peg, legs dangling on both sides.
    CellSet hanger{{0, 0}, {0, 1}, {0, 2}, {1, 0}, {2, 0}, {1, 2}, {2, 2}};
    w.add_object({"hanger", "Block", hanger, false}, {1, 1});
    EXPECT_TRUE(is_settled(w, "hanger", 20));

    auto mug = load_scenario_file(kAssets + "/scenarios/mug_on_hook.json").world;
    mug = run(std::move(mug), 5);
    EXPECT_EQ(mug.body("mug1").pose, (Pose{6, 4}));
    EXPECT_TRUE(is_settled(mug, "mug1", 20));
}

TEST(Microworld, ScriptedMovesPlacementAndHolding) {
    auto w = with_floor(8, 6);
    w.add_object({"a", "Block", {{0, 0}}, false}, {6, 1});
    w.add_object({"b", "Block", {{0, 0}}, false}, {6, 3});
    w.add_object({"post", "Block", {{0, 0}}, true}, {6, 5});
    w.script().push_back({0, "a", Direction::right, std::nullopt, std::nullopt});
    w.script().push_back({1, "a", Direction::right, std::nullopt, std::nullopt});
    w.script().push_back({1, "post", Direction::left, std::nullopt, std::nullopt});
    w.script().push_back({2, "b", std::nullopt, Pose{2, 0}, true});
    w.script().push_back({5, "b", std::nullopt, std::nullopt, false});
    w.script().push_back({6, "ghost", Direction::up, std::nullopt, std::nullopt});

    w = step(std::move(w));
    EXPECT_EQ(w.body("a").pose, (Pose{6, 2}));
    EXPECT_TRUE(w.events().empty());
    w = step(std::move(w));
    EXPECT_EQ(w.body("a").pose, (Pose{6, 2}));
    ASSERT_EQ(w.events().size(), 2u);
    EXPECT_NE(w.events()[0].find("blocked"), std::string::npos);
    EXPECT_NE(w.events()[1].find("fixed"), std::string::npos);
    EXPECT_EQ(w.body("post").pose, (Pose{6, 5}));

    w = run(std::move(w), 3);
    EXPECT_EQ(w.body("b").pose, (Pose{2, 0}));
    EXPECT_TRUE(w.body("b").held);
    w = run(std::move(w), 1);
    EXPECT_FALSE(w.body("b").held);
    EXPECT_EQ(w.body("b").pose, (Pose{3, 0}));
    w = step(std::move(w));
    EXPECT_NE(w.events().at(0).find("ghost"), std::string::npos);
}

TEST(Microworld, PlacementChecksBoundsAndOverlap) {
    auto w = with_floor(6, 4);
    w.add_object({"a", "Block", {{0, 0}, {0, 1}}, false}, {4, 0});
    EXPECT_TRUE(w.can_place("a", {1, 2}));
    EXPECT_FALSE(w.can_place("a", {1, 3}));
    EXPECT_FALSE(w.can_place("a", {5, 0}));
    EXPECT_THROW(w.place("a", {5, 0}), Error);
    EXPECT_THROW(w.add_object({"b", "Block", {{0, 0}}, false}, {4, 1}), Error);
    EXPECT_THROW(w.add_object({"a", "Block", {{0, 0}}, false}, {1, 1}), Error);
    EXPECT_THROW(w.body("nope"), Error);
    EXPECT_THROW(World(1, 5), Error);
    EXPECT_THROW(is_settled(w, "a", 0), Error);
}

TEST(Microworld, RenderProducesLabelsMasksAndAscii) {
    auto w = with_floor(4, 3);
    w.add_object({"box", "Block", {{0, 0}}, false}, {2, 1});
    auto f = render(w);
    EXPECT_EQ(f.ascii(), "...\n...\n.b.\nfff\n");
    EXPECT_EQ(f.label({2, 1}), "box");
    EXPECT_EQ(f.mask("box"), (CellSet{{2, 1}}));
    EXPECT_EQ(f.classes.at("floor"), "Floor");
    EXPECT_THROW(f.mask("cup"), Error);
}

TEST(Microworld, StepIsDeterministic) {
    auto a = load_scenario_file(kAssets + "/scenarios/block_stack.json").world;
    auto b = a;
    for (int i = 0; i < 20; ++i) {
        a = step(std::move(a));
        b = step(std::move(b));
        ASSERT_EQ(a, b);
        EXPECT_EQ(render(a), render(b));
    }
}

namespace {

World random_world(std::mt19937& rng) {
    auto w = with_floor(10, 8);
    const std::vector<CellSet> shapes = {{{0, 0}}, {{0, 0}, {0, 1}}, {{0, 0}, {1, 0}}, {{0, 0}, {0, 1}, {0, 2}},
                                         {{0, 0}, {1, 0}, {1, 1}}, {{0, 0}, {0, 1}, {0, 2}, {1, 0}, {1, 2}}};
    for (int k = 0, placed = 0; k < 12 && placed < 5; ++k) {
        ObjectSpec spec{"o" + std::to_string(placed), "Block", shapes[rng() % shapes.size()], rng() % 5 == 0};
        Pose p{static_cast<int>(rng() % 9), static_cast<int>(rng() % 7)};
        if (w.blocked(spec.id, spec.cells, p)) continue;
        w.add_object(spec, p);
        ++placed;
    }
    return w;
}

}  // namespace

TEST(Microworld, StepKeepsObjectsApartAndNeverLiftsThem) {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        auto w = random_world(rng);
        for (int t = 0; t < 15; ++t) {
            auto next = step(w);
            EXPECT_NO_THROW(next.validate());
            for (const auto& [id, b] : next.bodies()) {
                EXPECT_GE(b.pose.row, w.body(id).pose.row) << id;
                if (b.spec.fixed) {
                    EXPECT_EQ(b.pose, w.body(id).pose);
                }
            }
            w = std::move(next);
        }
    }
}

TEST(Microworld, OneStepRestIsAbsorbing) {
    std::mt19937 rng(37);
    int resting = 0;
    for (int trial = 0; trial < 60; ++trial) {
        auto w = random_world(rng);
        for (int t = 0; t < 6; ++t) w = step(std::move(w));
        for (const auto& [id, b] : w.bodies()) {
            if (!is_settled(w, id, 1)) continue;
            ++resting;
            EXPECT_TRUE(is_settled(w, id, 20)) << id;
        }
    }
    EXPECT_GT(resting, 0);
}
