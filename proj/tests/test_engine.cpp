#include <gtest/gtest.h>

#include <random>

#include "generators.hpp"
#include "oracles.hpp"
#include "schemata/engine.hpp"
#include "schemata/support_theory.hpp"

using namespace schemata;

namespace {

BeliefStore small(const std::string& facts) {
    BeliefStore s(gen::vocabulary());
    for (int i = 0; i < 5; ++i) s.register_entity("e" + std::to_string(i), EntityKind::object);
    s.load(facts);
    return s;
}

}  // namespace

TEST(Engine, TransitiveClosure) {
    auto s = small("pos p0 e0 e1\npos p0 e1 e2\npos p0 e2 e3\n");
    auto rules = parse_rules("rule t: p0(?x,?y), p0(?y,?z) => p0(?x,?z)");
    auto rep = run_to_fixpoint(s, rules, {});
    EXPECT_TRUE(rep.reached_fixpoint);
    EXPECT_EQ(rep.derived, 3);
    EXPECT_TRUE(s.contains(Polarity::pos, "p0", "e0", "e3"));
    EXPECT_EQ(s.find({"p0", "e0", "e3"})->provenance.source, Provenance::Source::inferred);
}

TEST(Engine, NegationOnlyWhereObserved) {
    auto rules = parse_rules("rule r: p0(?x,?y), not b0(?x,?y) => p1(?x,?y)");
    auto s = small("pos p0 e0 e1\npos p0 e2 e3\npos b0 e2 e3\n");
    run_to_fixpoint(s, rules, {});
    EXPECT_FALSE(s.contains(Polarity::pos, "p1", "e0", "e1")) << "unobserved predicate must block negation";

    NafScope whole;
    whole.add("b0");
    auto t = small("pos p0 e0 e1\npos p0 e2 e3\npos b0 e2 e3\n");
    run_to_fixpoint(t, rules, whole);
    EXPECT_TRUE(t.contains(Polarity::pos, "p1", "e0", "e1"));
    EXPECT_FALSE(t.contains(Polarity::pos, "p1", "e2", "e3"));

    NafScope partial;
    partial.add("b0", "e2");
    auto u = small("pos p0 e0 e1\npos p0 e2 e4\n");
    run_to_fixpoint(u, rules, partial);
    EXPECT_FALSE(u.contains(Polarity::pos, "p1", "e0", "e1"));
    EXPECT_TRUE(u.contains(Polarity::pos, "p1", "e2", "e4"));
}

TEST(Engine, RejectsUnstratifiedNegation) {
    auto rules = parse_rules("rule r: p0(?x,?y), not p1(?x,?y) => p1(?y,?x)");
    auto s = small("pos p0 e0 e1\n");
    EXPECT_THROW(run_to_fixpoint(s, rules, {}), Error);
    auto tagged = parse_rules("rule r: p0(?x,?y), not C1(?x) => new ?n: object [C1], p1(?n,?y)");
    EXPECT_THROW(run_to_fixpoint(s, tagged, {}), Error);
}

TEST(Engine, RejectsUnknownPredicates) {
    auto s = small("pos p0 e0 e1\n");
    EXPECT_THROW(run_to_fixpoint(s, parse_rules("rule r: p0(?x,?y) => hovers(?x,?y)"), {}), Error);
}

TEST(Engine, ConflictsAreReportedNotApplied) {
    auto s = small("pos p0 e0 e1\npos p1 e0 e1\n");
    auto rep = run_to_fixpoint(s, parse_rules("rule r: p0(?x,?y) => -p1(?x,?y), p2(?x,?y)"), {});
    ASSERT_EQ(rep.conflicts.size(), 1u);
    EXPECT_EQ(rep.conflicts[0].statement(), "neg p1 e0 e1");
    EXPECT_TRUE(s.contains(Polarity::pos, "p1", "e0", "e1"));
    EXPECT_TRUE(s.contains(Polarity::pos, "p2", "e0", "e1"));
}

TEST(Engine, OppositeDirectionBuiltin) {
    BeliefStore s;
    s.register_entity("mug1", EntityKind::object);
    s.register_entity("f1", EntityKind::force);
    s.assert_triple(pos("dir", "f1", "down"));
    s.assert_triple(pos("aff", "f1", "mug1"));
    run_to_fixpoint(s, parse_rules("rule r: dir(?f,?d), opp(?d,?e) => dir(?f,?e)"), {});
    EXPECT_TRUE(s.contains(Polarity::pos, "dir", "f1", "up"));
    EXPECT_EQ(opposite("left"), "right");
    EXPECT_FALSE(opposite("mug1").has_value());
}

TEST(Engine, ReificationDepthCapStopsSkolemChains) {
    BeliefStore s;
    s.register_entity("mug1", EntityKind::object);
    s.assert_triple(pos("isa", "mug1", "Obj"));
    auto rules = parse_rules(
        "rule a: Obj(?o) => new ?f: force [Frc], aff(?f,?o)\n"
        "rule b: aff(?f,?o) => new ?x: object [Obj], exrt(?x,?f)\n");
    auto rep = run_to_fixpoint(s, rules, {}, {2, 1000, 0});
    EXPECT_TRUE(rep.reached_fixpoint);
    for (const auto& [id, e] : s.entities()) EXPECT_LE(e.depth, 2) << id;
    auto again = run_to_fixpoint(s, rules, {}, {3, 1000, 0});
    bool deeper = false;
    for (const auto& [id, e] : s.entities()) deeper = deeper || e.depth == 3;
    EXPECT_TRUE(deeper);
    EXPECT_GT(again.derived, 0);
}

TEST(Engine, IterationCapThrows) {
    auto s = small("pos p0 e0 e1\npos p0 e1 e2\npos p0 e2 e3\npos p0 e3 e4\n");
    auto rules = parse_rules("rule t: p0(?x,?y), p0(?y,?z) => p0(?x,?z)");
    EXPECT_THROW(run_to_fixpoint(s, rules, {}, {2, 1, 0}), Error);
}

TEST(Engine, FiringsAreRecordedWithBindings) {
    auto s = small("pos p0 e0 e1\n");
    auto rep = run_to_fixpoint(s, parse_rules("rule r: p0(?x,?y) => p1(?y,?x)"), {});
    ASSERT_EQ(rep.firings.size(), 1u);
    EXPECT_EQ(rep.firings[0].rule, "r");
    EXPECT_EQ(rep.firings[0].binding, (Binding{{"x", "e0"}, {"y", "e1"}}));
}

TEST(Engine, ExplainBuildsTreeDownToInputs) {
    auto s = small("pos p0 e0 e1\npos p0 e1 e2\n");
    run_to_fixpoint(s, parse_rules("rule t: p0(?x,?y), p0(?y,?z) => p0(?x,?z)\nrule u: p0(?x,?y) => p1(?x,?y)"), {});
    auto tree = explain(s, pos("p1", "e0", "e2"));
    EXPECT_EQ(tree.rule, "u");
    EXPECT_EQ(tree.rule_nodes(), 2u);
    std::vector<Triple> leaves;
    tree.leaves(leaves);
    ASSERT_EQ(leaves.size(), 2u);
    for (const auto& l : leaves) EXPECT_EQ(l.provenance.source, Provenance::Source::asserted);
    EXPECT_THROW(explain(s, pos("p0", "e0", "e1")), Error);
    EXPECT_THROW(explain(s, pos("p2", "e0", "e1")), Error);
}

TEST(Engine, MatchConjunction) {
    auto s = small("pos p0 e0 e1\npos p0 e1 e2\npos p1 e1 e3\n");
    auto b = match_conjunction(s, {{"p0", Term::var("x"), Term::var("y")}, {"p1", Term::var("y"), Term::var("z")}});
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b[0].at("z"), "e3");
}

TEST(Engine, SemiNaiveMatchesNaiveOracle) {
    std::mt19937 rng(11);
    int productive = 0, minted = 0;
    for (int i = 0; i < 40; ++i) {
        auto prog = gen::random_program(rng);
        auto rules = parse_rules(prog.rules);
        NafScope scope;
        scope.add("b0");
        auto fast = small(prog.facts);
        auto slow = small(prog.facts);
        auto rep = run_to_fixpoint(fast, rules, scope);
        productive += rep.derived > 0;
        for (const auto& [id, e] : fast.entities()) minted += e.origin == Origin::reified;
        oracle::naive_saturate(slow, rules, scope);
        EXPECT_EQ(oracle::statements(fast), oracle::statements(slow)) << prog.rules << prog.facts;
        EXPECT_EQ(run_to_fixpoint(fast, rules, scope).derived, 0) << prog.rules;
    }
    EXPECT_GE(productive, 20);
    EXPECT_GT(minted, 0);
}

TEST(Engine, SupportTheoryMatchesNaiveOracle) {
    BeliefStore fast;
    fast.load(
        "pos isa mug1 Obj\npos isa mug1 Mug\npos isa hook1 Hook\npos isa hook1 Fixed\n"
        "pos contacts mug1 hook1\npos below hook1 mug1\npos stillness mug1 floor\npos hasContactMask mug1 hook1\n");
    BeliefStore slow = fast;
    NafScope scope;
    for (const auto* p : {"movDir", "stillness", "approaches", "departs", "contacts"}) scope.add(p, "mug1");
    run_to_fixpoint(fast, builtin_ruleset(), scope);
    oracle::naive_saturate(slow, builtin_ruleset(), scope);
    EXPECT_EQ(oracle::statements(fast), oracle::statements(slow));
}

TEST(Engine, SaturationIsDeterministic) {
    auto run = [] {
        BeliefStore s;
        s.load("pos isa mug1 Obj\npos contacts mug1 hook1\npos below hook1 mug1\n");
        NafScope scope;
        scope.add("movDir", "mug1");
        run_to_fixpoint(s, builtin_ruleset(), scope, {2, 1000, 5});
        return s.dump();
    };
    EXPECT_EQ(run(), run());
}

TEST(Engine, SaturationOnlyAddsTriples) {
    std::mt19937 rng(23);
    for (int i = 0; i < 30; ++i) {
        auto prog = gen::random_program(rng);
        NafScope scope;
        scope.add("b0");
        auto s = small(prog.facts);
        auto before = oracle::statements(s);
        run_to_fixpoint(s, parse_rules(prog.rules), scope);
        auto after = oracle::statements(s);
        for (const auto& t : before) EXPECT_TRUE(after.count(t)) << t;
    }
}

TEST(Engine, NarrowingTheNegationScopeOnlyRemovesDerivations) {
    std::mt19937 rng(29);
    for (int i = 0; i < 40; ++i) {
        auto prog = gen::random_program(rng);
        auto rules = parse_rules(prog.rules);
        NafScope wide;
        wide.add("b0");
        NafScope partial;
        partial.add("b0", "e" + std::to_string(i % 4));
        auto a = small(prog.facts), b = small(prog.facts), c = small(prog.facts);
        run_to_fixpoint(a, rules, wide);
        run_to_fixpoint(b, rules, partial);
        run_to_fixpoint(c, rules, {});
        auto sa = oracle::statements(a), sb = oracle::statements(b), sc = oracle::statements(c);
        for (const auto& t : sb) EXPECT_TRUE(sa.count(t)) << t << "\n" << prog.rules;
        for (const auto& t : sc) EXPECT_TRUE(sb.count(t)) << t << "\n" << prog.rules;
    }
}
