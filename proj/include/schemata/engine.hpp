#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "schemata/belief_store.hpp"
#include "schemata/rules.hpp"

namespace schemata {

/// opp over the four directions: up/down and left/right.
inline std::optional<std::string> opposite(const std::string& d) {
    if (d == "up") return "down";
    if (d == "down") return "up";
    if (d == "left") return "right";
    if (d == "right") return "left";
    return std::nullopt;
}

/// Predicates perception was tasked to observe this tick, optionally per subject.
///
/// A `not p(s, o)` atom can only succeed when the scope covers (p, s).
class NafScope {
public:
    NafScope() = default;
    NafScope(std::initializer_list<std::string> predicates) {
        for (const auto& p : predicates) add(p);
    }

    void add(const std::string& predicate) { whole_.insert(predicate); }
    void add(const std::string& predicate, const std::string& subject) { scoped_.insert({predicate, subject}); }
    void remove(const std::string& predicate) {
        whole_.erase(predicate);
        std::erase_if(scoped_, [&](const auto& e) { return e.first == predicate; });
    }

    bool covers(const std::string& predicate, const std::string& subject) const {
        return whole_.count(predicate) || scoped_.count({predicate, subject});
    }

    std::set<std::string> predicates() const {
        std::set<std::string> out = whole_;
        for (const auto& e : scoped_) out.insert(e.first);
        return out;
    }

private:
    std::set<std::string> whole_;
    std::set<std::pair<std::string, std::string>> scoped_;
};

struct EngineOptions {
    int reification_depth_cap = 2;
    int iteration_cap = 1000;
    int tick = 0;
};

struct Firing {
    std::string rule;
    Binding binding;
    bool operator==(const Firing&) const = default;
};

struct FixpointReport {
    int iterations = 0;
    int derived = 0;
    std::vector<Firing> firings;
    bool reached_fixpoint = false;
    std::vector<Triple> conflicts;
};

namespace detail {

inline std::string stratum_key(const Atom& a) {
    return a.is_class_atom() ? a.predicate + "/" + a.object.name : a.predicate;
}

inline void validate_rules(const BeliefStore& store, const std::vector<Rule>& rules) {
    const auto& vocab = store.vocabulary();
    auto check_atom = [&](const Rule& r, const Atom& a) {
        if (!vocab.predicates.count(a.predicate))
            throw Error("rule '" + r.id + "': unknown predicate '" + a.predicate + "'");
        if (a.is_class_atom() && !vocab.classes.count(a.object.name))
            throw Error("rule '" + r.id + "': unknown class '" + a.object.name + "'");
    };
    std::set<std::string> positive_heads;
    for (const auto& r : rules) {
        for (const auto& a : r.body_pos) check_atom(r, a);
        for (const auto& a : r.body_neg) check_atom(r, a);
        for (const auto& h : r.head) {
            check_atom(r, h.atom);
            if (h.polarity == Polarity::pos) positive_heads.insert(stratum_key(h.atom));
        }
        for (const auto& n : r.head_new)
            for (const auto& t : n.tags) {
                if (!vocab.classes.count(t)) throw Error("rule '" + r.id + "': unknown class '" + t + "'");
                positive_heads.insert(std::string(kIsa) + "/" + t);
            }
    }
    for (const auto& r : rules)
        for (const auto& a : r.body_neg) {
            bool clash = positive_heads.count(stratum_key(a)) > 0;
            if (a.predicate == kIsa && a.object.is_var)
                clash = std::any_of(positive_heads.begin(), positive_heads.end(),
                                    [](const std::string& k) { return k.starts_with("isa"); });
            if (clash)
                throw Error("rule '" + r.id + "': negated atom '" + a.str() +
                            "' is derivable by a rule head (negation must be stratified)");
        }
}

/// Head-referenced body variables, sorted: the reification key of a firing.
inline std::vector<std::string> key_variables(const Rule& r) {
    std::set<std::string> fresh;
    for (const auto& n : r.head_new) fresh.insert(n.var);
    std::set<std::string> vars;
    for (const auto& h : r.head)
        for (const auto* t : {&h.atom.subject, &h.atom.object})
            if (t->is_var && !fresh.count(t->name)) vars.insert(t->name);
    return {vars.begin(), vars.end()};
}

struct Match {
    Binding binding;
    std::vector<TripleKey> premises;
};

class Matcher {
public:
    /// Enumerates positive-body matches; atom `delta_index` (if any) draws from `delta`.
    static void enumerate(const BeliefStore& store, const Rule& r, std::optional<std::size_t> delta_index,
                          const std::vector<TripleKey>& delta, const NafScope& scope,
                          const std::function<void(Match&&)>& emit) {
        Match m;
        step(store, r, 0, delta_index, delta, scope, m, emit);
    }

private:
    static std::optional<std::string> resolve(const Term& t, const Binding& b) {
        if (!t.is_var) return t.name;
        if (auto it = b.find(t.name); it != b.end()) return it->second;
        return std::nullopt;
    }

    static bool bind(Binding& b, const Term& t, const std::string& value) {
        if (!t.is_var) return t.name == value;
        auto [it, inserted] = b.emplace(t.name, value);
        return inserted || it->second == value;
    }

    static void step(const BeliefStore& store, const Rule& r, std::size_t i, std::optional<std::size_t> delta_index,
                     const std::vector<TripleKey>& delta, const NafScope& scope, Match& m,
                     const std::function<void(Match&&)>& emit) {
        if (i == r.body_pos.size()) {
            finish(store, r, scope, m, emit);
            return;
        }
        const Atom& a = r.body_pos[i];
        auto s = resolve(a.subject, m.binding);
        auto o = resolve(a.object, m.binding);
        auto consider = [&](const std::string& subj, const std::string& obj) {
            Match next = m;
            if (!bind(next.binding, a.subject, subj) || !bind(next.binding, a.object, obj)) return;
            next.premises.push_back({a.predicate, subj, obj});
            step(store, r, i + 1, delta_index, delta, scope, next, emit);
        };
        if (delta_index && *delta_index == i) {
            for (const auto& k : delta) {
                if (k.predicate != a.predicate) continue;
                if ((s && *s != k.subject) || (o && *o != k.object)) continue;
                consider(k.subject, k.object);
            }
        } else {
            store.for_each_match(Polarity::pos, a.predicate, s, o, consider);
        }
    }

    static void finish(const BeliefStore& store, const Rule& r, const NafScope& scope, Match& m,
                       const std::function<void(Match&&)>& emit) {
        Match out = m;
        for (const auto& b : r.builtins) {
            auto l = resolve(b.lhs, out.binding);
            auto rr = resolve(b.rhs, out.binding);
            if (b.op == Builtin::Op::not_equal) {
                if (*l == *rr) return;
                continue;
            }
            if (l && rr) {
                if (opposite(*l) != *rr) return;
            } else if (l) {
                auto opp = opposite(*l);
                if (!opp) return;
                out.binding[b.rhs.name] = *opp;
            } else {
                auto opp = opposite(*rr);
                if (!opp) return;
                out.binding[b.lhs.name] = *opp;
            }
        }
        for (const auto& a : r.body_neg) {
            auto s = *resolve(a.subject, out.binding);
            auto o = *resolve(a.object, out.binding);
            if (!scope.covers(a.predicate, s)) return;
            if (store.contains(Polarity::pos, a.predicate, s, o)) return;
        }
        emit(std::move(out));
    }
};

struct Derivation {
    std::size_t rule_index;
    Match match;
};

}  // namespace detail

/// Runs every rule over `store` to fixpoint with semi-naive evaluation.
///
/// Each round matches against a snapshot, then applies firings in canonical
/// (rule order, binding) order, so results do not depend on match order.
inline FixpointReport run_to_fixpoint(BeliefStore& store, const std::vector<Rule>& rules, const NafScope& naf_scope,
                                      const EngineOptions& opts = {}) {
    detail::validate_rules(store, rules);
    FixpointReport report;
    std::vector<std::vector<std::string>> key_vars;
    for (const auto& r : rules) key_vars.push_back(detail::key_variables(r));

    std::vector<TripleKey> delta;
    bool first_round = true;
    while (true) {
        if (++report.iterations > opts.iteration_cap)
            throw Error("iteration cap of " + std::to_string(opts.iteration_cap) +
                        " exceeded (runaway reification chain?)");

        std::map<std::pair<std::size_t, Binding>, detail::Match> found;
        for (std::size_t ri = 0; ri < rules.size(); ++ri) {
            const auto& r = rules[ri];
            auto emit = [&](detail::Match&& m) { found.try_emplace({ri, m.binding}, std::move(m)); };
            if (first_round) {
                detail::Matcher::enumerate(store, r, std::nullopt, delta, naf_scope, emit);
            } else {
                for (std::size_t i = 0; i < r.body_pos.size(); ++i)
                    detail::Matcher::enumerate(store, r, i, delta, naf_scope, emit);
            }
        }
        first_round = false;

        std::vector<TripleKey> next_delta;
        for (auto& [id, m] : found) {
            const auto& r = rules[id.first];
            Binding binding = m.binding;
            std::vector<std::string> key_entities;
            for (const auto& v : key_vars[id.first]) key_entities.push_back(binding.at(v));
            if (!r.head_new.empty() && store.reify_depth({r.id, key_entities}) > opts.reification_depth_cap)
                continue;

            std::vector<Triple> heads;
            const auto prov = Provenance::inferred(r.id, opts.tick);
            for (const auto& n : r.head_new) {
                auto key_rule = r.head_new.size() == 1 ? r.id : r.id + "/" + n.var;
                auto idv = store.reify(n.kind, ReifyKey{key_rule, key_entities});
                binding[n.var] = idv;
                for (const auto& tag : n.tags) heads.push_back(pos(std::string(kIsa), idv, tag, prov));
            }
            for (const auto& h : r.head) {
                auto val = [&](const Term& t) { return t.is_var ? binding.at(t.name) : t.name; };
                heads.push_back({h.polarity, h.atom.predicate, val(h.atom.subject), val(h.atom.object), prov});
            }
            bool productive = false;
            for (const auto& t : heads) {
                switch (store.assert_triple(t)) {
                    case AssertResult::added:
                        productive = true;
                        ++report.derived;
                        store.justify(t.key(), {r.id, m.binding, m.premises});
                        if (t.polarity == Polarity::pos) next_delta.push_back(t.key());
                        break;
                    case AssertResult::conflict:
                        report.conflicts.push_back(t);
                        break;
                    case AssertResult::duplicate:
                        break;
                }
            }
            if (productive) report.firings.push_back({r.id, m.binding});
        }
        if (next_delta.empty()) break;
        std::sort(next_delta.begin(), next_delta.end());
        delta = std::move(next_delta);
    }
    report.reached_fixpoint = true;
    return report;
}

/// All bindings of a conjunctive query (positive atoms only) over the store.
inline std::vector<Binding> match_conjunction(const BeliefStore& store, const std::vector<Atom>& atoms) {
    Rule probe;
    probe.id = "query";
    probe.body_pos = atoms;
    std::vector<Binding> out;
    detail::Matcher::enumerate(store, probe, std::nullopt, {}, NafScope{},
                               [&](detail::Match&& m) { out.push_back(std::move(m.binding)); });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct DerivationNode {
    Triple triple;
    std::string rule;  ///< empty for perceived/asserted leaves
    Binding binding;
    std::vector<DerivationNode> premises;

    bool is_leaf() const { return rule.empty(); }

    std::size_t rule_nodes() const {
        std::size_t n = is_leaf() ? 0 : 1;
        for (const auto& p : premises) n += p.rule_nodes();
        return n;
    }

    void leaves(std::vector<Triple>& out) const {
        if (is_leaf()) out.push_back(triple);
        for (const auto& p : premises) p.leaves(out);
    }

    std::string str(int indent = 0) const {
        std::string s(indent * 2, ' ');
        s += triple.line();
        if (!is_leaf()) {
            s += "  <= " + rule + " {";
            bool first = true;
            for (const auto& [k, v] : binding) {
                s += (first ? "" : ", ") + ("?" + k) + "=" + v;
                first = false;
            }
            s += "}";
        }
        s += "\n";
        for (const auto& p : premises) s += p.str(indent + 1);
        return s;
    }
};

/// Traces an inferred triple back to perceived/asserted leaves.
inline DerivationNode explain(const BeliefStore& store, const Triple& query) {
    auto found = store.find(query.key());
    if (!found || found->polarity != query.polarity) throw Error("triple not present: " + query.statement());
    if (found->provenance.source != Provenance::Source::inferred)
        throw Error("triple not inferred: " + query.statement());

    std::function<DerivationNode(const TripleKey&, std::set<TripleKey>&)> build =
        [&](const TripleKey& key, std::set<TripleKey>& path) {
            DerivationNode node;
            node.triple = *store.find(key);
            const auto* j = store.justification(key);
            if (!j || node.triple.provenance.source != Provenance::Source::inferred || path.count(key)) return node;
            path.insert(key);
            node.rule = j->rule;
            node.binding = j->binding;
            for (const auto& p : j->premises) node.premises.push_back(build(p, path));
            path.erase(key);
            return node;
        };
    std::set<TripleKey> path;
    return build(query.key(), path);
}

}  // namespace schemata
