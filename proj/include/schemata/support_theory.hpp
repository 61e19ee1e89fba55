#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "schemata/belief_store.hpp"
#include "schemata/engine.hpp"
#include "schemata/query.hpp"
#include "schemata/rules.hpp"

namespace schemata {

/// Text of the shipped support theory (same content as assets/rules/support.rules).
inline constexpr std::string_view kSupportRules = R"RULES(# Naive theory of support over Contact, Movement, Support and Transportation.
# Unary atoms C(?x) stand for isa(?x, C). Entities minted by `new` are keyed on
# the rule and on the body variables the head mentions.

# A force that affects something is exerted by something.
rule ax1: aff(?f,?o) => new ?x: object [], exrt(?x,?f)
# Gravity points down and the floor exerts it on every typical object.
rule ax2: Grv(?f) => Frc(?f), dir(?f,down)
rule ax3: Obj(?o) => new ?f: force [Grv], exrt(floor,?f), aff(?f,?o)
# Exerting a force on something other than yourself means being in contact with it.
rule ax4: exrt(?a,?f), aff(?f,?b), ?a != floor, ?a != ?b => new ?c: situation [Con], hasPrtcp(?c,?a), hasPrtcp(?c,?b)
# Objects in contact push on one another.
rule ax5: Con(?c), hasPrtcp(?c,?a), hasPrtcp(?c,?b), ?a != ?b => new ?f: force [Frc], exrt(?a,?f), aff(?f,?b)
# An upward force from the floor needs contact with the floor.
rule ax6: exrt(floor,?f), aff(?f,?o), dir(?f,up) => new ?c: situation [Con], hasPrtcp(?c,floor), hasPrtcp(?c,?o)
# A typical object that does not move along a force acting on it feels an opposite force it does not exert itself.
rule ax7: Obj(?o), aff(?f,?o), dir(?f,?d), not movDir(?o,?d), opp(?d,?d2) => new ?g: force [Frc], aff(?g,?o), dir(?g,?d2), -exrt(?o,?g)
# Pushing something upward means being below it.
rule ax8: exrt(?a,?f), aff(?f,?b), dir(?f,up) => below(?a,?b)
# Parts of typical objects are typical. Parts are only grounded by contact masks.
rule ax9: Obj(?o), hasPrt(?o,?p) => Obj(?p)
rule part: hasContactMask(?o,?r) => new ?p: mask-ref [Part], hasPrt(?o,?p), contacts(?p,?r)
# Forces at a contact are exerted by, and act on, the part in contact.
rule ax10: exrt(?o,?f), aff(?f,?x), hasPrt(?o,?p), contacts(?p,?x) => exrt(?p,?f)
rule ax11: exrt(?r,?f), aff(?f,?o), hasPrt(?o,?p), contacts(?p,?r), ?r != floor => aff(?f,?p)
# A filled Support role activates the whole Support schema.
rule ax12: suppee(?s,?e) => Supp(?s)
rule roles: supper(?s,?r) => Supp(?s)
# A supportee does not fall; a supporter pushes it upward.
rule ax13: suppee(?s,?e) => -movDir(?e,down)
rule ax14: Supp(?s), suppee(?s,?e), supper(?s,?r) => new ?f: force [Frc], exrt(?r,?f), aff(?f,?e), dir(?f,up)
# Diagnosis: a still object touching something below it is supported by it.
rule ax16: Con(?c), hasPrtcp(?c,?e), hasPrtcp(?c,?r), below(?r,?e), not movDir(?e,down), ?e != ?r => new ?s: situation [DSupp], suppee(?s,?e), supper(?s,?r)
# Perceived contact and motion become Contact and Movement situations.
rule contact: contacts(?a,?b) => new ?c: situation [Con], hasPrtcp(?c,?a), hasPrtcp(?c,?b)
rule movement: movDir(?x,?d) => new ?m: situation [Movement], mover(?m,?x)
# Something moving while supported is being transported.
rule transport: Movement(?m), mover(?m,?x), Supp(?s), suppee(?s,?x) => new ?t: situation [Transportation], hasRole(?t,?m), hasRole(?t,?s)
)RULES";

inline std::vector<Rule> builtin_ruleset() { return parse_rules(kSupportRules); }

/// "default" (or empty) selects the built-in theory; anything else is a rule file path.
inline std::vector<Rule> load_ruleset(const std::string& source) {
    if (source.empty() || source == "default") return builtin_ruleset();
    std::ifstream in(source);
    if (!in) throw Error("cannot open rule file '" + source + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_rules(buf.str());
}

struct SupportDescription {
    std::string situation;
    std::string suppee;
    std::string supper;
    auto operator<=>(const SupportDescription&) const = default;
};

/// Every (DSupp situation, suppee, supper) combination believed in the store.
inline std::vector<SupportDescription> support_descriptions(const BeliefStore& store) {
    std::vector<SupportDescription> out;
    for (const auto& b : match_conjunction(store, {{std::string(kIsa), Term::var("s"), Term::constant("DSupp")},
                                                   {"suppee", Term::var("s"), Term::var("e")},
                                                   {"supper", Term::var("s"), Term::var("r")}}))
        out.push_back({b.at("s"), b.at("e"), b.at("r")});
    return out;
}

/// DSupp situations violating the one-suppee/one-supper structure.
inline std::vector<std::string> malformed_support_situations(const BeliefStore& store) {
    std::vector<std::string> bad;
    for (const auto& b : match_conjunction(store, {{std::string(kIsa), Term::var("s"), Term::constant("DSupp")}})) {
        const auto& s = b.at("s");
        int e = 0, r = 0;
        store.for_each_match(Polarity::pos, "suppee", s, std::nullopt, [&](auto&, auto&) { ++e; });
        store.for_each_match(Polarity::pos, "supper", s, std::nullopt, [&](auto&, auto&) { ++r; });
        if (e != 1 || r != 1) bad.push_back(s);
    }
    return bad;
}

/// Expectations of believed support descriptions, plus the standing attention queries.
inline std::set<PerceptionQuery> emit_queries(const BeliefStore& store,
                                              const std::vector<PerceptionQuery>& standing = {}) {
    std::set<PerceptionQuery> out(standing.begin(), standing.end());
    for (const auto& b : match_conjunction(store, {{std::string(kIsa), Term::var("s"), Term::constant("DSupp")},
                                                   {"suppee", Term::var("s"), Term::var("e")}})) {
        out.insert(relative_movement(b.at("e"), "floor"));
        out.insert(contact_query(b.at("e")));
    }
    return out;
}

struct DroppedSchema {
    SupportDescription description;
    std::string reason;  ///< "violated" or "unobserved"
};

struct PersistResult {
    std::vector<Triple> carried;
    std::vector<EntityRecord> entities;
    std::vector<SupportDescription> kept;
    std::vector<DroppedSchema> dropped;
};

/// Carries support descriptions over to the next tick when this tick's percepts meet
/// their expectations: the suppee did not move down and still touches the supporter.
/// Contact and Movement schemas are never carried; they are re-derived from percepts.
inline PersistResult persist_schemas(const BeliefStore& prev, const std::vector<Triple>& percepts) {
    auto has = [&](Polarity p, const std::string& pred, const std::string& s, const std::string& o) {
        for (const auto& t : percepts)
            if (t.polarity == p && t.predicate == pred && t.subject == s && t.object == o) return true;
        return false;
    };
    PersistResult out;
    for (const auto& d : support_descriptions(prev)) {
        const bool fell = has(Polarity::pos, "movDir", d.suppee, "down");
        const bool touching = has(Polarity::pos, "contacts", d.suppee, d.supper) ||
                              has(Polarity::pos, "contacts", d.supper, d.suppee);
        const bool separated = has(Polarity::neg, "contacts", d.suppee, d.supper) ||
                               has(Polarity::neg, "contacts", d.supper, d.suppee);
        if (!fell && touching) {
            out.kept.push_back(d);
            out.entities.push_back(prev.entity(d.situation));
            out.carried.push_back(pos(std::string(kIsa), d.situation, "DSupp"));
            out.carried.push_back(pos("suppee", d.situation, d.suppee));
            out.carried.push_back(pos("supper", d.situation, d.supper));
        } else {
            out.dropped.push_back({d, fell || separated ? "violated" : "unobserved"});
        }
    }
    return out;
}

/// Adds carried schemas to a fresh store. Role participants must already be registered.
inline void inject(BeliefStore& store, const PersistResult& persisted) {
    for (const auto& e : persisted.entities) store.import_entity(e);
    for (const auto& t : persisted.carried) store.assert_triple(t);
}

}  // namespace schemata
