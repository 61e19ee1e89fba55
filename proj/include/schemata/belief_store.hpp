#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace schemata {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Polarity { pos, neg };

inline std::string_view to_string(Polarity p) { return p == Polarity::pos ? "pos" : "neg"; }

enum class EntityKind { object, force, situation, direction, concept_name, mask_ref };

inline std::string_view to_string(EntityKind k) {
    switch (k) {
        case EntityKind::object: return "object";
        case EntityKind::force: return "force";
        case EntityKind::situation: return "situation";
        case EntityKind::direction: return "direction";
        case EntityKind::concept_name: return "concept";
        case EntityKind::mask_ref: return "mask-ref";
    }
    return "object";
}

inline std::optional<EntityKind> parse_entity_kind(std::string_view s) {
    if (s == "object") return EntityKind::object;
    if (s == "force") return EntityKind::force;
    if (s == "situation") return EntityKind::situation;
    if (s == "direction") return EntityKind::direction;
    if (s == "concept") return EntityKind::concept_name;
    if (s == "mask-ref") return EntityKind::mask_ref;
    return std::nullopt;
}

enum class Origin { named, reified };

/// Where a belief came from.
struct Provenance {
    enum class Source { perceived, inferred, asserted };
    Source source = Source::asserted;
    int tick = 0;
    std::string rule;

    static Provenance perceived(int tick) { return {Source::perceived, tick, {}}; }
    static Provenance inferred(std::string rule, int tick) { return {Source::inferred, tick, std::move(rule)}; }
    static Provenance asserted() { return {}; }

    bool operator==(const Provenance&) const = default;

    std::string str() const {
        switch (source) {
            case Source::perceived: return "perceived(" + std::to_string(tick) + ")";
            case Source::inferred: return "inferred(" + rule + "," + std::to_string(tick) + ")";
            case Source::asserted: return "asserted";
        }
        return "asserted";
    }

    static Provenance parse(std::string_view s) {
        auto inner = [&](std::string_view prefix) {
            return std::string(s.substr(prefix.size(), s.size() - prefix.size() - 1));
        };
        if (s == "asserted" || s.empty()) return asserted();
        if (s.starts_with("perceived(") && s.ends_with(")")) return perceived(std::stoi(inner("perceived(")));
        if (s.starts_with("inferred(") && s.ends_with(")")) {
            auto body = inner("inferred(");
            auto comma = body.rfind(',');
            if (comma == std::string::npos) throw Error("malformed provenance: " + std::string(s));
            return inferred(body.substr(0, comma), std::stoi(body.substr(comma + 1)));
        }
        throw Error("malformed provenance: " + std::string(s));
    }
};

struct TripleKey {
    std::string predicate;
    std::string subject;
    std::string object;
    auto operator<=>(const TripleKey&) const = default;
};

struct Triple {
    Polarity polarity = Polarity::pos;
    std::string predicate;
    std::string subject;
    std::string object;
    Provenance provenance;

    TripleKey key() const { return {predicate, subject, object}; }

    /// Statement identity; provenance is metadata.
    bool same_statement(const Triple& o) const {
        return polarity == o.polarity && key() == o.key();
    }

    std::string statement() const {
        std::string s(to_string(polarity));
        return s + " " + predicate + " " + subject + " " + object;
    }
    std::string line() const { return statement() + " # " + provenance.str(); }
};

inline Triple pos(std::string p, std::string s, std::string o, Provenance prov = {}) {
    return {Polarity::pos, std::move(p), std::move(s), std::move(o), std::move(prov)};
}
inline Triple neg(std::string p, std::string s, std::string o, Provenance prov = {}) {
    return {Polarity::neg, std::move(p), std::move(s), std::move(o), std::move(prov)};
}

/// Parses `<polarity> <predicate> <subject> <object> [# <provenance>]`.
inline Triple parse_triple(std::string_view line) {
    std::string text(line);
    Provenance prov;
    if (auto hash = text.find('#'); hash != std::string::npos) {
        std::string tail = text.substr(hash + 1);
        text.resize(hash);
        tail.erase(0, tail.find_first_not_of(" \t"));
        tail.erase(tail.find_last_not_of(" \t\r") + 1);
        prov = Provenance::parse(tail);
    }
    std::istringstream in(text);
    std::string pol, p, s, o, extra;
    if (!(in >> pol >> p >> s >> o) || (in >> extra))
        throw Error("malformed triple: '" + std::string(line) + "'");
    Polarity polarity;
    if (pol == "pos" || pol == "+") polarity = Polarity::pos;
    else if (pol == "neg" || pol == "-") polarity = Polarity::neg;
    else throw Error("bad polarity '" + pol + "' in triple: '" + std::string(line) + "'");
    return {polarity, p, s, o, prov};
}

struct EntityRecord {
    std::string id;
    Origin origin = Origin::named;
    EntityKind kind = EntityKind::object;
    std::set<std::string> class_tags;
    int depth = 0;  ///< 0 for named entities, reification generation otherwise.
    std::string reify_key;
};

/// Declared predicates and class names. Unary class atoms are stored as `isa(x, Class)`.
struct Vocabulary {
    std::set<std::string> predicates;
    std::set<std::string> classes;

    static Vocabulary standard() {
        return {
            {"isa", "exrt", "aff", "dir", "hasPrtcp", "below", "movDir", "contacts", "approaches",
             "departs", "stillness", "suppee", "supper", "mover", "hasRole", "hasPrt", "hasContactMask",
             "goalSupportedBy"},
            {"Obj", "Fixed", "Floor", "Frc", "Grv", "Con", "Movement", "Supp", "DSupp", "Transportation",
             "Part", "Mug", "Hook", "Block", "UnsupportGoal"},
        };
    }
};

inline constexpr std::string_view kIsa = "isa";
inline const std::vector<std::string> kDirections = {"down", "left", "right", "up"};

enum class AssertResult { added, duplicate, conflict };

/// A reification key: the rule that mints the entity plus the binding tuple it is minted for.
struct ReifyKey {
    std::string rule;
    std::vector<std::string> binding;

    std::string str() const {
        std::string s = rule;
        for (const auto& b : binding) s += "|" + b;
        return s;
    }
};

/// Why an inferred triple holds: the firing that first produced it.
struct Justification {
    std::string rule;
    std::map<std::string, std::string> binding;
    std::vector<TripleKey> premises;
};

using Binding = std::map<std::string, std::string>;

/// Belief state: polarity-tagged triples over registered entities.
///
/// A store never holds both polarities of one (predicate, subject, object). Reified
/// entity ids are a pure function of their key, so saturating twice mints nothing new.
class BeliefStore {
public:
    explicit BeliefStore(Vocabulary vocab = Vocabulary::standard()) : vocab_(std::move(vocab)) {
        for (const auto& d : kDirections) register_entity(d, EntityKind::direction);
        for (const auto& c : vocab_.classes) register_entity(c, EntityKind::concept_name);
        register_entity("floor", EntityKind::object);
    }

    const Vocabulary& vocabulary() const { return vocab_; }

    void declare_predicate(const std::string& p) { vocab_.predicates.insert(p); }
    void declare_class(const std::string& c) {
        vocab_.classes.insert(c);
        if (!entities_.count(c)) register_entity(c, EntityKind::concept_name);
    }

    /// Registers a named entity; re-registering with the same kind is a no-op.
    const EntityRecord& register_entity(const std::string& id, EntityKind kind) { return ensure_entity(id, kind); }

    /// Copies a record from another store (used to carry schemas across ticks).
    void import_entity(const EntityRecord& rec) {
        auto [it, inserted] = entities_.try_emplace(rec.id, rec);
        if (!inserted && it->second.kind != rec.kind)
            throw Error("entity '" + rec.id + "' kind mismatch on import");
        if (!rec.reify_key.empty()) reify_index_.try_emplace(rec.reify_key, rec.id);
    }

private:
    EntityRecord& ensure_entity(const std::string& id, EntityKind kind) {
        if (id.empty()) throw Error("empty entity id");
        auto [it, inserted] = entities_.try_emplace(id);
        if (inserted) {
            it->second.id = id;
            it->second.kind = kind;
        } else if (it->second.kind != kind) {
            throw Error("entity '" + id + "' already registered as " + std::string(to_string(it->second.kind)));
        }
        return it->second;
    }

public:

    bool has_entity(const std::string& id) const { return entities_.count(id) > 0; }

    const EntityRecord& entity(const std::string& id) const {
        auto it = entities_.find(id);
        if (it == entities_.end()) throw Error("unknown entity '" + id + "'");
        return it->second;
    }

    const std::map<std::string, EntityRecord>& entities() const { return entities_; }

    int depth_of(const std::string& id) const {
        auto it = entities_.find(id);
        return it == entities_.end() ? 0 : it->second.depth;
    }

    /// Generation a reification under `key` would have: one more than its deepest bound entity.
    int reify_depth(const ReifyKey& key) const {
        int d = 0;
        for (const auto& b : key.binding) d = std::max(d, depth_of(b));
        return d + 1;
    }

    /// Returns the entity minted for `key`, minting it on first use.
    std::string reify(EntityKind kind, const ReifyKey& key) {
        const auto k = key.str();
        if (auto it = reify_index_.find(k); it != reify_index_.end()) return it->second;
        std::string id = "_:" + hex_hash(k);
        for (int salt = 1; entities_.count(id); ++salt) id = "_:" + hex_hash(k + "#" + std::to_string(salt));
        EntityRecord rec;
        rec.id = id;
        rec.origin = Origin::reified;
        rec.kind = kind;
        rec.depth = reify_depth(key);
        rec.reify_key = k;
        entities_.emplace(id, rec);
        reify_index_.emplace(k, id);
        return id;
    }

    AssertResult assert_triple(const Triple& t) {
        validate(t);
        auto key = t.key();
        if (auto it = triples_.find(key); it != triples_.end())
            return it->second.polarity == t.polarity ? AssertResult::duplicate : AssertResult::conflict;
        triples_.emplace(key, Stored{t.polarity, t.provenance});
        if (t.polarity == Polarity::pos) {
            by_object_.insert({t.predicate, t.object, t.subject});
            if (t.predicate == kIsa) entities_.at(t.subject).class_tags.insert(t.object);
        }
        return AssertResult::added;
    }

    void justify(const TripleKey& key, Justification j) { justifications_.try_emplace(key, std::move(j)); }

    const Justification* justification(const TripleKey& key) const {
        auto it = justifications_.find(key);
        return it == justifications_.end() ? nullptr : &it->second;
    }

    std::optional<Triple> find(const TripleKey& key) const {
        auto it = triples_.find(key);
        if (it == triples_.end()) return std::nullopt;
        return Triple{it->second.polarity, key.predicate, key.subject, key.object, it->second.provenance};
    }

    bool contains(Polarity p, const std::string& pred, const std::string& s, const std::string& o) const {
        auto it = triples_.find({pred, s, o});
        return it != triples_.end() && it->second.polarity == p;
    }

    bool has_class(const std::string& id, const std::string& cls) const {
        return contains(Polarity::pos, std::string(kIsa), id, cls);
    }

    std::size_t size() const { return triples_.size(); }

    /// All triples in canonical (predicate, subject, object) order.
    std::vector<Triple> triples() const {
        std::vector<Triple> out;
        out.reserve(triples_.size());
        for (const auto& [k, v] : triples_) out.push_back({v.polarity, k.predicate, k.subject, k.object, v.provenance});
        return out;
    }

    /// Visits pos/neg triples matching the optional fields, in canonical order.
    void for_each_match(Polarity pol, const std::string& pred, const std::optional<std::string>& s,
                        const std::optional<std::string>& o,
                        const std::function<void(const std::string&, const std::string&)>& fn) const {
        if (s && o) {
            if (contains(pol, pred, *s, *o)) fn(*s, *o);
            return;
        }
        if (o && pol == Polarity::pos) {
            for (auto it = by_object_.lower_bound({pred, *o, ""});
                 it != by_object_.end() && it->predicate == pred && it->subject == *o; ++it)
                fn(it->object, *o);
            return;
        }
        for (auto it = triples_.lower_bound({pred, s.value_or(""), ""});
             it != triples_.end() && it->first.predicate == pred; ++it) {
            if (s && it->first.subject != *s) break;
            if (o && it->first.object != *o) continue;
            if (it->second.polarity == pol) fn(it->first.subject, it->first.object);
        }
    }

    /// A query pattern: each field is a constant, a `?var`, or `?`/`_` for an anonymous wildcard.
    struct Pattern {
        Polarity polarity = Polarity::pos;
        std::string predicate;
        std::string subject;
        std::string object;
    };

    std::vector<Binding> query_pattern(const Pattern& p) const {
        std::vector<Binding> out;
        auto is_wild = [](const std::string& t) { return t.empty() || t == "_" || t == "?"; };
        auto is_var = [&](const std::string& t) { return !is_wild(t) && t.front() == '?'; };
        auto fixed = [&](const std::string& t) -> std::optional<std::string> {
            if (is_wild(t) || is_var(t)) return std::nullopt;
            return t;
        };
        auto visit = [&](const std::string& pred) {
            for_each_match(p.polarity, pred, fixed(p.subject), fixed(p.object),
                           [&](const std::string& s, const std::string& o) {
                               Binding b;
                               if (is_var(p.subject)) b[p.subject.substr(1)] = s;
                               if (is_var(p.object)) {
                                   auto name = p.object.substr(1);
                                   if (auto it = b.find(name); it != b.end() && it->second != o) return;
                                   b[name] = o;
                               }
                               out.push_back(std::move(b));
                           });
        };
        if (is_wild(p.predicate)) {
            for (const auto& pred : vocab_.predicates) visit(pred);
        } else {
            visit(p.predicate);
        }
        return out;
    }

    /// Entities other than a and b that lie on every undirected path between them.
    ///
    /// Computed on the block-cut tree: the separating vertices are exactly the cut
    /// vertices on the tree path from a to b.
    std::set<std::string> dependency_query(const std::string& a, const std::string& b) const {
        if (a == b) throw Error("dependency query needs two distinct entities");
        entity(a);
        entity(b);

        std::map<std::string, int> index;
        std::vector<std::string> names;
        auto node = [&](const std::string& id) {
            auto [it, inserted] = index.try_emplace(id, static_cast<int>(names.size()));
            if (inserted) names.push_back(id);
            return it->second;
        };
        node(a);
        node(b);
        std::vector<std::pair<int, int>> edges;
        for (const auto& [k, v] : triples_) {
            if (k.subject == k.object) continue;
            edges.emplace_back(node(k.subject), node(k.object));
        }
        const int n = static_cast<int>(names.size());
        std::vector<std::vector<std::pair<int, int>>> adj(n);  // (neighbour, edge id)
        for (int e = 0; e < static_cast<int>(edges.size()); ++e) {
            adj[edges[e].first].push_back({edges[e].second, e});
            adj[edges[e].second].push_back({edges[e].first, e});
        }

        // Biconnected components (Tarjan, edge stack), iterative DFS from a.
        std::vector<int> disc(n, -1), low(n, 0);
        std::vector<std::vector<int>> blocks;
        std::vector<int> edge_stack;
        int timer = 0;
        struct Frame { int v; int parent_edge; std::size_t next; };
        std::vector<Frame> stack{{0, -1, 0}};
        disc[0] = low[0] = timer++;
        while (!stack.empty()) {
            auto& f = stack.back();
            if (f.next < adj[f.v].size()) {
                auto [w, e] = adj[f.v][f.next++];
                if (e == f.parent_edge) continue;
                if (disc[w] == -1) {
                    edge_stack.push_back(e);
                    disc[w] = low[w] = timer++;
                    stack.push_back({w, e, 0});
                } else if (disc[w] < disc[f.v]) {
                    edge_stack.push_back(e);
                    low[f.v] = std::min(low[f.v], disc[w]);
                }
                continue;
            }
            const int v = f.v;
            const int pe = f.parent_edge;
            stack.pop_back();
            if (stack.empty()) break;
            const int u = stack.back().v;
            low[u] = std::min(low[u], low[v]);
            if (low[v] >= disc[u]) {
                std::set<int> block;
                while (true) {
                    int e = edge_stack.back();
                    edge_stack.pop_back();
                    block.insert(edges[e].first);
                    block.insert(edges[e].second);
                    if (e == pe) break;
                }
                blocks.emplace_back(block.begin(), block.end());
            }
        }
        if (disc[1] == -1) return {};

        // Block-vertex tree: vertices 0..n-1, block nodes n..n+B-1.
        std::vector<std::vector<int>> tree(n + blocks.size());
        for (std::size_t k = 0; k < blocks.size(); ++k)
            for (int v : blocks[k]) {
                tree[v].push_back(n + static_cast<int>(k));
                tree[n + k].push_back(v);
            }
        std::vector<int> parent(tree.size(), -2);
        std::queue<int> todo;
        todo.push(0);
        parent[0] = -1;
        while (!todo.empty()) {
            int x = todo.front();
            todo.pop();
            for (int y : tree[x])
                if (parent[y] == -2) {
                    parent[y] = x;
                    todo.push(y);
                }
        }
        std::set<std::string> cut;
        for (int x = parent[1]; x > 0; x = parent[x])
            if (x < n) cut.insert(names[x]);
        return cut;
    }

    /// One triple per line, sorted lexicographically.
    std::string dump() const {
        std::vector<std::string> lines;
        for (const auto& t : triples()) lines.push_back(t.line());
        std::sort(lines.begin(), lines.end());
        std::string out;
        for (const auto& l : lines) out += l + "\n";
        return out;
    }

    /// Loads a dump. Unknown ids are registered: `_:` ids as reified objects, others as named objects.
    void load(std::string_view text) {
        std::istringstream in{std::string(text)};
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto first = line.find_first_not_of(" \t\r");
            if (first == std::string::npos || line[first] == '#') continue;
            Triple t;
            try {
                t = parse_triple(line);
            } catch (const Error& e) {
                throw Error("line " + std::to_string(lineno) + ": " + e.what());
            }
            for (const auto* id : {&t.subject, &t.object}) {
                if (has_entity(*id)) continue;
                if (t.predicate == kIsa && id == &t.object) {
                    declare_class(*id);
                    continue;
                }
                auto& rec = ensure_entity(*id, EntityKind::object);
                if (id->starts_with("_:")) {
                    rec.origin = Origin::reified;
                    rec.depth = 1;
                }
            }
            if (assert_triple(t) == AssertResult::conflict)
                throw Error("line " + std::to_string(lineno) + ": conflicting polarity for " + t.statement());
        }
    }

private:
    struct Stored {
        Polarity polarity;
        Provenance provenance;
    };

    void validate(const Triple& t) const {
        if (!vocab_.predicates.count(t.predicate)) throw Error("unknown predicate '" + t.predicate + "'");
        if (!entities_.count(t.subject)) throw Error("unregistered entity '" + t.subject + "'");
        if (!entities_.count(t.object)) throw Error("unregistered entity '" + t.object + "'");
        if (t.predicate == kIsa && !vocab_.classes.count(t.object))
            throw Error("unknown class '" + t.object + "'");
    }

    static std::string hex_hash(const std::string& s) {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        std::ostringstream out;
        out << std::hex << std::setw(16) << std::setfill('0') << h;
        return out.str().substr(0, 12);
    }

    Vocabulary vocab_;
    std::map<std::string, EntityRecord> entities_;
    std::map<TripleKey, Stored> triples_;
    std::set<TripleKey> by_object_;  // pos triples as (predicate, object, subject)
    std::map<std::string, std::string> reify_index_;
    std::map<TripleKey, Justification> justifications_;
};

}  // namespace schemata
