#pragma once

#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "schemata/belief_store.hpp"

namespace schemata {

struct Term {
    bool is_var = false;
    std::string name;  ///< variable name without '?', or a constant

    static Term var(std::string n) { return {true, std::move(n)}; }
    static Term constant(std::string n) { return {false, std::move(n)}; }
    bool operator==(const Term&) const = default;
    std::string str() const { return is_var ? "?" + name : name; }
};

/// A binary atom. `Class(x)` is read as `isa(x, Class)`.
struct Atom {
    std::string predicate;
    Term subject;
    Term object;
    bool operator==(const Atom&) const = default;

    bool is_class_atom() const { return predicate == kIsa && !object.is_var; }

    std::string str() const {
        if (is_class_atom()) return object.name + "(" + subject.str() + ")";
        return predicate + "(" + subject.str() + "," + object.str() + ")";
    }
};

struct Builtin {
    enum class Op { opp, not_equal };
    Op op = Op::opp;
    Term lhs;
    Term rhs;
    bool operator==(const Builtin&) const = default;

    std::string str() const {
        if (op == Op::opp) return "opp(" + lhs.str() + "," + rhs.str() + ")";
        return lhs.str() + " != " + rhs.str();
    }
};

struct NewEntity {
    std::string var;
    EntityKind kind = EntityKind::object;
    std::vector<std::string> tags;
    bool operator==(const NewEntity&) const = default;
};

struct HeadAtom {
    Polarity polarity = Polarity::pos;
    Atom atom;
    bool operator==(const HeadAtom&) const = default;
};

struct SourceLoc {
    int line = 0;
    int column = 0;
};

struct Rule {
    std::string id;
    std::vector<Atom> body_pos;
    std::vector<Atom> body_neg;
    std::vector<Builtin> builtins;
    std::vector<NewEntity> head_new;
    std::vector<HeadAtom> head;
    SourceLoc loc;

    bool operator==(const Rule& o) const {
        return id == o.id && body_pos == o.body_pos && body_neg == o.body_neg && builtins == o.builtins &&
               head_new == o.head_new && head == o.head;
    }

    std::string str() const {
        std::string s = "rule " + id + ": ";
        bool first = true;
        auto sep = [&] {
            if (!first) s += ", ";
            first = false;
        };
        for (const auto& a : body_pos) sep(), s += a.str();
        for (const auto& a : body_neg) sep(), s += "not " + a.str();
        for (const auto& b : builtins) sep(), s += b.str();
        s += " =>";
        for (const auto& n : head_new) {
            s += " new ?" + n.var + ": " + std::string(to_string(n.kind)) + " [";
            for (std::size_t i = 0; i < n.tags.size(); ++i) s += (i ? ", " : "") + n.tags[i];
            s += "],";
        }
        for (std::size_t i = 0; i < head.size(); ++i) {
            s += i ? ", " : " ";
            if (head[i].polarity == Polarity::neg) s += "-";
            s += head[i].atom.str();
        }
        return s;
    }
};

class ParseError : public Error {
public:
    ParseError(SourceLoc loc, const std::string& msg)
        : Error(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + msg), loc_(loc) {}
    SourceLoc location() const { return loc_; }

private:
    SourceLoc loc_;
};

namespace detail {

struct Token {
    enum class Kind { word, var, punct, arrow, neq, end };
    Kind kind = Kind::end;
    std::string text;
    SourceLoc loc;
};

inline std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    std::size_t i = 0;
    auto advance = [&](std::size_t n) {
        for (std::size_t k = 0; k < n; ++k, ++i) {
            if (src[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
    };
    auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    while (i < src.size()) {
        char c = src[i];
        SourceLoc here{line, col};
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
        } else if (c == '#') {
            while (i < src.size() && src[i] != '\n') advance(1);
        } else if (c == '=' && i + 1 < src.size() && src[i + 1] == '>') {
            out.push_back({Token::Kind::arrow, "=>", here});
            advance(2);
        } else if (c == '!' && i + 1 < src.size() && src[i + 1] == '=') {
            out.push_back({Token::Kind::neq, "!=", here});
            advance(2);
        } else if (c == '?') {
            std::size_t j = i + 1;
            while (j < src.size() && is_word(src[j])) ++j;
            if (j == i + 1) throw ParseError(here, "expected variable name after '?'");
            out.push_back({Token::Kind::var, std::string(src.substr(i + 1, j - i - 1)), here});
            advance(j - i);
        } else if (is_word(c)) {
            std::size_t j = i;
            while (j < src.size() && is_word(src[j])) ++j;
            out.push_back({Token::Kind::word, std::string(src.substr(i, j - i)), here});
            advance(j - i);
        } else if (std::string_view("(),:[]-").find(c) != std::string_view::npos) {
            out.push_back({Token::Kind::punct, std::string(1, c), here});
            advance(1);
        } else {
            throw ParseError(here, std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back({Token::Kind::end, "", {line, col}});
    return out;
}

class Parser {
public:
    explicit Parser(std::string_view src) : toks_(tokenize(src)) {}

    std::vector<Rule> parse_all() {
        std::vector<Rule> rules;
        std::set<std::string> ids;
        while (peek().kind != Token::Kind::end) {
            auto r = parse_rule();
            if (!ids.insert(r.id).second) throw ParseError(r.loc, "duplicate rule id '" + r.id + "'");
            rules.push_back(std::move(r));
        }
        return rules;
    }

private:
    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

    bool is_punct(const Token& t, char c) const { return t.kind == Token::Kind::punct && t.text[0] == c; }

    void expect_punct(char c) {
        const auto& t = next();
        if (!is_punct(t, c)) throw ParseError(t.loc, std::string("expected '") + c + "', found " + describe(t));
    }

    std::string expect_word(const char* what) {
        const auto& t = next();
        if (t.kind != Token::Kind::word) throw ParseError(t.loc, std::string("expected ") + what + ", found " + describe(t));
        return t.text;
    }

    static std::string describe(const Token& t) {
        switch (t.kind) {
            case Token::Kind::end: return "end of input";
            case Token::Kind::var: return "'?" + t.text + "'";
            default: return "'" + t.text + "'";
        }
    }

    Term parse_term() {
        const auto& t = next();
        if (t.kind == Token::Kind::var) return Term::var(t.text);
        if (t.kind == Token::Kind::word) return Term::constant(t.text);
        throw ParseError(t.loc, "expected term, found " + describe(t));
    }

    Atom parse_atom() {
        auto name_tok = peek();
        auto name = expect_word("atom");
        expect_punct('(');
        Term first = parse_term();
        if (is_punct(peek(), ')')) {
            next();
            return {std::string(kIsa), first, Term::constant(name)};
        }
        expect_punct(',');
        Term second = parse_term();
        expect_punct(')');
        if (name == "opp") throw ParseError(name_tok.loc, "'opp' is a builtin and cannot be used as an atom here");
        return {name, first, second};
    }

    bool at_builtin() const {
        const auto& t = peek();
        if (t.kind == Token::Kind::word && t.text == "opp" && is_punct(peek(1), '(')) return true;
        return (t.kind == Token::Kind::var || t.kind == Token::Kind::word) && peek(1).kind == Token::Kind::neq;
    }

    Builtin parse_builtin() {
        if (peek().kind == Token::Kind::word && peek().text == "opp") {
            next();
            expect_punct('(');
            Term a = parse_term();
            expect_punct(',');
            Term b = parse_term();
            expect_punct(')');
            return {Builtin::Op::opp, a, b};
        }
        Term a = parse_term();
        next();  // !=
        Term b = parse_term();
        return {Builtin::Op::not_equal, a, b};
    }

    Rule parse_rule() {
        Rule r;
        const auto& kw = next();
        if (kw.kind != Token::Kind::word || kw.text != "rule") throw ParseError(kw.loc, "expected 'rule', found " + describe(kw));
        r.loc = kw.loc;
        r.id = expect_word("rule id");
        expect_punct(':');

        enum class Section { pos, neg, builtin } section = Section::pos;
        std::vector<SourceLoc> neg_locs, builtin_locs;
        while (true) {
            const auto start = peek();
            if (at_builtin()) {
                section = Section::builtin;
                builtin_locs.push_back(start.loc);
                r.builtins.push_back(parse_builtin());
            } else if (start.kind == Token::Kind::word && start.text == "not" && peek(1).kind == Token::Kind::word) {
                if (section == Section::builtin) throw ParseError(start.loc, "negated atoms must precede builtins");
                section = Section::neg;
                next();
                neg_locs.push_back(peek().loc);
                r.body_neg.push_back(parse_atom());
            } else {
                if (section != Section::pos)
                    throw ParseError(start.loc, "positive atoms must precede negated atoms and builtins");
                r.body_pos.push_back(parse_atom());
            }
            if (is_punct(peek(), ',')) {
                next();
                continue;
            }
            const auto& arrow = next();
            if (arrow.kind != Token::Kind::arrow) throw ParseError(arrow.loc, "expected ',' or '=>', found " + describe(arrow));
            break;
        }
        if (r.body_pos.empty()) throw ParseError(r.loc, "rule '" + r.id + "' needs at least one positive body atom");

        std::vector<SourceLoc> head_locs;
        while (peek().kind == Token::Kind::word && peek().text == "new" && peek(1).kind == Token::Kind::var) {
            next();
            NewEntity n;
            n.var = next().text;
            expect_punct(':');
            auto kind_tok = peek();
            std::string kind = expect_word("entity kind");
            if (kind == "mask" && is_punct(peek(), '-')) {
                next();
                kind += "-" + expect_word("entity kind");
            }
            auto k = parse_entity_kind(kind);
            if (!k) throw ParseError(kind_tok.loc, "unknown entity kind '" + kind + "'");
            n.kind = *k;
            expect_punct('[');
            if (!is_punct(peek(), ']')) {
                n.tags.push_back(expect_word("class tag"));
                while (is_punct(peek(), ',')) {
                    next();
                    n.tags.push_back(expect_word("class tag"));
                }
            }
            expect_punct(']');
            expect_punct(',');
            r.head_new.push_back(std::move(n));
        }
        while (true) {
            HeadAtom h;
            if (is_punct(peek(), '-')) {
                next();
                h.polarity = Polarity::neg;
            }
            head_locs.push_back(peek().loc);
            h.atom = parse_atom();
            r.head.push_back(std::move(h));
            if (!is_punct(peek(), ',')) break;
            next();
        }
        check_safety(r, neg_locs, builtin_locs, head_locs);
        return r;
    }

    static void check_safety(const Rule& r, const std::vector<SourceLoc>& neg_locs,
                             const std::vector<SourceLoc>& builtin_locs, const std::vector<SourceLoc>& head_locs) {
        std::set<std::string> bound;
        auto collect = [&](const Atom& a) {
            for (const auto* t : {&a.subject, &a.object})
                if (t->is_var) bound.insert(t->name);
        };
        for (const auto& a : r.body_pos) collect(a);
        for (std::size_t i = 0; i < r.builtins.size(); ++i) {
            const auto& b = r.builtins[i];
            bool lb = !b.lhs.is_var || bound.count(b.lhs.name);
            bool rb = !b.rhs.is_var || bound.count(b.rhs.name);
            if (b.op == Builtin::Op::opp && (lb || rb)) {
                if (b.lhs.is_var) bound.insert(b.lhs.name);
                if (b.rhs.is_var) bound.insert(b.rhs.name);
                continue;
            }
            if (!lb || !rb)
                throw ParseError(builtin_locs[i], "builtin '" + b.str() + "' uses a variable not bound by the body");
        }
        for (std::size_t i = 0; i < r.body_neg.size(); ++i) {
            const auto& a = r.body_neg[i];
            for (const auto* t : {&a.subject, &a.object})
                if (t->is_var && !bound.count(t->name))
                    throw ParseError(neg_locs[i], "unsafe negation: variable ?" + t->name +
                                                      " of 'not " + a.str() + "' is not bound by a positive atom");
        }
        std::set<std::string> fresh;
        for (const auto& n : r.head_new) {
            if (bound.count(n.var)) throw ParseError(r.loc, "fresh variable ?" + n.var + " is already bound by the body");
            if (!fresh.insert(n.var).second) throw ParseError(r.loc, "fresh variable ?" + n.var + " declared twice");
        }
        for (std::size_t i = 0; i < r.head.size(); ++i) {
            const auto& a = r.head[i].atom;
            for (const auto* t : {&a.subject, &a.object})
                if (t->is_var && !bound.count(t->name) && !fresh.count(t->name))
                    throw ParseError(head_locs[i], "unbound head variable ?" + t->name + " in '" + a.str() + "'");
        }
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses rule DSL text; throws ParseError with line:column on any syntax or safety error.
inline std::vector<Rule> parse_rules(std::string_view source) { return detail::Parser(source).parse_all(); }

inline std::string print_rules(const std::vector<Rule>& rules) {
    std::string out;
    for (const auto& r : rules) out += r.str() + "\n";
    return out;
}

}  // namespace schemata
