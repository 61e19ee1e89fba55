#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>

#include "schemata/belief_store.hpp"

namespace schemata {

/// A request to perception: (p, s, o) where an empty object means "against all objects".
struct PerceptionQuery {
    enum class Kind { relative_movement, contact };
    Kind kind = Kind::contact;
    std::string subject;
    std::optional<std::string> object;

    auto operator<=>(const PerceptionQuery&) const = default;

    std::string str() const {
        std::string s = kind == Kind::contact ? "contact" : "relativeMovement";
        return s + "(" + subject + "," + object.value_or("_") + ")";
    }

    /// Accepts `contact:s:o`, `relativeMovement:s:o`, with `_` for a blank object.
    static PerceptionQuery parse(std::string_view text) {
        auto first = text.find(':');
        auto second = first == std::string_view::npos ? first : text.find(':', first + 1);
        if (second == std::string_view::npos) throw Error("malformed query '" + std::string(text) + "'");
        PerceptionQuery q;
        auto kind = text.substr(0, first);
        if (kind == "contact") q.kind = Kind::contact;
        else if (kind == "relativeMovement") q.kind = Kind::relative_movement;
        else throw Error("unknown query kind '" + std::string(kind) + "'");
        q.subject = std::string(text.substr(first + 1, second - first - 1));
        auto obj = text.substr(second + 1);
        if (!obj.empty() && obj != "_") q.object = std::string(obj);
        if (q.subject.empty()) throw Error("query without subject: '" + std::string(text) + "'");
        return q;
    }
};

inline PerceptionQuery relative_movement(std::string s, std::optional<std::string> o = std::nullopt) {
    return {PerceptionQuery::Kind::relative_movement, std::move(s), std::move(o)};
}
inline PerceptionQuery contact_query(std::string s, std::optional<std::string> o = std::nullopt) {
    return {PerceptionQuery::Kind::contact, std::move(s), std::move(o)};
}

}  // namespace schemata
