#pragma once

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "schemata/belief_store.hpp"
#include "schemata/geometry.hpp"

namespace schemata {

/// A functional-part concept: the part of a host playing the suppee role against a partner.
struct ConceptDef {
    std::string name;
    std::string host_class;
    std::string partner_class;
    std::string situation_kind = "DSupp";
    std::string host_role = "suppee";
    std::string partner_role = "supper";

    /// Checks the referenced classes and roles against a vocabulary.
    void validate(const Vocabulary& v) const {
        if (name.empty()) throw Error("concept needs a name");
        for (const auto& c : {host_class, partner_class, situation_kind})
            if (!v.classes.count(c)) throw Error("concept '" + name + "' references unknown class '" + c + "'");
        for (const auto& r : {host_role, partner_role})
            if (!v.predicates.count(r)) throw Error("concept '" + name + "' references unknown role '" + r + "'");
    }

    /// Parses "name:host:partner".
    static ConceptDef parse(const std::string& text) {
        std::vector<std::string> parts;
        std::stringstream in(text);
        std::string p;
        while (std::getline(in, p, ':')) parts.push_back(p);
        if (parts.size() != 3 || parts[0].empty() || parts[1].empty() || parts[2].empty())
            throw Error("concept must be name:host:partner, got '" + text + "'");
        return {parts[0], parts[1], parts[2]};
    }
};

inline ConceptDef mug_supp_by_hook() { return {"MugSuppByHook", "Mug", "Hook"}; }

struct Exemplar {
    int tick = 0;
    std::string object;
    std::string concept_name;
    CellSet host_mask;  ///< frame coordinates
    CellSet part_mask;  ///< frame coordinates, subset of host_mask
    std::string frame_ascii;

    bool operator==(const Exemplar&) const = default;
};

/// Binary occupancy of the host mask over a (2r+1)^2 patch centred on `at`, row-major.
using Descriptor = std::string;

inline Descriptor describe(const CellSet& host, Cell at, int r) {
    Descriptor d;
    d.reserve(static_cast<std::size_t>((2 * r + 1) * (2 * r + 1)));
    for (int dr = -r; dr <= r; ++dr)
        for (int dc = -r; dc <= r; ++dc) d += host.count({at.row + dr, at.col + dc}) ? '1' : '0';
    return d;
}

inline int hamming(const Descriptor& a, const Descriptor& b) {
    if (a.size() != b.size()) throw Error("descriptor size mismatch");
    int n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
    return n;
}

struct DetectorModel {
    std::string concept_name;
    int radius = 2;
    int tau = 2;
    std::set<Descriptor> positives;
    std::set<Descriptor> negatives;

    bool operator==(const DetectorModel&) const = default;

    /// Canonical text form: header, then one "+ bits" / "- bits" line per descriptor.
    std::string save() const {
        std::ostringstream out;
        out << "concept " << concept_name << "\nradius " << radius << "\ntau " << tau << "\n";
        for (const auto& d : positives) out << "+ " << d << "\n";
        for (const auto& d : negatives) out << "- " << d << "\n";
        return out.str();
    }

    static DetectorModel load(const std::string& text) {
        DetectorModel m;
        std::istringstream in(text);
        std::string key, value;
        bool seen_concept = false;
        const auto width = [&] { return static_cast<std::size_t>((2 * m.radius + 1) * (2 * m.radius + 1)); };
        while (in >> key >> value) {
            if (key == "concept") {
                m.concept_name = value;
                seen_concept = true;
            } else if (key == "radius") {
                m.radius = std::stoi(value);
            } else if (key == "tau") {
                m.tau = std::stoi(value);
            } else if (key == "+" || key == "-") {
                if (value.size() != width() || value.find_first_not_of("01") != std::string::npos)
                    throw Error("bad descriptor '" + value + "' in model file");
                (key == "+" ? m.positives : m.negatives).insert(value);
            } else {
                throw Error("unknown model field '" + key + "'");
            }
        }
        if (!seen_concept) throw Error("model file has no concept");
        return m;
    }
};

/// Nearest-descriptor patch classifier. On a descriptor seen both inside and outside
/// a part, the part wins, so training cells are always reproduced.
inline DetectorModel train_detector(const std::vector<Exemplar>& exemplars, int r = 2, int tau = 2) {
    if (exemplars.empty()) throw Error("cannot train on an empty exemplar set");
    if (r < 1 || tau < 0) throw Error("patch radius must be >= 1 and tau >= 0");
    DetectorModel m;
    m.concept_name = exemplars.front().concept_name;
    m.radius = r;
    m.tau = tau;
    for (const auto& e : exemplars) {
        if (e.concept_name != m.concept_name)
            throw Error("mixed concepts in exemplar set: '" + m.concept_name + "' and '" + e.concept_name + "'");
        for (const auto& c : e.host_mask)
            (e.part_mask.count(c) ? m.positives : m.negatives).insert(describe(e.host_mask, c, r));
    }
    for (const auto& d : m.positives) m.negatives.erase(d);
    return m;
}

inline int nearest(const std::set<Descriptor>& set, const Descriptor& d) {
    int best = std::numeric_limits<int>::max();
    for (const auto& s : set) {
        best = std::min(best, hamming(s, d));
        if (best == 0) break;
    }
    return best;
}

/// Cells of `host` whose patch is within tau of a positive and strictly nearer to it than to any negative.
inline CellSet detect(const DetectorModel& m, const CellSet& host) {
    CellSet out;
    for (const auto& c : host) {
        auto d = describe(host, c, m.radius);
        int dp = nearest(m.positives, d);
        if (dp <= m.tau && dp < nearest(m.negatives, d)) out.insert(c);
    }
    return out;
}

/// Trained models by concept, plus the concept definitions that select their hosts.
class DetectorRegistry {
public:
    void define(const ConceptDef& c) { concepts_[c.name] = c; }
    const std::map<std::string, ConceptDef>& concepts() const { return concepts_; }

    void install(DetectorModel m) {
        if (!concepts_.count(m.concept_name)) throw Error("no concept '" + m.concept_name + "' defined");
        models_[m.concept_name] = std::move(m);
    }
    const std::map<std::string, DetectorModel>& models() const { return models_; }
    bool empty() const { return models_.empty(); }

    /// Models whose concept is hosted by objects of `cls`.
    std::vector<const DetectorModel*> for_host(const std::string& cls) const {
        std::vector<const DetectorModel*> out;
        for (const auto& [name, m] : models_)
            if (concepts_.at(name).host_class == cls) out.push_back(&m);
        return out;
    }

private:
    std::map<std::string, ConceptDef> concepts_;
    std::map<std::string, DetectorModel> models_;
};

inline void save_model(const DetectorModel& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model '" + path + "'");
    out << m.save();
}

inline DetectorModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open model '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return DetectorModel::load(buf.str());
}

}  // namespace schemata
