#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "schemata/belief_store.hpp"
#include "schemata/detector.hpp"
#include "schemata/engine.hpp"
#include "schemata/microworld.hpp"
#include "schemata/perception.hpp"

namespace schemata {

/// Captures an exemplar when the store holds a binding of the concept's defining pattern:
/// a support description with host and partner in their roles, a contact between the
/// partner and a part of the host, and the partner below that part. The part mask is the
/// perceived contact mask clipped to the host.
inline std::optional<Exemplar> capture_exemplar(const BeliefStore& store, const PerceptReport& report,
                                                const Frame& frame, const ConceptDef& concept_def) {
    auto v = [](const char* n) { return Term::var(n); };
    auto k = [](const std::string& n) { return Term::constant(n); };
    const std::string isa(kIsa);
    const std::vector<Atom> pattern = {
        {isa, v("s"), k(concept_def.situation_kind)},
        {concept_def.host_role, v("s"), v("m")},
        {concept_def.partner_role, v("s"), v("h")},
        {isa, v("m"), k(concept_def.host_class)},
        {isa, v("h"), k(concept_def.partner_class)},
        {"hasPrt", v("m"), v("x")},
        {isa, v("c"), k("Con")},
        {"hasPrtcp", v("c"), v("x")},
        {"hasPrtcp", v("c"), v("h")},
        {"below", v("h"), v("x")},
    };
    for (const auto& b : match_conjunction(store, pattern)) {
        const auto& m = b.at("m");
        const auto& h = b.at("h");
        const CellSet* mask = nullptr;
        if (auto it = report.contact_masks.find({m, h}); it != report.contact_masks.end()) mask = &it->second;
        else if (auto jt = report.contact_masks.find({h, m}); jt != report.contact_masks.end()) mask = &jt->second;
        if (!mask || !frame.masks.count(m)) continue;
        Exemplar ex;
        ex.tick = frame.tick;
        ex.object = m;
        ex.concept_name = concept_def.name;
        ex.host_mask = frame.mask(m);
        ex.part_mask = intersect(*mask, ex.host_mask);
        ex.frame_ascii = frame.ascii();
        if (ex.part_mask.empty()) continue;
        return ex;
    }
    return std::nullopt;
}

inline std::string serialize_exemplar(const Exemplar& e) {
    std::ostringstream out;
    out << "concept " << e.concept_name << "\nobject " << e.object << "\ntick " << e.tick << "\nhost "
        << encode_rle(e.host_mask) << "\npart " << encode_rle(e.part_mask) << "\nframe\n"
        << e.frame_ascii;
    return out.str();
}

inline Exemplar parse_exemplar(const std::string& text) {
    Exemplar e;
    std::istringstream in(text);
    std::string line;
    bool have[5] = {};
    while (std::getline(in, line)) {
        if (line == "frame") {
            std::string rest((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
            e.frame_ascii = rest;
            break;
        }
        auto sp = line.find(' ');
        auto key = line.substr(0, sp);
        auto val = sp == std::string::npos ? std::string() : line.substr(sp + 1);
        if (key == "concept") e.concept_name = val, have[0] = true;
        else if (key == "object") e.object = val, have[1] = true;
        else if (key == "tick") e.tick = std::stoi(val), have[2] = true;
        else if (key == "host") e.host_mask = decode_rle(val), have[3] = true;
        else if (key == "part") e.part_mask = decode_rle(val), have[4] = true;
        else throw Error("unknown exemplar field '" + key + "'");
    }
    for (bool h : have)
        if (!h) throw Error("exemplar file is missing a field");
    for (const auto& c : e.part_mask)
        if (!e.host_mask.count(c)) throw Error("exemplar part mask is not inside its host");
    return e;
}

/// Directory of exemplar files, one per capture, named in capture order.
class ExemplarStore {
public:
    ExemplarStore() = default;
    /// Files already in `dir` are loaded unless `load_existing` is false, in which case
    /// they are deleted so the directory only ever holds this store's captures.
    explicit ExemplarStore(std::filesystem::path dir, bool load_existing = true) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
        if (load_existing) {
            items_ = load_dir(dir_);
            return;
        }
        for (const auto& f : std::filesystem::directory_iterator(dir_))
            if (f.path().extension() == ".ex") std::filesystem::remove(f.path());
    }

    const std::vector<Exemplar>& items() const { return items_; }
    std::size_t size() const { return items_.size(); }

    std::vector<Exemplar> for_concept(const std::string& name) const {
        std::vector<Exemplar> out;
        for (const auto& e : items_)
            if (e.concept_name == name) out.push_back(e);
        return out;
    }

    void append(const Exemplar& e) {
        items_.push_back(e);
        if (dir_.empty()) return;
        std::ostringstream name;
        name << std::setw(5) << std::setfill('0') << items_.size() << "_" << e.concept_name << ".ex";
        std::ofstream out(dir_ / name.str());
        if (!out) throw Error("cannot write exemplar to '" + dir_.string() + "'");
        out << serialize_exemplar(e);
    }

    static std::vector<Exemplar> load_dir(const std::filesystem::path& dir) {
        if (!std::filesystem::is_directory(dir)) throw Error("no exemplar directory '" + dir.string() + "'");
        std::vector<std::filesystem::path> files;
        for (const auto& f : std::filesystem::directory_iterator(dir))
            if (f.path().extension() == ".ex") files.push_back(f.path());
        std::sort(files.begin(), files.end());
        std::vector<Exemplar> out;
        for (const auto& f : files) {
            std::ifstream in(f);
            std::stringstream buf;
            buf << in.rdbuf();
            try {
                out.push_back(parse_exemplar(buf.str()));
            } catch (const Error& e) {
                throw Error(f.filename().string() + ": " + e.what());
            }
        }
        return out;
    }

private:
    std::filesystem::path dir_;
    std::vector<Exemplar> items_;
};

}  // namespace schemata
