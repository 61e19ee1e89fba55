#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "schemata/belief_store.hpp"
#include "schemata/detector.hpp"
#include "schemata/engine.hpp"
#include "schemata/exemplar.hpp"
#include "schemata/microworld.hpp"
#include "schemata/perception.hpp"
#include "schemata/planner.hpp"
#include "schemata/query.hpp"
#include "schemata/support_theory.hpp"

namespace schemata {

struct AgentConfig {
    std::string scenario;
    std::string rules = "default";
    int max_ticks = 30;
    int patch_radius = 2;
    int tau = 2;
    int rho = 1;
    int horizon = 20;
    int reify_depth = 2;
    std::vector<ConceptDef> concepts;
    std::vector<PerceptionQuery> standing_queries;
    std::string exemplar_dir;
    std::string log;
    bool halt_on_quiescence = true;

    /// Parses a flat key=value file. `#` starts a comment; `concept` and `standing_query` repeat.
    static AgentConfig parse(const std::string& text) {
        AgentConfig c;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        auto to_int = [&](const std::string& k, const std::string& v) {
            try {
                std::size_t used = 0;
                int x = std::stoi(v, &used);
                if (used != v.size()) throw std::invalid_argument(v);
                return x;
            } catch (const std::exception&) {
                throw Error("config line " + std::to_string(lineno) + ": " + k + " needs an integer, got '" + v + "'");
            }
        };
        while (std::getline(in, line)) {
            ++lineno;
            if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
            auto eq = line.find('=');
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(" \t\r"));
                s.erase(s.find_last_not_of(" \t\r") + 1);
                return s;
            };
            if (trim(line).empty()) continue;
            if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key=value");
            auto k = trim(line.substr(0, eq));
            auto v = trim(line.substr(eq + 1));
            if (k == "scenario") c.scenario = v;
            else if (k == "rules") c.rules = v;
            else if (k == "max_ticks") c.max_ticks = to_int(k, v);
            else if (k == "patch_radius") c.patch_radius = to_int(k, v);
            else if (k == "tau") c.tau = to_int(k, v);
            else if (k == "rho") c.rho = to_int(k, v);
            else if (k == "horizon") c.horizon = to_int(k, v);
            else if (k == "reify_depth") c.reify_depth = to_int(k, v);
            else if (k == "concept") c.concepts.push_back(ConceptDef::parse(v));
            else if (k == "standing_query") c.standing_queries.push_back(PerceptionQuery::parse(v));
            else if (k == "exemplar_dir") c.exemplar_dir = v;
            else if (k == "log") c.log = v;
            else if (k == "halt_on_quiescence") {
                if (v != "true" && v != "false") throw Error("halt_on_quiescence must be true or false");
                c.halt_on_quiescence = v == "true";
            } else {
                throw Error("config line " + std::to_string(lineno) + ": unknown key '" + k + "'");
            }
        }
        return c;
    }

    static AgentConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open config '" + path + "'");
        std::stringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    /// Numeric parameters positive, files present. Fills in the default concept.
    void validate(bool need_scenario = true) {
        for (auto [name, v] : {std::pair{"max_ticks", max_ticks}, {"patch_radius", patch_radius},
                               {"rho", rho}, {"horizon", horizon}, {"reify_depth", reify_depth}})
            if (v <= 0) throw Error(std::string(name) + " must be positive");
        if (tau < 0) throw Error("tau must not be negative");
        if (need_scenario && !std::filesystem::exists(scenario)) throw Error("scenario '" + scenario + "' not found");
        if (rules != "default" && !std::filesystem::exists(rules)) throw Error("rules '" + rules + "' not found");
        if (concepts.empty()) concepts.push_back(mug_supp_by_hook());
        for (const auto& c : concepts) c.validate(Vocabulary::standard());
    }
};

/// Line-delimited JSON records, each with `tick` and `kind`. Keys are sorted, so the
/// text is a pure function of the records.
class EpisodeLog {
public:
    void add(int tick, const std::string& kind, nlohmann::json payload = nlohmann::json::object()) {
        payload["tick"] = tick;
        payload["kind"] = kind;
        records_.push_back(std::move(payload));
    }

    const std::vector<nlohmann::json>& records() const { return records_; }

    std::vector<nlohmann::json> of_kind(const std::string& kind) const {
        std::vector<nlohmann::json> out;
        for (const auto& r : records_)
            if (r.at("kind") == kind) out.push_back(r);
        return out;
    }

    std::string str() const {
        std::string out;
        for (const auto& r : records_) out += r.dump() + "\n";
        return out;
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw Error("cannot write log '" + path + "'");
        out << str();
    }

private:
    std::vector<nlohmann::json> records_;
};

namespace detail {

inline std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string l;
    while (std::getline(in, l)) out.push_back(l);
    return out;
}

inline std::set<std::string> statements(const BeliefStore& s) {
    std::set<std::string> out;
    for (const auto& t : s.triples()) out.insert(t.statement());
    return out;
}

}  // namespace detail

/// The perception-reasoning-action loop, one tick per call.
class Agent {
public:
    Agent(AgentConfig cfg, Scenario sc)
        : cfg_(std::move(cfg)),
          world_(std::move(sc.world)),
          rules_(load_ruleset(cfg_.rules)),
          perception_(PerceptionOptions{cfg_.rho}),
          exemplars_(cfg_.exemplar_dir.empty() ? ExemplarStore() : ExemplarStore(cfg_.exemplar_dir, false)) {
        cfg_.validate(false);
        standing_ = sc.standing_queries;
        standing_.insert(standing_.end(), cfg_.standing_queries.begin(), cfg_.standing_queries.end());
        goals_ = sc.goals;
        for (const auto& c : cfg_.concepts) perception_.registry().define(c);
        for (const auto& g : goals_) {
            world_.body(g.object);
            if (g.kind == Goal::Kind::support) world_.body(g.target);
        }
    }

    bool halted() const { return halted_; }
    const World& world() const { return world_; }
    const BeliefStore& store() const { return store_; }
    const PerceptReport& report() const { return report_; }
    const EpisodeLog& log() const { return log_; }
    const ExemplarStore& exemplars() const { return exemplars_; }
    const Perception& perception() const { return perception_; }
    const std::set<PerceptionQuery>& queries() const { return perception_.pending(); }

    /// Runs one tick; returns false once the loop has halted.
    bool tick() {
        if (halted_) return false;
        const int t = world_.tick();
        try {
            run_tick(t);
        } catch (const Error& e) {
            throw Error("tick " + std::to_string(t) + ": " + e.what());
        }
        return !halted_;
    }

    void run() {
        while (tick()) {
        }
    }

private:
    void run_tick(int t) {
        const Frame frame = render(world_);
        nlohmann::json poses = nlohmann::json::object();
        for (const auto& [id, b] : world_.bodies()) poses[id] = {b.pose.row, b.pose.col};
        log_.add(t, "frame", {{"ascii", detail::lines_of(frame.ascii())}, {"poses", poses}});

        const auto answered = perception_.pending();
        report_ = PerceptReport{};
        report_.tick = t;
        if (prev_frame_) {
            report_ = perception_.perceive(*prev_frame_, frame);
            log_.add(t, "percepts", {{"report", detail::lines_of(report_.dump())}});
        }

        BeliefStore next;
        for (const auto& [id, b] : world_.bodies()) {
            next.declare_class(b.spec.class_name);
            next.register_entity(id, EntityKind::object);
            next.assert_triple(pos(std::string(kIsa), id, b.spec.class_name));
            next.assert_triple(pos(std::string(kIsa), id, b.spec.fixed ? "Fixed" : "Obj"));
        }
        for (const auto& tr : report_.triples) next.assert_triple(tr);
        for (const auto& [k, m] : report_.contact_masks)
            next.assert_triple(pos("hasContactMask", k.first, k.second, Provenance::perceived(t)));
        if (prev_frame_) {
            auto persisted = persist_schemas(store_, report_.triples);
            inject(next, persisted);
            nlohmann::json kept = nlohmann::json::array(), dropped = nlohmann::json::array();
            for (const auto& d : persisted.kept) kept.push_back({d.situation, d.suppee, d.supper});
            for (const auto& d : persisted.dropped)
                dropped.push_back({d.description.situation, d.description.suppee, d.description.supper, d.reason});
            if (!kept.empty() || !dropped.empty()) log_.add(t, "persisted", {{"kept", kept}, {"dropped", dropped}});
        }
        for (const auto& g : goals_) {
            if (g.tick > t) continue;
            if (g.kind == Goal::Kind::support) next.assert_triple(pos("goalSupportedBy", g.object, g.target));
            else next.assert_triple(pos(std::string(kIsa), g.object, "UnsupportGoal"));
        }

        NafScope scope;
        for (const auto& q : answered) {
            if (q.kind == PerceptionQuery::Kind::relative_movement)
                for (const auto* p : {"movDir", "stillness", "approaches", "departs"}) scope.add(p, q.subject);
            else
                scope.add("contacts", q.subject);
        }
        auto rep = run_to_fixpoint(next, rules_, scope, {cfg_.reify_depth, 1000, t});
        nlohmann::json derived = nlohmann::json::array();
        for (const auto& tr : next.triples())
            if (tr.provenance.source == Provenance::Source::inferred) derived.push_back(tr.statement());
        nlohmann::json conflicts = nlohmann::json::array();
        for (const auto& c : rep.conflicts) conflicts.push_back(c.statement());
        log_.add(t, "saturation",
                 {{"iterations", rep.iterations}, {"derived", derived}, {"conflicts", conflicts}});
        const auto previous = detail::statements(store_);
        store_ = std::move(next);

        nlohmann::json supports = nlohmann::json::array();
        for (const auto& d : support_descriptions(store_)) supports.push_back({d.situation, d.suppee, d.supper});
        if (!supports.empty()) log_.add(t, "support", {{"descriptions", supports}});

        for (const auto& c : cfg_.concepts) {
            auto ex = capture_exemplar(store_, report_, frame, c);
            if (!ex) continue;
            exemplars_.append(*ex);
            log_.add(t, "exemplar",
                     {{"concept", c.name}, {"object", ex->object}, {"part", encode_rle(ex->part_mask)}});
            auto model = train_detector(exemplars_.for_concept(c.name), cfg_.patch_radius, cfg_.tau);
            log_.add(t, "model",
                     {{"concept", c.name}, {"positives", model.positives.size()}, {"negatives", model.negatives.size()}});
            perception_.registry().install(std::move(model));
        }

        handle_goals(t);

        auto queries = emit_queries(store_, standing_);
        nlohmann::json qs = nlohmann::json::array();
        for (const auto& q : queries) qs.push_back(q.str());
        log_.add(t, "queries", {{"queries", qs}});
        perception_.submit_queries(std::move(queries));

        prev_frame_ = frame;
        world_ = step(std::move(world_));
        if (!world_.events().empty()) log_.add(t, "world", {{"events", world_.events()}});

        if (world_.tick() >= cfg_.max_ticks) halt(t, "max_ticks");
        else if (cfg_.halt_on_quiescence && quiescent() && previous == detail::statements(store_))
            halt(t, "quiescence");
    }

    void handle_goals(int t) {
        std::vector<Goal> remaining;
        for (std::size_t i = 0; i < goals_.size(); ++i) {
            const auto& g = goals_[i];
            if (g.tick > t) {
                remaining.push_back(g);
                continue;
            }
            try {
                Plan plan = g.kind == Goal::Kind::support
                                ? plan_support(world_, g.object, g.target, parse_plan_mode(g.mode),
                                               perception_.registry(), cfg_.horizon)
                                : plan_unsupport(world_, store_, g.object, cfg_.horizon);
                for (const auto& e : plan.script) world_.script().push_back(e);
                log_.add(t, "plan",
                         {{"goal", g.kind == Goal::Kind::support ? "support" : "unsupport"},
                          {"object", g.object},
                          {"target", g.target},
                          {"plan", detail::lines_of(plan.str())}});
            } catch (const Error& e) {
                if (deferred_.insert(i).second)
                    log_.add(t, "plan-deferred", {{"object", g.object}, {"reason", e.what()}});
                remaining.push_back(g);
            }
        }
        if (remaining.size() != goals_.size()) deferred_.clear();
        goals_ = std::move(remaining);
    }

    bool quiescent() const {
        if (!goals_.empty()) return false;
        for (const auto& e : world_.script())
            if (e.tick >= world_.tick()) return false;
        for (const auto& [id, b] : world_.bodies())
            if (!b.spec.fixed && !is_settled(world_, id, cfg_.horizon)) return false;
        return true;
    }

    void halt(int t, const std::string& reason) {
        halted_ = true;
        log_.add(t, "halt", {{"reason", reason}});
        log_.add(t, "final", {{"store", detail::lines_of(store_.dump())}});
    }

    AgentConfig cfg_;
    World world_;
    std::vector<Rule> rules_;
    Perception perception_;
    ExemplarStore exemplars_;
    std::vector<PerceptionQuery> standing_;
    std::vector<Goal> goals_;
    std::set<std::size_t> deferred_;
    BeliefStore store_;
    PerceptReport report_;
    std::optional<Frame> prev_frame_;
    EpisodeLog log_;
    bool halted_ = false;
};

/// Runs the scenario to completion and writes the log if the config names a file.
inline EpisodeLog run_loop(AgentConfig cfg, Scenario sc) {
    Agent agent(cfg, std::move(sc));
    agent.run();
    if (!cfg.log.empty()) agent.log().write(cfg.log);
    return agent.log();
}

inline EpisodeLog run_loop(AgentConfig cfg) {
    cfg.validate();
    return run_loop(cfg, load_scenario_file(cfg.scenario));
}

}  // namespace schemata
