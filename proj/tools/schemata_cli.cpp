#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "schemata/agent.hpp"

using namespace schemata;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

BeliefStore load_beliefs(const std::string& path) {
    BeliefStore s;
    s.load(slurp(path));
    return s;
}

/// Registers every subject of a perception-style predicate as observed, so NAF applies to it.
NafScope scope_from(const std::vector<std::string>& specs) {
    NafScope scope;
    for (const auto& s : specs) {
        auto colon = s.find(':');
        if (colon == std::string::npos) scope.add(s);
        else scope.add(s.substr(0, colon), s.substr(colon + 1));
    }
    return scope;
}

std::string overlay(const Frame& f, const CellSet& mark) {
    std::string out;
    for (int r = 0; r < f.rows; ++r) {
        for (int c = 0; c < f.cols; ++c) {
            const auto& l = f.label({r, c});
            out += mark.count({r, c}) ? '#' : (l.empty() ? '.' : l.front());
        }
        out += '\n';
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Image-schematic support reasoning in a grid microworld"};
    app.require_subcommand(1);

    std::string config_path, log_path, dump_dir;
    auto* run = app.add_subcommand("run", "Run the perception-reasoning-action loop");
    run->add_option("--config", config_path, "key=value config file")->required()->check(CLI::ExistingFile);
    run->add_option("--log", log_path, "Episode log path (overrides the config)");
    run->add_option("--dump-percepts", dump_dir, "Directory for per-tick percept reports");

    std::string facts, rules = "default";
    int depth = 2;
    bool all = false;
    std::vector<std::string> observed;
    auto* sat = app.add_subcommand("saturate", "Saturate a triple file and print what was derived");
    sat->add_option("facts", facts, "Triple file")->required()->check(CLI::ExistingFile);
    sat->add_option("--rules", rules, "'default' or a rule file");
    sat->add_option("--depth", depth, "Reification depth cap");
    sat->add_option("--observed", observed, "Predicates (or pred:subject) under closed-world negation");
    sat->add_flag("--all", all, "Print the whole store, not only derived triples");

    std::string scenario, goal, mode = "whole", model_path, exemplar_dir;
    std::vector<std::string> placements;
    int warmup = 5;
    auto* plan = app.add_subcommand("plan", "Plan establishing or removing a support relation");
    plan->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    plan->add_option("--goal", goal, "support:<obj>:<target> or unsupport:<obj>")->required();
    plan->add_option("--mode", mode, "whole or part")->check(CLI::IsMember({"whole", "part"}));
    plan->add_option("--model", model_path, "Detector model for part mode")->check(CLI::ExistingFile);
    plan->add_option("--warmup", warmup, "Ticks to run the loop before planning");
    plan->add_option("--place", placements, "obj:row,col pose override applied after warmup");

    int radius = 2, tau = 2;
    std::string out_path;
    auto* train = app.add_subcommand("train-part", "Train a part detector from an exemplar directory");
    train->add_option("--exemplars", exemplar_dir, "Exemplar directory")->required()->check(CLI::ExistingDirectory);
    train->add_option("--out", out_path, "Model output path")->required();
    train->add_option("--radius", radius, "Patch radius");
    train->add_option("--tau", tau, "Acceptance distance");

    std::string object;
    auto* det = app.add_subcommand("detect-part", "Run a part detector on a scenario object");
    det->add_option("--model", model_path, "Detector model")->required()->check(CLI::ExistingFile);
    det->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
    det->add_option("--object", object, "Object id")->required();

    std::string beliefs, a, b;
    auto* deps = app.add_subcommand("deps", "Entities on every path between two entities");
    deps->add_option("a", a)->required();
    deps->add_option("b", b)->required();
    deps->add_option("--beliefs", beliefs, "Belief dump")->required()->check(CLI::ExistingFile);

    std::string pattern;
    auto* expl = app.add_subcommand("explain", "Derivation trees for triples matching a pattern");
    expl->add_option("facts", facts, "Triple file to saturate")->required()->check(CLI::ExistingFile);
    expl->add_option("triple", pattern, "e.g. \"neg exrt mug1 ?\"")->required();
    expl->add_option("--rules", rules, "'default' or a rule file");
    expl->add_option("--observed", observed, "Predicates (or pred:subject) under closed-world negation");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            auto cfg = AgentConfig::load(config_path);
            if (!log_path.empty()) cfg.log = log_path;
            cfg.validate();
            Agent agent(cfg, load_scenario_file(cfg.scenario));
            if (!dump_dir.empty()) std::filesystem::create_directories(dump_dir);
            while (!agent.halted()) {
                agent.tick();
                if (!dump_dir.empty() && agent.world().tick() > 1) {
                    std::ostringstream name;
                    name << "tick_" << std::setw(4) << std::setfill('0') << agent.report().tick << ".txt";
                    std::ofstream(std::filesystem::path(dump_dir) / name.str()) << agent.report().dump();
                }
            }
            if (!cfg.log.empty()) agent.log().write(cfg.log);
            std::size_t supports = agent.log().of_kind("support").size();
            std::cout << "ticks " << agent.world().tick() << "\n"
                      << "support-ticks " << supports << "\n"
                      << "exemplars " << agent.exemplars().size() << "\n"
                      << "halt " << agent.log().of_kind("halt").back().at("reason").get<std::string>() << "\n";
            if (!cfg.log.empty()) std::cout << "log " << cfg.log << "\n";
        } else if (*sat) {
            auto store = load_beliefs(facts);
            auto rep = run_to_fixpoint(store, load_ruleset(rules), scope_from(observed), {depth, 1000, 0});
            for (const auto& t : store.triples())
                if (all || t.provenance.source == Provenance::Source::inferred) std::cout << t.line() << "\n";
            std::cerr << "derived " << rep.derived << " in " << rep.iterations << " rounds\n";
            for (const auto& c : rep.conflicts) std::cerr << "conflict " << c.statement() << "\n";
        } else if (*plan) {
            AgentConfig cfg;
            cfg.max_ticks = std::max(1, warmup);
            cfg.halt_on_quiescence = false;
            Agent agent(cfg, load_scenario(slurp(scenario)));
            agent.run();
            World world = agent.world();
            for (const auto& p : placements) {
                auto colon = p.find(':'), comma = p.find(',');
                if (colon == std::string::npos || comma == std::string::npos) throw Error("--place wants obj:row,col");
                world.place(p.substr(0, colon), {std::stoi(p.substr(colon + 1)), std::stoi(p.substr(comma + 1))});
            }
            DetectorRegistry registry = agent.perception().registry();
            if (!model_path.empty()) {
                auto m = load_model(model_path);
                registry.define(registry.concepts().count(m.concept_name) ? registry.concepts().at(m.concept_name)
                                                                          : mug_supp_by_hook());
                registry.install(m);
            }
            std::vector<std::string> parts;
            std::stringstream gs(goal);
            for (std::string s; std::getline(gs, s, ':');) parts.push_back(s);
            Plan result;
            if (parts.size() == 3 && parts[0] == "support")
                result = plan_support(world, parts[1], parts[2], parse_plan_mode(mode), registry);
            else if (parts.size() == 2 && parts[0] == "unsupport")
                result = plan_unsupport(world, agent.store(), parts[1]);
            else
                throw Error("goal must be support:<obj>:<target> or unsupport:<obj>");
            std::cout << result.str();
        } else if (*train) {
            auto model = train_detector(ExemplarStore::load_dir(exemplar_dir), radius, tau);
            save_model(model, out_path);
            std::cout << "concept " << model.concept_name << "\npositives " << model.positives.size()
                      << "\nnegatives " << model.negatives.size() << "\n";
        } else if (*det) {
            auto model = load_model(model_path);
            auto sc = load_scenario(slurp(scenario));
            auto frame = render(sc.world);
            auto mask = detect(model, frame.mask(object));
            std::cout << "part " << encode_rle(mask) << "\ncells " << mask.size() << "\n" << overlay(frame, mask);
        } else if (*deps) {
            for (const auto& id : load_beliefs(beliefs).dependency_query(a, b)) std::cout << id << "\n";
        } else if (*expl) {
            auto store = load_beliefs(facts);
            run_to_fixpoint(store, load_ruleset(rules), scope_from(observed), {2, 1000, 0});
            Triple q = parse_triple(pattern);
            auto fixed = [](const std::string& s) { return s == "?" || s == "_" ? std::string() : s; };
            int shown = 0;
            store.for_each_match(q.polarity, q.predicate,
                                 fixed(q.subject).empty() ? std::nullopt : std::optional(q.subject),
                                 fixed(q.object).empty() ? std::nullopt : std::optional(q.object),
                                 [&](const std::string& s, const std::string& o) {
                                     Triple t{q.polarity, q.predicate, s, o, {}};
                                     std::cout << explain(store, t).str() << "\n";
                                     ++shown;
                                 });
            if (shown == 0) throw Error("no triple matches '" + pattern + "'");
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
