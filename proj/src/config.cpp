#include "robust_snell/config.hpp"

#include "robust_snell/errors.hpp"
#include "robust_snell/snell.hpp"

#include <fmt/format.h>

#include <fstream>

namespace robust_snell {

using nlohmann::json;

namespace {

const json& require_key(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) {
        throw InputError(fmt::format("{}: missing \"{}\"", where, key));
    }
    return obj.at(key);
}

double number(const json& value, const std::string& what) {
    if (!value.is_number()) {
        throw InputError(fmt::format("{} must be a number", what));
    }
    return value.get<double>();
}

EventTree parse_tree(const json& block, AdaptedFamily& payoff) {
    const json& nodes = require_key(block, "nodes", "tree");
    if (!nodes.is_array() || nodes.empty()) {
        throw InputError("tree: \"nodes\" must be a nonempty array");
    }
    int horizon = 0;
    for (const auto& n : nodes) {
        if (n.contains("time")) {
            horizon = std::max(horizon, n.at("time").get<int>());
        }
    }
    if (block.contains("horizon")) {
        horizon = block.at("horizon").get<int>();
    }
    EventTree tree(horizon);
    std::vector<double> values;
    for (const auto& n : nodes) {
        const std::string id = require_key(n, "id", "tree node").get<std::string>();
        const std::string where = fmt::format("tree node '{}'", id);
        std::map<std::string, double> states;
        if (n.contains("states")) {
            for (const auto& [label, value] : n.at("states").items()) {
                states[label] = number(value, fmt::format("{} state '{}'", where, label));
            }
        }
        const bool is_root = !n.contains("parent") || n.at("parent").is_null();
        if (is_root) {
            tree.add_root(id, std::move(states));
            if (n.contains("time") && n.at("time").get<int>() != 0) {
                throw InputError(fmt::format("{}: root time must be 0", where));
            }
        } else {
            const std::string parent_id = n.at("parent").get<std::string>();
            const auto parent = tree.find(parent_id);
            if (!parent) {
                throw InputError(fmt::format("{}: parent '{}' must be listed before its children",
                                             where, parent_id));
            }
            const int time = n.contains("time") ? n.at("time").get<int>()
                                                : tree.node(*parent).time + 1;
            const double q = number(require_key(n, "q", where), where + " q");
            tree.add_node(id, time, *parent, q, std::move(states));
        }
        values.push_back(number(require_key(n, "Y", where), where + " Y"));
    }
    payoff = AdaptedFamily(std::move(values));
    return tree;
}

CrrParams parse_crr(const json& block) {
    const std::string where = "crr";
    CrrParams p;
    p.S0 = number(require_key(block, "S0", where), "crr.S0");
    p.up = number(require_key(block, "up", where), "crr.up");
    p.down = number(require_key(block, "down", where), "crr.down");
    p.steps = require_key(block, "steps", where).get<int>();
    p.rate = block.contains("rate") ? number(block.at("rate"), "crr.rate") : 0.0;
    p.strike = number(require_key(block, "K", where), "crr.K");
    p.barrier = number(require_key(block, "H", where), "crr.H");
    const std::string direction = block.value("direction", std::string("crossed_below"));
    if (direction == "crossed_below") {
        p.direction = BarrierDirection::kCrossedBelow;
    } else if (direction == "crossed_above") {
        p.direction = BarrierDirection::kCrossedAbove;
    } else {
        throw InputError(fmt::format("crr.direction '{}' is not crossed_below or crossed_above",
                                     direction));
    }
    p.q_up = number(require_key(block, "q_up", where), "crr.q_up");
    const json& amb = require_key(block, "ambiguity", where);
    if (!amb.is_array() || amb.size() != 2) {
        throw InputError("crr.ambiguity must be [lo, hi]");
    }
    p.p_lo = number(amb[0], "crr.ambiguity[0]");
    p.p_hi = number(amb[1], "crr.ambiguity[1]");
    validate_params(p);
    return p;
}

} // namespace

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) {
        throw InputError("config must be a JSON object");
    }
    try {
        RunConfig cfg;
        const bool has_tree = doc.contains("tree");
        const bool has_crr = doc.contains("crr");
        if (has_tree == has_crr) {
            throw InputError("config must contain exactly one of \"tree\" and \"crr\"");
        }
        if (has_tree) {
            AdaptedFamily payoff;
            cfg.tree = parse_tree(doc.at("tree"), payoff);
            cfg.payoff = std::move(payoff);
        } else {
            cfg.crr = parse_crr(doc.at("crr"));
            if (doc.contains("priors")) {
                throw InputError("\"priors\" must be absent with \"crr\" (use crr.ambiguity)");
            }
        }
        if (doc.contains("priors")) {
            cfg.priors = doc.at("priors");
        }
        const std::string mode = doc.value("mode", std::string("closure"));
        if (mode == "closure") {
            cfg.mode = DensityMode::kClosure;
        } else if (mode == "equivalent") {
            cfg.mode = DensityMode::kEquivalent;
        } else {
            throw InputError(fmt::format("mode '{}' is not closure or equivalent", mode));
        }
        cfg.alphas = doc.contains("alphas") ? doc.at("alphas").get<std::vector<double>>()
                                            : default_alphas();
        for (double a : cfg.alphas) {
            if (!(a > 0.0 && a <= 1.0)) {
                throw InputError(fmt::format("alpha {} outside (0, 1]", a));
            }
        }
        if (doc.contains("v")) {
            cfg.v = doc.at("v").get<std::string>();
        }
        cfg.tolerance = doc.contains("tolerance") ? number(doc.at("tolerance"), "tolerance")
                                                  : kDefaultTolerance;
        if (!(cfg.tolerance > 0.0)) {
            throw InputError("tolerance must be > 0");
        }
        cfg.seed = doc.value("seed", std::uint64_t{0});
        cfg.random_instances = doc.value("random_instances", std::size_t{0});
        return cfg;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed config: ") + e.what());
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError(fmt::format("cannot open config '{}'", path.string()));
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InputError(fmt::format("config '{}' is not valid JSON: {}", path.string(), e.what()));
    }
    return parse_config(doc);
}

namespace {

PriorSet parse_priors(const EventTree& tree, const json& block, DensityMode mode) {
    if (block.is_null()) {
        return PriorSet(tree, mode);
    }
    const bool explicit_extremes = block.contains("node_extremes");
    const bool interval = block.contains("interval_up_probability");
    if (explicit_extremes == interval) {
        throw InputError(
            "priors must contain exactly one of \"node_extremes\" and \"interval_up_probability\"");
    }
    if (interval) {
        const json& b = block.at("interval_up_probability");
        return interval_up_probability_priors(tree, number(require_key(b, "lo", "priors"), "lo"),
                                              number(require_key(b, "hi", "priors"), "hi"), mode);
    }
    PriorSet priors(tree, mode);
    for (const auto& [id, list] : block.at("node_extremes").items()) {
        const NodeIndex n = tree.index_of(id);
        if (tree.node(n).terminal()) {
            throw InputError(fmt::format("priors given for terminal node '{}'", id));
        }
        priors.set_extremes(n, list.get<std::vector<DensityVector>>());
    }
    return priors;
}

} // namespace

Model build_model(const RunConfig& config) {
    try {
        Model model;
        if (config.crr) {
            model.tree = build_crr_barrier_tree(*config.crr);
            model.payoff = knockin_payoff(model.tree, *config.crr);
            model.priors = drift_ambiguity_priors(model.tree, *config.crr, config.mode);
        } else {
            model.tree = *config.tree;
            model.payoff = *config.payoff;
            require_valid_tree(model.tree);
            model.priors = parse_priors(model.tree, config.priors, config.mode);
        }
        require_reward_family(model.tree, model.payoff);
        require_solvable_priors(model.tree, model.priors);
        model.v = config.v ? model.tree.index_of(*config.v) : model.tree.root();
        return model;
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed priors: ") + e.what());
    }
}

} // namespace robust_snell
