#include "robust_snell/cli.hpp"

#include "robust_snell/config.hpp"
#include "robust_snell/decomposition.hpp"
#include "robust_snell/errors.hpp"
#include "robust_snell/oracle.hpp"
#include "robust_snell/pricing.hpp"
#include "robust_snell/snell.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>

namespace robust_snell {

namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string num(double x) {
    if (!std::isfinite(x)) {
        return {};
    }
    return fmt::format("{:.17g}", x);
}

ordered_json id_list(const EventTree& tree, const std::vector<NodeIndex>& nodes) {
    ordered_json out = ordered_json::array();
    for (NodeIndex n : nodes) {
        out.push_back(tree.node(n).id);
    }
    return out;
}

std::vector<NodeIndex> flagged(const std::vector<bool>& flags) {
    std::vector<NodeIndex> out;
    for (NodeIndex n = 0; n < flags.size(); ++n) {
        if (flags[n]) {
            out.push_back(n);
        }
    }
    return out;
}

// Per-node output; columns without data for the command stay empty.
struct NodeTable {
    const EventTree* tree = nullptr;
    const AdaptedFamily* payoff = nullptr;
    const SnellSolution* solution = nullptr;
    const StoppingRule* u_star = nullptr;
    const DensityProcess* z_star = nullptr;
    const Decomposition* decomposition = nullptr;
};

void write_nodes_csv(const fs::path& path, const NodeTable& t) {
    std::ofstream csv(path, std::ios::binary);
    csv << "node_id,time,parent_id,q,state_S,state_hit,Y,R,R_plus,stop,u_star_stop,"
           "argmax_extreme,z_star,M,C,K,A_q\n";
    const EventTree& tree = *t.tree;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        std::string parent_id;
        std::string q;
        if (rec.parent != kNoNode) {
            const auto& parent = tree.node(rec.parent);
            parent_id = parent.id;
            for (const auto& br : parent.children) {
                if (br.child == n) {
                    q = num(br.q);
                }
            }
        }
        auto state = [&](const char* label) {
            const auto it = rec.states.find(label);
            return it == rec.states.end() ? std::string() : num(it->second);
        };
        std::vector<std::string> cols{rec.id, std::to_string(rec.time), parent_id, q,
                                      state("S"), state("hit"), num((*t.payoff)[n])};
        if (t.solution) {
            const auto& s = *t.solution;
            cols.push_back(num(s.value[n]));
            cols.push_back(num(s.strict_value[n]));
            cols.push_back(s.stop_region[n] ? "1" : "0");
            cols.push_back(t.u_star ? (t.u_star->stops_at(n) ? "1" : "0") : "");
            cols.push_back(s.argmax_extreme[n] == kNoExtreme ? ""
                                                             : std::to_string(s.argmax_extreme[n]));
        } else {
            cols.insert(cols.end(), 5, "");
        }
        cols.push_back(t.z_star ? num(t.z_star->z[n]) : "");
        if (t.decomposition) {
            const auto& d = *t.decomposition;
            cols.push_back(num(d.M[n]));
            cols.push_back(num(d.C[n]));
            cols.push_back(num(d.K[n]));
            cols.push_back(num(d.A_q[n]));
        } else {
            cols.insert(cols.end(), 4, "");
        }
        for (std::size_t i = 0; i < cols.size(); ++i) {
            // Ids are written verbatim; quote them if they would break the row.
            const bool quote = cols[i].find_first_of(",\"\n") != std::string::npos;
            if (i > 0) {
                csv << ',';
            }
            if (quote) {
                std::string escaped;
                for (char ch : cols[i]) {
                    escaped += ch;
                    if (ch == '"') {
                        escaped += '"';
                    }
                }
                csv << '"' << escaped << '"';
            } else {
                csv << cols[i];
            }
        }
        csv << '\n';
    }
}

void write_summary(const fs::path& path, const ordered_json& summary) {
    std::ofstream out(path, std::ios::binary);
    out << summary.dump(2) << '\n';
}

ordered_json certificate_json(const OptimalityCertificate& c) {
    return ordered_json{{"optimal", c.optimal},
                        {"cond1", c.cond1},
                        {"cond2", c.cond2},
                        {"value", c.value},
                        {"R_v", c.target},
                        {"equivalence_holds", c.equivalence_holds}};
}

ordered_json selection_json(const EventTree& tree, const SnellSolution& solution) {
    ordered_json out = ordered_json::object();
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (solution.argmax_extreme[n] != kNoExtreme) {
            out[tree.node(n).id] = solution.argmax_extreme[n];
        }
    }
    return out;
}

int command_solve(const RunConfig& cfg, const fs::path& out_dir) {
    const Model model = build_model(cfg);
    const auto& tree = model.tree;
    const auto solution = solve(tree, model.payoff, model.priors, {cfg.tolerance});
    const auto star = u_star(tree, solution, model.payoff, model.v);
    const auto z_star = extract_optimal_prior(tree, model.priors, solution, model.v);
    const auto cert = check_optimality_certificate(tree, model.payoff, solution, star, z_star);

    ordered_json summary;
    summary["command"] = "solve";
    summary["v"] = tree.node(model.v).id;
    summary["R_root"] = solution.value[tree.root()];
    summary["R_plus_root"] = solution.strict_value[tree.root()];
    summary["R_v"] = solution.value[model.v];
    summary["R_plus_v"] = solution.strict_value[model.v];
    summary["attained"] = solution.attained;
    summary["stop_region"] = id_list(tree, flagged(solution.stop_region));
    summary["U_star_stops"] = id_list(tree, star.stop_nodes());
    ordered_json alphas = ordered_json::array();
    for (double a : cfg.alphas) {
        const auto rule = u_alpha(tree, solution, model.payoff, model.v, a);
        alphas.push_back({{"alpha", a}, {"stops", id_list(tree, rule.stop_nodes())}});
    }
    summary["U_alpha"] = alphas;
    summary["optimal_prior"] = {{"selection", selection_json(tree, solution)},
                                {"value", cert.value}};
    summary["certificate"] = certificate_json(cert);

    write_summary(out_dir / "summary.json", summary);
    write_nodes_csv(out_dir / "nodes.csv",
                    NodeTable{&tree, &model.payoff, &solution, &star, &z_star, nullptr});
    return kExitOk;
}

int command_oracle(const RunConfig& cfg, const fs::path& out_dir) {
    const Model model = build_model(cfg);
    const auto& tree = model.tree;
    const auto solution = solve(tree, model.payoff, model.priors, {cfg.tolerance});
    const auto report = crosscheck(tree, model.payoff, model.priors);
    const auto bf = brute_force_value(tree, model.payoff, model.priors, model.v);

    ordered_json summary;
    summary["command"] = "oracle";
    summary["v"] = tree.node(model.v).id;
    summary["max_deviation"] = report.max_deviation();
    summary["max_deviation_R"] = report.max_deviation_value;
    summary["max_deviation_R_plus"] = report.max_deviation_strict;
    summary["worst_node"] = tree.node(report.worst_node).id;
    summary["brute_force_value"] = bf.value;
    summary["best_rule_stops"] = id_list(tree, bf.best_rule.stop_nodes());
    ordered_json sel = ordered_json::object();
    for (NodeIndex n : tree.decision_nodes(model.v)) {
        sel[tree.node(n).id] = bf.best_selection[n];
    }
    summary["best_selection"] = sel;
    if (cfg.random_instances > 0) {
        double worst = 0.0;
        for (std::size_t i = 0; i < cfg.random_instances; ++i) {
            const auto inst = random_instance(cfg.seed + i);
            worst = std::max(worst, crosscheck(inst.tree, inst.payoff, inst.priors).max_deviation());
        }
        summary["random_suite"] = {{"instances", cfg.random_instances},
                                   {"seed", cfg.seed},
                                   {"max_deviation", worst}};
    }
    summary["pass"] = report.max_deviation() < cfg.tolerance;

    write_summary(out_dir / "summary.json", summary);
    const auto star = u_star(tree, solution, model.payoff, model.v);
    write_nodes_csv(out_dir / "nodes.csv",
                    NodeTable{&tree, &model.payoff, &solution, &star, nullptr, nullptr});
    return kExitOk;
}

int command_decompose(const RunConfig& cfg, const fs::path& out_dir) {
    const Model model = build_model(cfg);
    const auto& tree = model.tree;
    const auto solution = solve(tree, model.payoff, model.priors, {cfg.tolerance});
    const auto decomposition = universal_decompose(tree, solution, model.priors);
    const auto star = u_star(tree, solution, model.payoff, model.v);
    const auto& diag = decomposition.diagnostics;

    ordered_json premise_nodes = ordered_json::object();
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (!tree.node(n).terminal()) {
            premise_nodes[tree.node(n).id] = {{"full_slice", bool(diag.premise.full_slice[n])},
                                              {"scaling_closed", bool(diag.premise.scaling_closed[n])},
                                              {"dimension", diag.premise.dimension[n]}};
        }
    }
    ordered_json summary;
    summary["command"] = "decompose";
    summary["v"] = tree.node(model.v).id;
    summary["X0"] = decomposition.X0;
    summary["C_increasing"] = diag.C_increasing;
    summary["min_delta_C"] = diag.min_delta_C;
    summary["min_delta_A_q"] = diag.min_delta_A_q;
    summary["universal_martingale_residual"] = diag.universal_martingale_residual;
    summary["reconstruction_error"] = diag.reconstruction_error;
    summary["premise"] = {{"holds", diag.premise.holds}, {"nodes", premise_nodes}};
    summary["U_star_stops"] = id_list(tree, star.stop_nodes());
    summary["flat_off"] = flat_off_check(decomposition, tree, star, model.v);

    write_summary(out_dir / "summary.json", summary);
    write_nodes_csv(out_dir / "nodes.csv",
                    NodeTable{&tree, &model.payoff, &solution, &star, nullptr, &decomposition});
    return kExitOk;
}

int command_price(const RunConfig& cfg, const fs::path& out_dir) {
    if (!cfg.crr) {
        throw InputError("price requires a \"crr\" block");
    }
    const auto report = price(*cfg.crr, cfg.mode);
    const auto& tree = report.tree;
    ordered_json chosen = ordered_json::object();
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (std::isfinite(report.chosen_up_probability[n])) {
            chosen[tree.node(n).id] = report.chosen_up_probability[n];
        }
    }
    ordered_json summary;
    summary["command"] = "price";
    summary["H_S"] = report.H_S;
    summary["vanilla_price"] = vanilla_price(*cfg.crr, cfg.mode);
    summary["attained"] = report.solution.attained;
    summary["exercise_boundary"] = id_list(tree, report.exercise_boundary);
    summary["optimal_prior_summary"] = chosen;

    write_summary(out_dir / "summary.json", summary);
    const auto star = u_star(tree, report.solution, report.payoff, tree.root());
    write_nodes_csv(out_dir / "nodes.csv",
                    NodeTable{&tree, &report.payoff, &report.solution, &star, nullptr, nullptr});
    return kExitOk;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Best-case optimal stopping under a rectangular prior class", "robust_snell"};
    app.require_subcommand(1);
    std::string config_path;
    std::string out_dir = ".";
    std::string chosen;
    for (const char* name : {"solve", "oracle", "decompose", "price"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "Output directory for summary.json and nodes.csv");
        sub->callback([&chosen, name] { chosen = name; });
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? kExitOk : kExitInvalidConfig;
    }

    try {
        const RunConfig cfg = load_config(config_path);
        fs::create_directories(out_dir);
        if (chosen == "solve") {
            return command_solve(cfg, out_dir);
        }
        if (chosen == "oracle") {
            return command_oracle(cfg, out_dir);
        }
        if (chosen == "decompose") {
            return command_decompose(cfg, out_dir);
        }
        return command_price(cfg, out_dir);
    } catch (const InputError& e) {
        err << "invalid config: " << e.what() << '\n';
        return kExitInvalidConfig;
    } catch (const SizeGuardError& e) {
        err << "size guard exceeded: " << e.what() << '\n';
        return kExitSizeGuard;
    } catch (const UnattainedSupremumError& e) {
        err << "unattained supremum (sup " << num(e.supremum()) << "): " << e.what() << '\n';
        return kExitUnattained;
    } catch (const fs::filesystem_error& e) {
        err << "output error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace robust_snell
