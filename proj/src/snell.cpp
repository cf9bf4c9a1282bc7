#include "robust_snell/snell.hpp"

#include "robust_snell/errors.hpp"
#include "robust_snell/oracle.hpp"
#include "robust_snell/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace robust_snell {

namespace {

// Relative slack used to treat two candidate continuation values as tied.
constexpr double kTieTolerance = 1e-12;

double slack(double scale, double tol) { return tol * std::max(1.0, std::abs(scale)); }

} // namespace

bool close_relative(double a, double b, double tol) {
    return std::abs(a - b) <= slack(a, tol);
}

SnellSolution solve(const EventTree& tree, const AdaptedFamily& payoff, const PriorSet& priors,
                    const SolveOptions& options) {
    require_valid_tree(tree);
    require_reward_family(tree, payoff);
    require_solvable_priors(tree, priors);

    const std::size_t size = tree.size();
    std::vector<double> value(size, 0.0);
    std::vector<double> strict_value(size, 0.0);
    std::vector<std::size_t> argmax(size, kNoExtreme);
    std::vector<std::uint8_t> stop(size, 0);
    std::vector<std::uint8_t> unattained(size, 0);
    const bool equivalent = priors.mode() == DensityMode::kEquivalent;

    auto visit = [&](NodeIndex n) {
        const auto& rec = tree.node(n);
        if (rec.terminal()) {
            value[n] = strict_value[n] = payoff[n];
            stop[n] = 1;
            return;
        }
        const auto& ext = priors.extremes(n);
        std::vector<double> candidate(ext.size(), 0.0);
        for (std::size_t e = 0; e < ext.size(); ++e) {
            double sum = 0.0;
            for (std::size_t c = 0; c < rec.children.size(); ++c) {
                sum += rec.children[c].q * ext[e][c] * value[rec.children[c].child];
            }
            candidate[e] = sum;
        }
        const double best = *std::max_element(candidate.begin(), candidate.end());
        const double tie = slack(best, kTieTolerance);
        std::size_t chosen = kNoExtreme;
        std::vector<bool> positive(rec.children.size(), false);
        for (std::size_t e = 0; e < ext.size(); ++e) {
            if (candidate[e] < best - tie) {
                continue;
            }
            if (chosen == kNoExtreme) {
                chosen = e;
            }
            for (std::size_t c = 0; c < rec.children.size(); ++c) {
                positive[c] = positive[c] || ext[e][c] > 0.0;
            }
        }
        strict_value[n] = best;
        argmax[n] = chosen;
        value[n] = std::max(payoff[n], best);
        stop[n] = std::abs(value[n] - payoff[n]) <= slack(value[n], options.tolerance) ? 1 : 0;
        // In equivalent mode the maximising face must reach the open orthant.
        if (equivalent && std::find(positive.begin(), positive.end(), false) != positive.end()) {
            unattained[n] = 1;
        }
    };

    const auto levels = tree.levels();
    for (auto level = levels.rbegin(); level != levels.rend(); ++level) {
        const auto& nodes = *level;
        parallel_for(nodes.size(), [&](std::size_t i) { visit(nodes[i]); });
    }

    SnellSolution out;
    out.value = AdaptedFamily(std::move(value));
    out.strict_value = AdaptedFamily(std::move(strict_value));
    out.argmax_extreme = std::move(argmax);
    out.stop_region.assign(stop.begin(), stop.end());
    out.tolerance = options.tolerance;
    for (NodeIndex n = 0; n < size; ++n) {
        if (unattained[n]) {
            out.unattained_nodes.push_back(n);
        }
    }
    out.attained = out.unattained_nodes.empty();
    return out;
}

double gamma(const EventTree& tree, const AdaptedFamily& payoff, const DensityProcess& density,
             const StoppingRule& rule, NodeIndex v) {
    return bayes_conditional(tree, density, payoff, rule, v);
}

StoppingRule u_alpha(const EventTree& tree, const SnellSolution& solution,
                     const AdaptedFamily& payoff, NodeIndex v, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw InputError(fmt::format("alpha {} outside (0, 1]", alpha));
    }
    if (v >= tree.size()) {
        throw InputError("u_alpha: node is not part of the tree");
    }
    if (alpha == 1.0) {
        return first_entry_rule(tree, [&](NodeIndex n) { return bool(solution.stop_region[n]); }, v);
    }
    return first_entry_rule(
        tree,
        [&](NodeIndex n) {
            const double r = solution.value[n];
            return alpha * r <= payoff[n] + slack(r, solution.tolerance);
        },
        v);
}

StoppingRule u_star(const EventTree& tree, const SnellSolution& solution,
                    const AdaptedFamily& payoff, NodeIndex v) {
    return u_alpha(tree, solution, payoff, v, 1.0);
}

ExtremeSelection optimal_selection(const EventTree& tree, const SnellSolution& solution) {
    ExtremeSelection selection(tree.size(), 0);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (solution.argmax_extreme[n] != kNoExtreme) {
            selection[n] = solution.argmax_extreme[n];
        }
    }
    return selection;
}

DensityProcess extract_optimal_prior(const EventTree& tree, const PriorSet& priors,
                                     const SnellSolution& solution, NodeIndex v) {
    if (!solution.attained) {
        throw UnattainedSupremumError(
            fmt::format("supremum over priors is not attained at node '{}' (value {:.17g})",
                        tree.node(solution.unattained_nodes.front()).id, solution.value.at(v)),
            solution.value.at(v));
    }
    return density_process(tree, priors, optimal_selection(tree, solution));
}

SupermartingaleReport check_supermartingale_family(const EventTree& tree,
                                                   const AdaptedFamily& family,
                                                   const PriorSet& priors, double tolerance) {
    SupermartingaleReport report;
    report.node_pass.assign(tree.size(), true);
    report.excess.assign(tree.size(), 0.0);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (rec.terminal()) {
            continue;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& d : priors.extremes(n)) {
            double sum = 0.0;
            for (std::size_t c = 0; c < rec.children.size(); ++c) {
                sum += rec.children[c].q * d[c] * family.at(rec.children[c].child);
            }
            best = std::max(best, sum);
        }
        report.excess[n] = std::max(0.0, best - family.at(n));
        if (best > family.at(n) + tolerance) {
            report.node_pass[n] = false;
            report.pass = false;
        }
    }
    return report;
}

OptimalityCertificate check_optimality_certificate(const EventTree& tree,
                                                   const AdaptedFamily& payoff,
                                                   const SnellSolution& solution,
                                                   const StoppingRule& rule,
                                                   const DensityProcess& density) {
    const double tol = solution.tolerance;
    const auto& R = solution.value;
    OptimalityCertificate cert;
    cert.cond1 = std::all_of(rule.stop_nodes().begin(), rule.stop_nodes().end(),
                             [&](NodeIndex n) { return close_relative(R[n], payoff[n], tol); });
    cert.cond2 = std::all_of(
        rule.continuation_nodes().begin(), rule.continuation_nodes().end(), [&](NodeIndex n) {
            const auto& rec = tree.node(n);
            double sum = 0.0;
            for (std::size_t c = 0; c < rec.children.size(); ++c) {
                sum += rec.children[c].q * density.ratio[n][c] * R[rec.children[c].child];
            }
            return close_relative(R[n], sum, tol);
        });
    cert.optimal = cert.cond1 && cert.cond2;
    const NodeIndex v = rule.floor();
    cert.value = bayes_conditional(tree, density, payoff, rule, v);
    cert.target = R[v];
    cert.equivalence_holds = cert.optimal == close_relative(cert.target, cert.value, tol);
    return cert;
}

OptimalityCertificate check_optimality_certificate(const EventTree& tree,
                                                   const AdaptedFamily& payoff,
                                                   const PriorSet& priors,
                                                   const StoppingRule& rule,
                                                   const DensityProcess& density) {
    return check_optimality_certificate(tree, payoff, solve(tree, payoff, priors), rule, density);
}

namespace {

// sigma belongs to the strictly-later class relative to tau: on every path
// it stops after tau, or at the horizon where tau already stopped there.
bool strictly_after(const EventTree& tree, const StoppingRule& sigma, const StoppingRule& tau) {
    for (NodeIndex m : sigma.stop_nodes()) {
        NodeIndex s = m;
        while (s != kNoNode && !tau.stops_at(s)) {
            if (s == tau.floor()) {
                s = kNoNode;
                break;
            }
            s = tree.node(s).parent;
        }
        if (s == kNoNode) {
            return false;
        }
        if (s == m && !tree.node(m).terminal()) {
            return false;
        }
    }
    return true;
}

} // namespace

StrictValueIdentity strict_value_identity(const EventTree& tree, const AdaptedFamily& payoff,
                                          const PriorSet& priors, const SnellSolution& solution,
                                          const DensityProcess& prior, const StoppingRule& tau,
                                          NodeIndex v) {
    if (tau.floor() != v) {
        throw InputError("strict value identity: tau must have floor v");
    }
    require_enumerable(tree, priors, v);
    StrictValueIdentity out;
    out.lhs = bayes_conditional(tree, prior, solution.strict_value, tau, v);
    out.rhs_corrected = -std::numeric_limits<double>::infinity();
    out.rhs_literal = -std::numeric_limits<double>::infinity();
    for (const auto& sigma : enumerate_rules(tree, v, false)) {
        if (!strictly_after(tree, sigma, tau)) {
            continue;
        }
        const auto best = best_case_expectation(tree, payoff, priors, sigma, v, &prior,
                                                tau.continuation_nodes());
        out.rhs_corrected = std::max(out.rhs_corrected, best.value);
        out.rhs_literal =
            std::max(out.rhs_literal, bayes_conditional(tree, prior, payoff, sigma, v));
    }
    return out;
}

bool IdentityReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

const IdentityCheck& IdentityReport::find(const std::string& name) const {
    for (const auto& c : checks) {
        if (c.name == name) {
            return c;
        }
    }
    throw InputError("no identity check named " + name);
}

std::vector<double> default_alphas() { return {0.2, 0.4, 0.6, 0.8, 0.95, 1.0}; }

namespace {

// Skip the nested strict-value enumeration where it would dominate runtime.
constexpr double kStrictIdentityBudget = 5e6;

} // namespace

IdentityReport verify_value_identities(const EventTree& tree, const AdaptedFamily& payoff,
                                       const PriorSet& priors, const SnellSolution& solution,
                                       const std::vector<double>& alphas) {
    const double tol = solution.tolerance;
    const auto& R = solution.value;
    const auto& Rp = solution.strict_value;

    IdentityCheck dominance{"dominance", true, 0.0, {}};
    IdentityCheck value_max{"value_max_identity", true, 0.0, {}};
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        dominance.worst_deviation =
            std::max({dominance.worst_deviation, payoff[n] - R[n], Rp[n] - R[n]});
        value_max.worst_deviation =
            std::max(value_max.worst_deviation, std::abs(R[n] - std::max(payoff[n], Rp[n])));
    }

    IdentityCheck corrected{"strict_value_corrected", true, 0.0, {}};
    IdentityCheck literal{"strict_value_literal", true, 0.0, {}};
    IdentityCheck step_one{"step_one_identity", true, 0.0, {}};
    IdentityCheck optimal_time{"optimal_time_attains_value", true, 0.0, {}};
    std::size_t oracle_nodes = 0;
    std::size_t strict_nodes = 0;

    const auto reference = reference_density(tree);
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        if (!enumerable(tree, priors, v)) {
            continue;
        }
        ++oracle_nodes;
        const double bf = brute_force_value(tree, payoff, priors, v).value;
        const double bf_strict = brute_force_strict_value(tree, payoff, priors, v);
        value_max.worst_deviation =
            std::max(value_max.worst_deviation, std::abs(bf - std::max(payoff[v], bf_strict)));

        for (double alpha : alphas) {
            const auto rule = u_alpha(tree, solution, payoff, v, alpha);
            const double best = best_case_expectation(tree, R, priors, rule, v).value;
            step_one.worst_deviation = std::max(step_one.worst_deviation, std::abs(R[v] - best));
        }
        {
            const auto rule = u_star(tree, solution, payoff, v);
            const double best = best_case_expectation(tree, payoff, priors, rule, v).value;
            optimal_time.worst_deviation =
                std::max(optimal_time.worst_deviation, std::abs(R[v] - best));
        }

        const auto subtree_decisions = tree.decision_nodes(v);
        const double rules = static_cast<double>(count_rules(tree, v, false));
        const double selections = static_cast<double>(count_selections(priors, subtree_decisions));
        if (std::pow(rules * (selections + 1.0), 2.0) > kStrictIdentityBudget) {
            continue;
        }
        ++strict_nodes;
        std::vector<DensityProcess> trial_priors{reference};
        for (const auto& sel : extreme_selections(tree, priors, subtree_decisions)) {
            trial_priors.push_back(density_process(tree, priors, sel));
        }
        for (const auto& tau : enumerate_rules(tree, v, false)) {
            for (std::size_t p = 0; p < trial_priors.size(); ++p) {
                const auto id =
                    strict_value_identity(tree, payoff, priors, solution, trial_priors[p], tau, v);
                const double dc = std::abs(id.lhs - id.rhs_corrected);
                corrected.worst_deviation = std::max(corrected.worst_deviation, dc);
                const double dl = std::abs(id.lhs - id.rhs_literal);
                if (dl > literal.worst_deviation) {
                    literal.worst_deviation = dl;
                    literal.detail = fmt::format(
                        "node '{}', prior {}, tau stops at {} nodes: lhs {:.17g} vs literal rhs {:.17g}",
                        tree.node(v).id, p == 0 ? std::string("Q") : fmt::format("#{}", p - 1),
                        tau.stop_nodes().size(), id.lhs, id.rhs_literal);
                }
            }
        }
    }

    dominance.pass = dominance.worst_deviation <= tol;
    value_max.pass = value_max.worst_deviation <= tol;
    corrected.pass = corrected.worst_deviation <= tol;
    literal.pass = literal.worst_deviation <= tol;
    step_one.pass = step_one.worst_deviation <= tol;
    optimal_time.pass = optimal_time.worst_deviation <= tol;
    value_max.detail = fmt::format("oracle checked at {} of {} nodes", oracle_nodes, tree.size());
    corrected.detail = fmt::format("checked at {} nodes", strict_nodes);
    step_one.detail = fmt::format("{} alphas at {} nodes", alphas.size(), oracle_nodes);

    IdentityReport report;
    report.checks = {dominance, value_max, corrected, literal, step_one, optimal_time};
    return report;
}

} // namespace robust_snell
