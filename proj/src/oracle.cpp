#include "robust_snell/oracle.hpp"

#include "robust_snell/errors.hpp"
#include "robust_snell/snell.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace robust_snell {

bool enumerable(const EventTree& tree, const PriorSet& priors, NodeIndex v) {
    const auto decisions = tree.decision_nodes(v);
    return decisions.size() <= kMaxEnumeratedDecisionNodes &&
           count_selections(priors, decisions) <= kMaxExtremeSelections;
}

void require_enumerable(const EventTree& tree, const PriorSet& priors, NodeIndex v) {
    const auto decisions = tree.decision_nodes(v);
    if (decisions.size() > kMaxEnumeratedDecisionNodes) {
        throw SizeGuardError(fmt::format("subtree at '{}' has {} decision nodes (limit {})",
                                         tree.node(v).id, decisions.size(),
                                         kMaxEnumeratedDecisionNodes));
    }
    if (count_selections(priors, decisions) > kMaxExtremeSelections) {
        throw SizeGuardError(fmt::format("subtree at '{}' has more than {} extreme selections",
                                         tree.node(v).id, kMaxExtremeSelections));
    }
}

BestCase best_case_expectation(const EventTree& tree, const AdaptedFamily& family,
                               const PriorSet& priors, const StoppingRule& rule, NodeIndex v,
                               const DensityProcess* frozen,
                               std::span<const NodeIndex> frozen_nodes) {
    if (rule.floor() != v) {
        throw InputError("best_case_expectation: rule floor differs from v");
    }
    std::vector<bool> is_frozen(tree.size(), false);
    if (frozen != nullptr) {
        for (NodeIndex n : frozen_nodes) {
            is_frozen[n] = true;
        }
    }
    std::vector<NodeIndex> varying;
    for (NodeIndex n : rule.continuation_nodes()) {
        if (!is_frozen[n]) {
            varying.push_back(n);
        }
    }
    if (count_selections(priors, varying) > kMaxExtremeSelections) {
        throw SizeGuardError("best_case_expectation: too many extreme selections");
    }

    const auto order = tree.subtree(v);
    std::vector<const DensityVector*> ratio(tree.size(), nullptr);
    for (NodeIndex n : rule.continuation_nodes()) {
        ratio[n] = is_frozen[n] ? &frozen->ratio.at(n) : &priors.extremes(n).front();
    }
    ExtremeSelection current(tree.size(), 0);
    std::vector<double> weight(tree.size(), 0.0);

    BestCase best{-std::numeric_limits<double>::infinity(), current};
    while (true) {
        // E^P[family(tau) | F_v] as a sum over the cut of path weights q * ratio.
        weight[v] = 1.0;
        double total = 0.0;
        for (NodeIndex n : order) {
            if (ratio[n] == nullptr && !rule.stops_at(n)) {
                continue;  // below the cut
            }
            if (rule.stops_at(n)) {
                total += weight[n] * family.at(n);
                continue;
            }
            const auto& rec = tree.node(n);
            const auto& r = *ratio[n];
            for (std::size_t c = 0; c < rec.children.size(); ++c) {
                weight[rec.children[c].child] = weight[n] * rec.children[c].q * r[c];
            }
        }
        if (total > best.value) {
            best.value = total;
            best.selection = current;
        }
        // Mixed-radix increment, lowest-index varying node fastest.
        std::size_t k = 0;
        for (; k < varying.size(); ++k) {
            const NodeIndex n = varying[k];
            if (++current[n] < priors.extremes(n).size()) {
                ratio[n] = &priors.extremes(n)[current[n]];
                break;
            }
            current[n] = 0;
            ratio[n] = &priors.extremes(n).front();
        }
        if (k == varying.size()) {
            break;
        }
    }
    return best;
}

BruteForceResult brute_force_value(const EventTree& tree, const AdaptedFamily& payoff,
                                   const PriorSet& priors, NodeIndex v) {
    require_enumerable(tree, priors, v);
    BruteForceResult out;
    out.value = -std::numeric_limits<double>::infinity();
    for (auto& rule : enumerate_rules(tree, v, false)) {
        auto best = best_case_expectation(tree, payoff, priors, rule, v);
        if (best.value > out.value) {
            out.value = best.value;
            out.best_rule = std::move(rule);
            out.best_selection = std::move(best.selection);
        }
    }
    return out;
}

double brute_force_strict_value(const EventTree& tree, const AdaptedFamily& payoff,
                                const PriorSet& priors, NodeIndex v) {
    require_enumerable(tree, priors, v);
    double value = -std::numeric_limits<double>::infinity();
    for (const auto& rule : enumerate_rules(tree, v, true)) {
        value = std::max(value, best_case_expectation(tree, payoff, priors, rule, v).value);
    }
    return value;
}

CrosscheckReport crosscheck(const EventTree& tree, const AdaptedFamily& payoff,
                            const PriorSet& priors) {
    const auto solution = solve(tree, payoff, priors);
    CrosscheckReport report;
    double worst = -1.0;
    for (NodeIndex v = 0; v < tree.size(); ++v) {
        const double dv = std::abs(solution.value[v] - brute_force_value(tree, payoff, priors, v).value);
        const double ds =
            std::abs(solution.strict_value[v] - brute_force_strict_value(tree, payoff, priors, v));
        report.max_deviation_value = std::max(report.max_deviation_value, dv);
        report.max_deviation_strict = std::max(report.max_deviation_strict, ds);
        if (std::max(dv, ds) > worst) {
            worst = std::max(dv, ds);
            report.worst_node = v;
        }
    }
    return report;
}

RandomInstance random_instance(std::uint64_t seed, const RandomInstanceLimits& limits) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto pick = [&](std::size_t lo, std::size_t hi) {
        return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
    };

    const int periods = static_cast<int>(pick(1, static_cast<std::size_t>(limits.max_periods)));
    EventTree tree(periods);
    tree.add_root("r");
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (tree.node(n).time == periods) {
            continue;
        }
        const std::size_t k = pick(1, limits.max_children);
        std::vector<double> w(k);
        double total = 0.0;
        for (auto& x : w) {
            x = 0.2 + unit(rng);
            total += x;
        }
        double assigned = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            // The last branch absorbs rounding so probabilities sum to one.
            const double q = (c + 1 == k) ? 1.0 - assigned : w[c] / total;
            assigned += q;
            tree.add_child(n, fmt::format("{}{}", tree.node(n).id, c), q);
        }
    }

    AdaptedFamily payoff(tree.size(), 0.0);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        payoff[n] = unit(rng) < 0.2 ? 0.0 : 5.0 * unit(rng);
    }

    PriorSet priors(tree, DensityMode::kClosure);
    std::size_t selections = 1;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (rec.terminal() || rec.children.size() == 1) {
            continue;  // a single child only admits the density 1
        }
        std::size_t count = pick(1, limits.max_extremes);
        while (count > 1 && selections * count > kMaxExtremeSelections) {
            --count;
        }
        selections *= count;
        std::vector<DensityVector> extremes;
        for (std::size_t e = 0; e < count; ++e) {
            DensityVector d(rec.children.size());
            double mean = 0.0;
            for (std::size_t c = 0; c < d.size(); ++c) {
                d[c] = unit(rng) < 0.1 ? 0.0 : 0.05 + unit(rng);
                mean += rec.children[c].q * d[c];
            }
            if (mean == 0.0) {
                d.assign(d.size(), 1.0);
                mean = 1.0;
            }
            for (auto& x : d) {
                x /= mean;
            }
            extremes.push_back(std::move(d));
        }
        priors.set_extremes(n, std::move(extremes));
    }
    return RandomInstance{std::move(tree), std::move(payoff), std::move(priors)};
}

} // namespace robust_snell
