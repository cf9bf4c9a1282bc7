#pragma once

// Ground truth for the double supremum by exhaustive enumeration of
// stopping rules and extreme prior selections.

#include "robust_snell/filtration.hpp"
#include "robust_snell/priors.hpp"
#include "robust_snell/stopping.hpp"

#include <cstdint>
#include <span>

namespace robust_snell {

struct BruteForceResult {
    double value = 0.0;
    StoppingRule best_rule;
    ExtremeSelection best_selection;
};

/// max over all rules in S_v and all extreme selections of Gamma(v | tau, Z).
/// Throws SizeGuardError when the subtree at v exceeds the enumeration limits.
BruteForceResult brute_force_value(const EventTree& tree, const AdaptedFamily& payoff,
                                   const PriorSet& priors, NodeIndex v);

/// Same over the strictly later rules S_{v+}.
double brute_force_strict_value(const EventTree& tree, const AdaptedFamily& payoff,
                                const PriorSet& priors, NodeIndex v);

struct BestCase {
    double value = 0.0;
    ExtremeSelection selection;
};

/**
 * max over extreme selections of E^P[family(rule) | F_v] for a fixed rule.
 * Only the rule's continuation nodes matter; the ones listed in frozen_nodes
 * take their ratios from *frozen instead of being enumerated.
 */
BestCase best_case_expectation(const EventTree& tree, const AdaptedFamily& family,
                               const PriorSet& priors, const StoppingRule& rule, NodeIndex v,
                               const DensityProcess* frozen = nullptr,
                               std::span<const NodeIndex> frozen_nodes = {});

/// Throws SizeGuardError unless the subtree at v can be enumerated.
void require_enumerable(const EventTree& tree, const PriorSet& priors, NodeIndex v);
bool enumerable(const EventTree& tree, const PriorSet& priors, NodeIndex v);

struct CrosscheckReport {
    double max_deviation_value = 0.0;
    double max_deviation_strict = 0.0;
    NodeIndex worst_node = 0;

    double max_deviation() const {
        return max_deviation_value > max_deviation_strict ? max_deviation_value
                                                          : max_deviation_strict;
    }
};

/// Solver versus brute force at every node.
CrosscheckReport crosscheck(const EventTree& tree, const AdaptedFamily& payoff,
                            const PriorSet& priors);

struct RandomInstanceLimits {
    int max_periods = 3;
    std::size_t max_children = 3;
    std::size_t max_extremes = 3;
};

struct RandomInstance {
    EventTree tree;
    AdaptedFamily payoff;
    PriorSet priors;
};

/// Seeded random tree, payoff and closure-mode prior set within the limits
/// and the enumeration guards.
RandomInstance random_instance(std::uint64_t seed, const RandomInstanceLimits& limits = {});

} // namespace robust_snell
