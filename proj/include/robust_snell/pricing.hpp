#pragma once

// American knock-in barrier put under drift ambiguity on an unrolled
// binomial lattice.

#include "robust_snell/filtration.hpp"
#include "robust_snell/priors.hpp"
#include "robust_snell/snell.hpp"

#include <vector>

namespace robust_snell {

/// Lattices deeper than this are rejected with SizeGuardError.
inline constexpr int kMaxCrrSteps = 18;

enum class BarrierDirection { kCrossedBelow, kCrossedAbove };

struct CrrParams {
    double S0 = 1.0;
    double up = 2.0;
    double down = 0.5;
    int steps = 1;
    double rate = 0.0;  // per period, continuously compounded
    double strike = 1.0;
    double barrier = 1.0;
    BarrierDirection direction = BarrierDirection::kCrossedBelow;
    double q_up = 0.5;
    double p_lo = 0.5;
    double p_hi = 0.5;
};

/// Throws InputError (or SizeGuardError for too many steps) on invalid parameters.
void validate_params(const CrrParams& params);

/**
 * Unrolled binary tree of depth `steps`. Node ids spell the path ("u", "ud",
 * ...; the root is "r"). Each node carries states "S" (price) and "hit"
 * (1 once the barrier condition held at this node or an ancestor).
 */
EventTree build_crr_barrier_tree(const CrrParams& params);

/// exp(-r t) * max(K - S, 0) * hit.
AdaptedFamily knockin_payoff(const EventTree& tree, const CrrParams& params);

/// exp(-r t) * max(K - S, 0), ignoring the barrier.
AdaptedFamily vanilla_payoff(const EventTree& tree, const CrrParams& params);

/// Extremes (p / q_up, (1 - p) / (1 - q_up)) for p in {p_lo, p_hi} at every node.
PriorSet drift_ambiguity_priors(const EventTree& tree, const CrrParams& params,
                                DensityMode mode = DensityMode::kClosure);

struct PriceReport {
    double H_S = 0.0;
    std::vector<NodeIndex> exercise_boundary;
    /// Up-probability of the maximising prior per non-terminal node; NaN at leaves.
    std::vector<double> chosen_up_probability;
    EventTree tree;
    AdaptedFamily payoff;
    PriorSet priors;
    SnellSolution solution;
};

PriceReport price(const CrrParams& params, DensityMode mode = DensityMode::kClosure);

/// Best-case American put price without the knock-in condition.
double vanilla_price(const CrrParams& params, DensityMode mode = DensityMode::kClosure);

} // namespace robust_snell
