#pragma once

// Best-case optimal stopping under a rectangular prior class: the value
// family R, the strict value family R+, epsilon-optimal and optimal stopping
// times, an optimal prior, and the optimality certificate.

#include "robust_snell/filtration.hpp"
#include "robust_snell/priors.hpp"
#include "robust_snell/stopping.hpp"

#include <limits>
#include <string>
#include <vector>

namespace robust_snell {

inline constexpr std::size_t kNoExtreme = std::numeric_limits<std::size_t>::max();

struct SolveOptions {
    double tolerance = kDefaultTolerance;
};

struct SnellSolution {
    AdaptedFamily value;         // R
    AdaptedFamily strict_value;  // R+
    /// Maximising extreme per non-terminal node (lowest index on ties), kNoExtreme at leaves.
    std::vector<std::size_t> argmax_extreme;
    /// Nodes with |R - Y| <= tol * max(1, |R|).
    std::vector<bool> stop_region;
    /// False when some node's supremum is reached only on the boundary of an
    /// equivalent-mode density set.
    bool attained = true;
    std::vector<NodeIndex> unattained_nodes;
    double tolerance = kDefaultTolerance;
};

/// True when a and b agree within tol * max(1, |a|).
bool close_relative(double a, double b, double tol);

/**
 * Backward induction. Leaves: R = R+ = Y. Elsewhere
 * R+(n) = max over extremes d of sum_c q_c d_c R(c) and R(n) = max(Y(n), R+(n)).
 * Throws InputError for invalid tree, payoff or priors.
 */
SnellSolution solve(const EventTree& tree, const AdaptedFamily& payoff, const PriorSet& priors,
                    const SolveOptions& options = {});

/// Conditional expected reward of a rule under the prior with density Z.
double gamma(const EventTree& tree, const AdaptedFamily& payoff, const DensityProcess& density,
             const StoppingRule& rule, NodeIndex v);

/// First entry into {alpha R <= Y} at or after v; alpha in (0, 1]. alpha = 1 uses the stop region.
StoppingRule u_alpha(const EventTree& tree, const SnellSolution& solution,
                     const AdaptedFamily& payoff, NodeIndex v, double alpha);

/// First entry into {R = Y} at or after v.
StoppingRule u_star(const EventTree& tree, const SnellSolution& solution,
                    const AdaptedFamily& payoff, NodeIndex v);

/// Density process following the maximising extreme at every non-terminal
/// node. Throws UnattainedSupremumError (carrying R(v)) if the solution is not attained.
DensityProcess extract_optimal_prior(const EventTree& tree, const PriorSet& priors,
                                     const SnellSolution& solution, NodeIndex v);

/// Maximising extreme index per node, packaged as a selection.
ExtremeSelection optimal_selection(const EventTree& tree, const SnellSolution& solution);

struct SupermartingaleReport {
    std::vector<bool> node_pass;
    /// max(0, sup_d E^d[family | n] - family(n)) per node.
    std::vector<double> excess;
    bool pass = true;
};

/// One-step check that family is a supermartingale under every prior.
SupermartingaleReport check_supermartingale_family(const EventTree& tree,
                                                   const AdaptedFamily& family,
                                                   const PriorSet& priors,
                                                   double tolerance = kDefaultTolerance);

struct OptimalityCertificate {
    bool optimal = false;
    bool cond1 = false;  // R = Y at every stop node of the rule
    bool cond2 = false;  // R is a martingale under Z before the rule stops
    double value = 0.0;   // E^{P*}[Y(tau*) | F_v]
    double target = 0.0;  // R(v)
    /// optimal  <=>  value == target, within tolerance.
    bool equivalence_holds = false;
};

OptimalityCertificate check_optimality_certificate(const EventTree& tree,
                                                   const AdaptedFamily& payoff,
                                                   const SnellSolution& solution,
                                                   const StoppingRule& rule,
                                                   const DensityProcess& density);

/// Convenience overload that solves first.
OptimalityCertificate check_optimality_certificate(const EventTree& tree,
                                                   const AdaptedFamily& payoff,
                                                   const PriorSet& priors,
                                                   const StoppingRule& rule,
                                                   const DensityProcess& density);

/// Both sides of the strict-value expectation identity for one (P, tau, v).
struct StrictValueIdentity {
    double lhs = 0.0;            // E^P[R+(tau) | F_v]
    double rhs_corrected = 0.0;  // sup over sigma > tau and priors agreeing with P up to tau
    double rhs_literal = 0.0;    // sup over sigma > tau of E^P[Y(sigma) | F_v]
};

StrictValueIdentity strict_value_identity(const EventTree& tree, const AdaptedFamily& payoff,
                                          const PriorSet& priors, const SnellSolution& solution,
                                          const DensityProcess& prior, const StoppingRule& tau,
                                          NodeIndex v);

struct IdentityCheck {
    std::string name;
    bool pass = true;
    double worst_deviation = 0.0;
    std::string detail;
};

struct IdentityReport {
    std::vector<IdentityCheck> checks;
    bool all_pass() const;
    const IdentityCheck& find(const std::string& name) const;
};

/// Default alpha grid for the epsilon-optimality checks.
std::vector<double> default_alphas();

/**
 * Checks the value identities by enumeration on every node whose subtree is
 * within the enumeration guards:
 *   dominance                   R >= Y, R >= R+
 *   value_max_identity          R = max(Y, R+), for the solver and the oracle
 *   strict_value_corrected      E^P[R+(tau)|v] = sup over sigma > tau, priors = P up to tau
 *   strict_value_literal        E^P[R+(tau)|v] = sup over sigma > tau of E^P[Y(sigma)|v]
 *   step_one_identity           R(v) = max over priors of E[R(U^alpha(v))|v]
 * The literal form is reported, not expected to pass.
 */
IdentityReport verify_value_identities(const EventTree& tree, const AdaptedFamily& payoff,
                                       const PriorSet& priors, const SnellSolution& solution,
                                       const std::vector<double>& alphas = default_alphas());

} // namespace robust_snell
