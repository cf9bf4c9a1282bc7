#pragma once

// Discrete optional decomposition R = X0 + M - C: per-node Doob
// decomposition under Q, projection of the Doob martingale increment onto the
// span of the density increments, and diagnostics on the result.

#include "robust_snell/filtration.hpp"
#include "robust_snell/priors.hpp"
#include "robust_snell/snell.hpp"
#include "robust_snell/stopping.hpp"

#include <vector>

namespace robust_snell {

/// Tolerance for reconstruction, residual and flatness checks.
inline constexpr double kDecompositionTolerance = 1e-10;

struct DoobDecomposition {
    AdaptedFamily compensator;  // predictable, increasing, zero at the root
    AdaptedFamily martingale;   // zero at the root
};

/// family = family(root) + M - A under the prior with density Z.
/// Throws NotSupermartingaleError if family is not a Z-supermartingale.
DoobDecomposition doob(const EventTree& tree, const AdaptedFamily& family,
                       const DensityProcess& density, double tolerance = kDefaultTolerance);

/// Orthonormal basis (inner product <x, y> = sum_c q_c x_c y_c) of span{d - 1}
/// over the extremes d at node.
std::vector<std::vector<double>> node_subspace_basis(const EventTree& tree,
                                                     const PriorSet& priors, NodeIndex node);

struct Projection {
    std::vector<double> in_span;
    std::vector<double> orthogonal;
};

/// Splits a zero-mean child increment into its projection on span(basis)
/// and the orthogonal remainder. Throws InputError for a nonzero Q-mean.
Projection kw_project(const EventTree& tree, NodeIndex node, std::span<const double> increment,
                      const std::vector<std::vector<double>>& basis);

struct PremiseReport {
    /// Density set equals the whole slice (1 + L) ∩ {d >= 0}.
    std::vector<bool> full_slice;
    /// Scaling L by any predictable factor keeps densities admissible (L = {0}).
    std::vector<bool> scaling_closed;
    std::vector<std::size_t> dimension;
    bool holds = true;
};

PremiseReport premise_check(const EventTree& tree, const PriorSet& priors);

struct DecompositionDiagnostics {
    bool C_increasing = true;
    double min_delta_C = 0.0;
    double min_delta_A_q = 0.0;
    double universal_martingale_residual = 0.0;
    double reconstruction_error = 0.0;
    PremiseReport premise;
};

struct Decomposition {
    double X0 = 0.0;
    AdaptedFamily M;
    AdaptedFamily C;
    AdaptedFamily K;
    AdaptedFamily A_q;
    /// Increment of C into each node (zero at the root).
    std::vector<double> delta_C;
    DecompositionDiagnostics diagnostics;
};

/// Builds the decomposition of solution.value; failures show up in diagnostics.
Decomposition universal_decompose(const EventTree& tree, const SnellSolution& solution,
                                  const PriorSet& priors);

/// True iff C stays equal to C(v) on every node from v up to where the rule stops.
bool flat_off_check(const Decomposition& decomposition, const EventTree& tree,
                    const StoppingRule& rule, NodeIndex v,
                    double tolerance = kDecompositionTolerance);

} // namespace robust_snell
