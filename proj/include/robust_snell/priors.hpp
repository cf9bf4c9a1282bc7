#pragma once

// The dominated prior class, represented node by node as convex polytopes of
// one-step density ratios, together with the density processes it generates.

#include "robust_snell/filtration.hpp"
#include "robust_snell/stopping.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace robust_snell {

/// Maximum number of pure selections extreme_selections will materialise.
inline constexpr std::size_t kMaxExtremeSelections = 4096;

/// closure: densities d >= 0 (suprema attained). equivalent: d > 0 (priors ~ Q).
enum class DensityMode { kClosure, kEquivalent };

using DensityVector = std::vector<double>;

/**
 * Per-node sets of one-step density ratios.
 *
 * At each non-terminal node the admissible one-step densities are the convex
 * hull of `extremes(n)`; the global prior class is the pasting-stable hull of
 * these local sets. Component c of a density vector refers to child c in the
 * tree's child order. Terminal nodes carry no extremes.
 */
class PriorSet {
public:
    PriorSet() = default;
    /// Every non-terminal node gets the single reference density (1, ..., 1).
    explicit PriorSet(const EventTree& tree, DensityMode mode = DensityMode::kClosure);

    void set_extremes(NodeIndex n, std::vector<DensityVector> extremes);
    const std::vector<DensityVector>& extremes(NodeIndex n) const { return extremes_.at(n); }
    std::size_t size() const noexcept { return extremes_.size(); }

    DensityMode mode() const noexcept { return mode_; }
    void set_mode(DensityMode mode) noexcept { mode_ = mode; }

private:
    DensityMode mode_ = DensityMode::kClosure;
    std::vector<std::vector<DensityVector>> extremes_;
};

/// Up-probability interval [lo, hi] at every binary node, relative to the tree's own q.
/// Extreme 0 corresponds to lo, extreme 1 to hi; lo == hi yields one extreme.
PriorSet interval_up_probability_priors(const EventTree& tree, double lo, double hi,
                                        DensityMode mode = DensityMode::kClosure);

struct PriorIssue {
    enum class Kind {
        kShape,            // missing node, wrong dimension, empty extreme list
        kMartingaleSum,    // sum_c q_c d_c != 1
        kNegative,         // d_c < 0
        kNonpositive,      // d_c <= 0 in equivalent mode
        kNoPositivePoint,  // equivalent mode: hull misses the open orthant
    };
    Kind kind;
    NodeIndex node;
    std::string message;
};

std::vector<PriorIssue> validate_prior_set(const EventTree& tree, const PriorSet& priors);

/// Throws InputError unless the prior set can be solved. In equivalent mode,
/// extremes on the boundary of the orthant are accepted as long as the hull
/// contains a strictly positive density; the solver then reports attainment.
void require_solvable_priors(const EventTree& tree, const PriorSet& priors);

/**
 * A density process Z = dP/dQ on F_t realised by one-step ratios.
 *
 * z[root] = 1 and z[child] = z[parent] * ratio[parent][c]. ratio is empty at
 * terminal nodes.
 */
struct DensityProcess {
    std::vector<DensityVector> ratio;
    std::vector<double> z;

    friend bool operator==(const DensityProcess&, const DensityProcess&) = default;
};

/// Builds z from per-node ratios; throws InputError if a ratio breaks the martingale identity.
DensityProcess make_density_process(const EventTree& tree, std::vector<DensityVector> ratios);

/// Z identically one.
DensityProcess reference_density(const EventTree& tree);

/// Largest |sum_c q_c ratio_c - 1| over non-terminal nodes.
double martingale_defect(const EventTree& tree, const DensityProcess& density);

/// Per-node choice of extreme index (entries at terminal nodes are ignored).
using ExtremeSelection = std::vector<std::size_t>;
/// Per-node convex weights over the node's extremes.
using ExtremeWeights = std::vector<std::vector<double>>;

DensityProcess density_process(const EventTree& tree, const PriorSet& priors,
                               const ExtremeWeights& weights);
DensityProcess density_process(const EventTree& tree, const PriorSet& priors,
                               const ExtremeSelection& selection);

/**
 * Ratio pasting on the F_t-measurable event A (a set of time-t nodes): follow
 * first's ratios before t, then second's ratios below nodes of A and first's
 * elsewhere. Throws InputError when A contains a node whose time is not t.
 */
DensityProcess paste(const EventTree& tree, const DensityProcess& first,
                     const DensityProcess& second, int t, std::span<const NodeIndex> event);

/// z = x * first.z + (1 - x) * second.z node-wise; x must lie in [0, 1].
DensityProcess convex_combine(const EventTree& tree, const DensityProcess& first,
                              const DensityProcess& second, double x);

/// E^P[family(tau) | F_v] = E^Q[Z_tau family(tau) | F_v] / Z_v.
/// Throws UndefinedConditionalError when Z_v = 0.
double bayes_conditional(const EventTree& tree, const DensityProcess& density,
                         const AdaptedFamily& family, const StoppingRule& rule, NodeIndex v);

/// Pure extreme selections over all non-terminal nodes, mixed radix with the
/// lowest-index node varying fastest.
std::vector<ExtremeSelection> extreme_selections(const EventTree& tree, const PriorSet& priors,
                                                 std::size_t max_count = kMaxExtremeSelections);

/// Same, but only the listed nodes vary; every other node keeps extreme 0.
std::vector<ExtremeSelection> extreme_selections(const EventTree& tree, const PriorSet& priors,
                                                 std::span<const NodeIndex> nodes,
                                                 std::size_t max_count = kMaxExtremeSelections);

/// Number of selections over the listed nodes (saturating).
std::size_t count_selections(const PriorSet& priors, std::span<const NodeIndex> nodes);

} // namespace robust_snell
