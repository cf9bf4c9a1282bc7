#pragma once

// Stopping times on an event tree, represented as stop/continue rules.

#include "robust_snell/filtration.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace robust_snell {

/// Maximum number of decision nodes enumerate_rules accepts.
inline constexpr std::size_t kMaxEnumeratedDecisionNodes = 24;

/**
 * A stopping time taking values in the subtree below its floor node v.
 *
 * Stored in canonical form: only the first STOP node on each path from the
 * floor (the cut) is labelled STOP. Two rules describing the same stopping
 * time therefore compare equal. A strict rule is a member of the strictly
 * later class: it continues at the floor unless the floor is terminal.
 */
class StoppingRule {
public:
    /// Throws InputError when a path from floor reaches a leaf without STOP,
    /// or when a strict rule stops at a non-terminal floor.
    static StoppingRule from_labels(const EventTree& tree, NodeIndex floor,
                                    const std::vector<bool>& stop, bool strict = false);
    static StoppingRule from_stop_nodes(const EventTree& tree, NodeIndex floor,
                                        std::span<const NodeIndex> stop_nodes,
                                        bool strict = false);

    NodeIndex floor() const noexcept { return floor_; }
    bool strict() const noexcept { return strict_; }
    bool stops_at(NodeIndex n) const { return n < labels_.size() && labels_[n] != 0; }
    /// Cut nodes, sorted by index.
    const std::vector<NodeIndex>& stop_nodes() const noexcept { return cut_; }
    /// Nodes at or below the floor and strictly before the cut.
    const std::vector<NodeIndex>& continuation_nodes() const noexcept { return continuation_; }

    friend bool operator==(const StoppingRule& a, const StoppingRule& b) {
        return a.floor_ == b.floor_ && a.labels_ == b.labels_;
    }

private:
    NodeIndex floor_ = kNoNode;
    bool strict_ = false;
    std::vector<std::uint8_t> labels_;
    std::vector<NodeIndex> cut_;
    std::vector<NodeIndex> continuation_;
};

/// Rule that stops at the first node at or after v whose time is >= t.
StoppingRule stop_at_time(const EventTree& tree, NodeIndex v, int t);

/// E^Q[family(tau) | node v] for a rule whose floor is v.
double expected_value_q(const EventTree& tree, const AdaptedFamily& family,
                        const StoppingRule& rule, NodeIndex v);

/// Pathwise minimum of two rules sharing tree and floor.
StoppingRule min_rule(const EventTree& tree, const StoppingRule& a, const StoppingRule& b);
/// Pathwise maximum of two rules sharing tree and floor.
StoppingRule max_rule(const EventTree& tree, const StoppingRule& a, const StoppingRule& b);

/// Stops at the first node at or after v where predicate holds, else at the horizon.
StoppingRule first_entry_rule(const EventTree& tree,
                              const std::function<bool(NodeIndex)>& predicate, NodeIndex v);

/// Every stopping rule with floor v (strict: every rule strictly after v), each once.
/// Throws SizeGuardError when the subtree has more than max_decision_nodes decision nodes.
std::vector<StoppingRule> enumerate_rules(const EventTree& tree, NodeIndex v, bool strict,
                                          std::size_t max_decision_nodes =
                                              kMaxEnumeratedDecisionNodes);

/// Closed-form size of enumerate_rules without building the rules.
std::size_t count_rules(const EventTree& tree, NodeIndex v, bool strict);

} // namespace robust_snell
