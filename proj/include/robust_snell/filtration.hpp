#pragma once

// Finite filtered probability base: event trees, adapted families and
// one-step expectations under the reference measure Q.

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace robust_snell {

using NodeIndex = std::size_t;
inline constexpr NodeIndex kNoNode = std::numeric_limits<NodeIndex>::max();

/// Absolute tolerance used by comparisons unless a caller overrides it.
inline constexpr double kDefaultTolerance = 1e-9;
/// Tolerance for probability and martingale sums.
inline constexpr double kSumTolerance = 1e-12;

struct Branch {
    NodeIndex child;
    double q;
};

struct NodeRecord {
    std::string id;
    int time = 0;
    NodeIndex parent = kNoNode;
    std::vector<Branch> children;
    std::map<std::string, double> states;

    bool terminal() const noexcept { return children.empty(); }
};

/**
 * A non-recombining event tree with horizon T.
 *
 * Nodes are stored in insertion order and every parent is inserted before its
 * children, so a reverse sweep over indices is a valid backward induction
 * order. Structural mistakes that make the tree unusable (unknown parent,
 * duplicate id, second root) throw InputError on insertion; probability and
 * timing defects are left for validate_tree to report.
 */
class EventTree {
public:
    explicit EventTree(int horizon = 1);

    NodeIndex add_root(std::string id, std::map<std::string, double> states = {});
    /// Adds a child with explicit time; the branch probability is q.
    NodeIndex add_node(std::string id, int time, NodeIndex parent, double q,
                       std::map<std::string, double> states = {});
    /// Adds a child one period after its parent.
    NodeIndex add_child(NodeIndex parent, std::string id, double q,
                        std::map<std::string, double> states = {});

    int horizon() const noexcept { return horizon_; }
    NodeIndex root() const noexcept { return root_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    const NodeRecord& node(NodeIndex n) const { return nodes_.at(n); }
    const std::vector<NodeRecord>& nodes() const noexcept { return nodes_; }

    std::optional<NodeIndex> find(const std::string& id) const;
    /// Like find, but throws InputError for unknown ids.
    NodeIndex index_of(const std::string& id) const;

    /// Nodes of the subtree rooted at v, v first, in depth-first preorder.
    std::vector<NodeIndex> subtree(NodeIndex v) const;
    /// True when n lies in the subtree rooted at v.
    bool in_subtree(NodeIndex n, NodeIndex v) const;
    /// Non-terminal nodes of the subtree rooted at v.
    std::vector<NodeIndex> decision_nodes(NodeIndex v) const;
    /// Nodes grouped by time; index t holds the time-t nodes.
    std::vector<std::vector<NodeIndex>> levels() const;

    double state(NodeIndex n, const std::string& label) const;

private:
    int horizon_;
    NodeIndex root_ = kNoNode;
    std::vector<NodeRecord> nodes_;
    std::unordered_map<std::string, NodeIndex> by_id_;
};

/// Violated tree invariants as human readable messages; empty means valid.
std::vector<std::string> validate_tree(const EventTree& tree);

/// Throws InputError carrying the first violation when the tree is invalid.
void require_valid_tree(const EventTree& tree);

/// Real values indexed by tree node.
class AdaptedFamily {
public:
    AdaptedFamily() = default;
    explicit AdaptedFamily(std::vector<double> values) : values_(std::move(values)) {}
    AdaptedFamily(std::size_t size, double fill) : values_(size, fill) {}

    double operator[](NodeIndex n) const { return values_[n]; }
    double& operator[](NodeIndex n) { return values_[n]; }
    double at(NodeIndex n) const { return values_.at(n); }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }

    friend bool operator==(const AdaptedFamily&, const AdaptedFamily&) = default;

private:
    std::vector<double> values_;
};

/// Reads a node state ("S", "hit", ...) into a family; throws if any node lacks it.
AdaptedFamily state_family(const EventTree& tree, const std::string& label);

/// Checks that family is defined on every node and, for rewards, nonnegative.
void require_reward_family(const EventTree& tree, const AdaptedFamily& family);

/// Sum of q_c * child_values[c] over the children of node, in child order.
double step_expectation_q(const EventTree& tree, std::span<const double> child_values,
                          NodeIndex node);

/// One-step Q-expectation of family over the children of node.
double step_expectation_q(const EventTree& tree, const AdaptedFamily& family, NodeIndex node);

/// Values of family at the children of node, in child order.
std::vector<double> child_values(const EventTree& tree, const AdaptedFamily& family,
                                 NodeIndex node);

} // namespace robust_snell
