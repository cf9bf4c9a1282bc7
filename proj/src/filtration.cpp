#include "robust_snell/filtration.hpp"

#include "robust_snell/errors.hpp"

#include <fmt/format.h>

#include <cmath>

namespace robust_snell {

EventTree::EventTree(int horizon) : horizon_(horizon) {}

NodeIndex EventTree::add_root(std::string id, std::map<std::string, double> states) {
    if (root_ != kNoNode) {
        throw InputError("tree already has a root");
    }
    if (by_id_.contains(id)) {
        throw InputError(fmt::format("duplicate node id '{}'", id));
    }
    root_ = nodes_.size();
    by_id_.emplace(id, root_);
    nodes_.push_back(NodeRecord{std::move(id), 0, kNoNode, {}, std::move(states)});
    return root_;
}

NodeIndex EventTree::add_node(std::string id, int time, NodeIndex parent, double q,
                              std::map<std::string, double> states) {
    if (parent >= nodes_.size()) {
        throw InputError(fmt::format("node '{}' has an unknown parent", id));
    }
    if (by_id_.contains(id)) {
        throw InputError(fmt::format("duplicate node id '{}'", id));
    }
    const NodeIndex n = nodes_.size();
    by_id_.emplace(id, n);
    nodes_.push_back(NodeRecord{std::move(id), time, parent, {}, std::move(states)});
    nodes_[parent].children.push_back(Branch{n, q});
    return n;
}

NodeIndex EventTree::add_child(NodeIndex parent, std::string id, double q,
                               std::map<std::string, double> states) {
    const int time = nodes_.at(parent).time + 1;
    return add_node(std::move(id), time, parent, q, std::move(states));
}

std::optional<NodeIndex> EventTree::find(const std::string& id) const {
    const auto it = by_id_.find(id);
    if (it == by_id_.end()) {
        return std::nullopt;
    }
    return it->second;
}

NodeIndex EventTree::index_of(const std::string& id) const {
    if (auto n = find(id)) {
        return *n;
    }
    throw InputError(fmt::format("unknown node id '{}'", id));
}

std::vector<NodeIndex> EventTree::subtree(NodeIndex v) const {
    std::vector<NodeIndex> out;
    std::vector<NodeIndex> stack{v};
    while (!stack.empty()) {
        const NodeIndex n = stack.back();
        stack.pop_back();
        out.push_back(n);
        const auto& ch = nodes_[n].children;
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) {
            stack.push_back(it->child);
        }
    }
    return out;
}

bool EventTree::in_subtree(NodeIndex n, NodeIndex v) const {
    while (n != kNoNode) {
        if (n == v) {
            return true;
        }
        n = nodes_[n].parent;
    }
    return false;
}

std::vector<NodeIndex> EventTree::decision_nodes(NodeIndex v) const {
    std::vector<NodeIndex> out;
    for (NodeIndex n : subtree(v)) {
        if (!nodes_[n].terminal()) {
            out.push_back(n);
        }
    }
    return out;
}

std::vector<std::vector<NodeIndex>> EventTree::levels() const {
    std::vector<std::vector<NodeIndex>> out(static_cast<std::size_t>(std::max(horizon_, 0)) + 1);
    for (NodeIndex n = 0; n < nodes_.size(); ++n) {
        const auto t = static_cast<std::size_t>(std::max(nodes_[n].time, 0));
        if (t >= out.size()) {
            out.resize(t + 1);
        }
        out[t].push_back(n);
    }
    return out;
}

double EventTree::state(NodeIndex n, const std::string& label) const {
    const auto& states = nodes_.at(n).states;
    const auto it = states.find(label);
    if (it == states.end()) {
        throw InputError(fmt::format("node '{}' has no state '{}'", nodes_[n].id, label));
    }
    return it->second;
}

std::vector<std::string> validate_tree(const EventTree& tree) {
    std::vector<std::string> report;
    if (tree.horizon() < 1) {
        report.push_back(fmt::format("horizon {} < 1", tree.horizon()));
    }
    if (tree.root() == kNoNode) {
        report.emplace_back("tree has no root");
        return report;
    }
    if (tree.node(tree.root()).time != 0) {
        report.push_back(fmt::format("root time {} ≠ 0", tree.node(tree.root()).time));
    }
    for (const auto& rec : tree.nodes()) {
        if (rec.terminal()) {
            if (rec.time != tree.horizon()) {
                report.push_back(fmt::format("leaf '{}' at time {} ≠ horizon {}", rec.id,
                                             rec.time, tree.horizon()));
            }
            continue;
        }
        double sum = 0.0;
        bool zero_branch = false;
        for (const auto& br : rec.children) {
            const auto& child = tree.node(br.child);
            if (child.time != rec.time + 1) {
                report.push_back(fmt::format("child '{}' at time {} ≠ parent time {} + 1",
                                             child.id, child.time, rec.time));
            }
            if (!(br.q > 0.0)) {
                zero_branch = true;
            }
            sum += br.q;
        }
        if (zero_branch) {
            report.push_back(fmt::format("zero-probability branch at node '{}'", rec.id));
        }
        if (!(std::abs(sum - 1.0) <= kSumTolerance)) {
            report.push_back(fmt::format("probabilities sum {:g} ≠ 1 at node '{}'", sum, rec.id));
        }
    }
    return report;
}

void require_valid_tree(const EventTree& tree) {
    const auto report = validate_tree(tree);
    if (!report.empty()) {
        throw InputError("invalid tree: " + report.front());
    }
}

AdaptedFamily state_family(const EventTree& tree, const std::string& label) {
    AdaptedFamily out(tree.size(), 0.0);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        out[n] = tree.state(n, label);
    }
    return out;
}

void require_reward_family(const EventTree& tree, const AdaptedFamily& family) {
    if (family.size() != tree.size()) {
        throw InputError(fmt::format("reward family has {} values for {} nodes", family.size(),
                                     tree.size()));
    }
    for (NodeIndex n = 0; n < family.size(); ++n) {
        if (!(family[n] >= 0.0) || !std::isfinite(family[n])) {
            throw InputError(fmt::format("reward at node '{}' is {} (must be finite and >= 0)",
                                         tree.node(n).id, family[n]));
        }
    }
}

double step_expectation_q(const EventTree& tree, std::span<const double> child_values,
                          NodeIndex node) {
    const auto& rec = tree.node(node);
    if (rec.terminal()) {
        throw InputError(fmt::format("node '{}' is terminal", rec.id));
    }
    if (child_values.size() != rec.children.size()) {
        throw InputError(fmt::format("node '{}' has {} children but {} values were given",
                                     rec.id, rec.children.size(), child_values.size()));
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < rec.children.size(); ++c) {
        sum += rec.children[c].q * child_values[c];
    }
    return sum;
}

double step_expectation_q(const EventTree& tree, const AdaptedFamily& family, NodeIndex node) {
    return step_expectation_q(tree, child_values(tree, family, node), node);
}

std::vector<double> child_values(const EventTree& tree, const AdaptedFamily& family,
                                 NodeIndex node) {
    const auto& rec = tree.node(node);
    std::vector<double> out;
    out.reserve(rec.children.size());
    for (const auto& br : rec.children) {
        if (br.child >= family.size()) {
            throw InputError(fmt::format("family has no value for node '{}'",
                                         tree.node(br.child).id));
        }
        out.push_back(family[br.child]);
    }
    return out;
}

} // namespace robust_snell
