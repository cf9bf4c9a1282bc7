#include "robust_snell/stopping.hpp"

#include "robust_snell/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <limits>

namespace robust_snell {

StoppingRule StoppingRule::from_labels(const EventTree& tree, NodeIndex floor,
                                       const std::vector<bool>& stop, bool strict) {
    if (floor >= tree.size()) {
        throw InputError("stopping rule floor is not a node of the tree");
    }
    if (stop.size() != tree.size()) {
        throw InputError(fmt::format("stopping rule has {} labels for {} nodes", stop.size(),
                                     tree.size()));
    }
    const auto& floor_rec = tree.node(floor);
    if (strict && !floor_rec.terminal() && stop[floor]) {
        throw InputError(fmt::format("strict rule stops at its non-terminal floor '{}'",
                                     floor_rec.id));
    }

    StoppingRule rule;
    rule.floor_ = floor;
    rule.strict_ = strict;
    rule.labels_.assign(tree.size(), 0);
    std::vector<NodeIndex> stack{floor};
    while (!stack.empty()) {
        const NodeIndex n = stack.back();
        stack.pop_back();
        const auto& rec = tree.node(n);
        if (stop[n]) {
            rule.labels_[n] = 1;
            rule.cut_.push_back(n);
            continue;
        }
        if (rec.terminal()) {
            throw InputError(fmt::format("terminal node '{}' is reached without a STOP", rec.id));
        }
        rule.continuation_.push_back(n);
        for (const auto& br : rec.children) {
            stack.push_back(br.child);
        }
    }
    std::sort(rule.cut_.begin(), rule.cut_.end());
    std::sort(rule.continuation_.begin(), rule.continuation_.end());
    return rule;
}

StoppingRule StoppingRule::from_stop_nodes(const EventTree& tree, NodeIndex floor,
                                           std::span<const NodeIndex> stop_nodes, bool strict) {
    std::vector<bool> stop(tree.size(), false);
    for (NodeIndex n : stop_nodes) {
        if (n >= tree.size()) {
            throw InputError("stop node is not a node of the tree");
        }
        stop[n] = true;
    }
    return from_labels(tree, floor, stop, strict);
}

StoppingRule stop_at_time(const EventTree& tree, NodeIndex v, int t) {
    std::vector<bool> stop(tree.size(), false);
    for (NodeIndex n : tree.subtree(v)) {
        const auto& rec = tree.node(n);
        stop[n] = rec.time >= t || rec.terminal();
    }
    return StoppingRule::from_labels(tree, v, stop, false);
}

double expected_value_q(const EventTree& tree, const AdaptedFamily& family,
                        const StoppingRule& rule, NodeIndex v) {
    if (rule.floor() != v) {
        throw InputError(fmt::format("rule floor '{}' differs from conditioning node '{}'",
                                     tree.node(rule.floor()).id, tree.node(v).id));
    }
    if (family.size() != tree.size()) {
        throw InputError("family is not defined on every node");
    }
    // Children carry larger indices than parents, so one reverse sweep suffices.
    const auto nodes = tree.subtree(v);
    std::vector<double> value(tree.size(), 0.0);
    for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
        const NodeIndex n = *it;
        if (rule.stops_at(n)) {
            value[n] = family[n];
        } else if (!tree.node(n).terminal()) {
            double sum = 0.0;
            for (const auto& br : tree.node(n).children) {
                sum += br.q * value[br.child];
            }
            value[n] = sum;
        }
    }
    return value[v];
}

namespace {

void require_compatible(const StoppingRule& a, const StoppingRule& b) {
    if (a.floor() != b.floor()) {
        throw InputError("rules have different floors");
    }
}

} // namespace

StoppingRule min_rule(const EventTree& tree, const StoppingRule& a, const StoppingRule& b) {
    require_compatible(a, b);
    std::vector<bool> stop(tree.size(), false);
    for (NodeIndex n : tree.subtree(a.floor())) {
        stop[n] = a.stops_at(n) || b.stops_at(n);
    }
    return StoppingRule::from_labels(tree, a.floor(), stop, a.strict() && b.strict());
}

StoppingRule max_rule(const EventTree& tree, const StoppingRule& a, const StoppingRule& b) {
    require_compatible(a, b);
    std::vector<bool> stop(tree.size(), false);
    struct Frame {
        NodeIndex node;
        bool a_done;
        bool b_done;
    };
    std::vector<Frame> stack{{a.floor(), false, false}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        f.a_done = f.a_done || a.stops_at(f.node);
        f.b_done = f.b_done || b.stops_at(f.node);
        if (f.a_done && f.b_done) {
            stop[f.node] = true;
            continue;
        }
        for (const auto& br : tree.node(f.node).children) {
            stack.push_back({br.child, f.a_done, f.b_done});
        }
    }
    return StoppingRule::from_labels(tree, a.floor(), stop, a.strict() || b.strict());
}

StoppingRule first_entry_rule(const EventTree& tree,
                              const std::function<bool(NodeIndex)>& predicate, NodeIndex v) {
    std::vector<bool> stop(tree.size(), false);
    for (NodeIndex n : tree.subtree(v)) {
        stop[n] = tree.node(n).terminal() || predicate(n);
    }
    return StoppingRule::from_labels(tree, v, stop, false);
}

namespace {

using Cut = std::vector<NodeIndex>;

// All cuts of the subtree at n; the "stop here" option comes first unless
// the caller asked for strictly later rules.
std::vector<Cut> cuts_below(const EventTree& tree, NodeIndex n, bool allow_stop_here) {
    const auto& rec = tree.node(n);
    std::vector<Cut> out;
    if (rec.terminal()) {
        out.push_back({n});
        return out;
    }
    if (allow_stop_here) {
        out.push_back({n});
    }
    std::vector<Cut> product{Cut{}};
    for (const auto& br : rec.children) {
        const auto child_cuts = cuts_below(tree, br.child, true);
        std::vector<Cut> next;
        next.reserve(product.size() * child_cuts.size());
        for (const auto& prefix : product) {
            for (const auto& tail : child_cuts) {
                Cut joined = prefix;
                joined.insert(joined.end(), tail.begin(), tail.end());
                next.push_back(std::move(joined));
            }
        }
        product = std::move(next);
    }
    out.insert(out.end(), std::make_move_iterator(product.begin()),
               std::make_move_iterator(product.end()));
    return out;
}

std::size_t saturating_mul(std::size_t a, std::size_t b) {
    if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) {
        return std::numeric_limits<std::size_t>::max();
    }
    return a * b;
}

std::size_t count_below(const EventTree& tree, NodeIndex n, bool allow_stop_here) {
    const auto& rec = tree.node(n);
    if (rec.terminal()) {
        return 1;
    }
    std::size_t product = 1;
    for (const auto& br : rec.children) {
        product = saturating_mul(product, count_below(tree, br.child, true));
    }
    if (allow_stop_here && product < std::numeric_limits<std::size_t>::max()) {
        ++product;
    }
    return product;
}

} // namespace

std::vector<StoppingRule> enumerate_rules(const EventTree& tree, NodeIndex v, bool strict,
                                          std::size_t max_decision_nodes) {
    const auto decisions = tree.decision_nodes(v).size();
    if (decisions > max_decision_nodes) {
        throw SizeGuardError(fmt::format(
            "subtree at '{}' has {} decision nodes, more than the enumeration limit {}",
            tree.node(v).id, decisions, max_decision_nodes));
    }
    std::vector<StoppingRule> rules;
    for (const auto& cut : cuts_below(tree, v, !strict)) {
        rules.push_back(StoppingRule::from_stop_nodes(tree, v, cut, strict));
    }
    return rules;
}

std::size_t count_rules(const EventTree& tree, NodeIndex v, bool strict) {
    return count_below(tree, v, !strict);
}

} // namespace robust_snell
