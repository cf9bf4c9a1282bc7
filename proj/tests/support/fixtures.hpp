#pragma once

// The three canonical desk-scale fixtures.

#include "robust_snell/filtration.hpp"
#include "robust_snell/priors.hpp"

#include <string>

namespace fixtures {

using namespace robust_snell;

struct Fixture {
    std::string name;
    EventTree tree;
    AdaptedFamily payoff;
    PriorSet priors;

    NodeIndex at(const std::string& id) const { return tree.index_of(id); }
};

// T = 1, two children, up/down densities (1.5, 0.5) and (0.5, 1.5).
inline Fixture tt1() {
    EventTree tree(1);
    const auto r = tree.add_root("r");
    tree.add_child(r, "u", 0.5);
    tree.add_child(r, "d", 0.5);
    AdaptedFamily payoff(std::vector<double>{1.0, 2.0, 0.0});
    PriorSet priors(tree);
    priors.set_extremes(r, {{1.5, 0.5}, {0.5, 1.5}});
    return {"TT1", std::move(tree), std::move(payoff), std::move(priors)};
}

// T = 1, three equally likely children, densities 1 + lambda (1, 0, -1), |lambda| <= 0.9.
inline Fixture tt3() {
    EventTree tree(1);
    const auto r = tree.add_root("r");
    for (const char* id : {"a", "b", "c"}) {
        tree.add_child(r, id, 1.0 / 3.0);
    }
    AdaptedFamily payoff(std::vector<double>{0.0, 2.0, 0.0, 1.0});
    PriorSet priors(tree);
    priors.set_extremes(r, {{1.9, 1.0, 0.1}, {0.1, 1.0, 1.9}});
    return {"TT3", std::move(tree), std::move(payoff), std::move(priors)};
}

// T = 2 binomial put, S: 4 -> (8, 2) -> (16, 4, 4, 1), K = 5,
// up density in {0.5, 1.5} at every node.
inline Fixture tt4() {
    EventTree tree(2);
    const auto r = tree.add_root("r", {{"S", 4.0}});
    const auto u = tree.add_child(r, "u", 0.5, {{"S", 8.0}});
    const auto d = tree.add_child(r, "d", 0.5, {{"S", 2.0}});
    tree.add_child(u, "uu", 0.5, {{"S", 16.0}});
    tree.add_child(u, "ud", 0.5, {{"S", 4.0}});
    tree.add_child(d, "du", 0.5, {{"S", 4.0}});
    tree.add_child(d, "dd", 0.5, {{"S", 1.0}});
    AdaptedFamily payoff(std::vector<double>{1.0, 0.0, 3.0, 0.0, 1.0, 1.0, 4.0});
    PriorSet priors(tree);
    for (auto n : {r, u, d}) {
        priors.set_extremes(n, {{0.5, 1.5}, {1.5, 0.5}});
    }
    return {"TT4", std::move(tree), std::move(payoff), std::move(priors)};
}

/// Same tree and payoff with the singleton prior {Q}.
inline Fixture single_prior(Fixture f) {
    f.priors = PriorSet(f.tree);
    f.name += "/Q";
    return f;
}

} // namespace fixtures
