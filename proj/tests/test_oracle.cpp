#include "support/fixtures.hpp"

#include "robust_snell/errors.hpp"
#include "robust_snell/oracle.hpp"
#include "robust_snell/snell.hpp"

#include <doctest.h>
#include <fmt/format.h>

#include <random>

using namespace robust_snell;
using doctest::Approx;

TEST_CASE("brute_force_value on the fixtures") {
    const auto tt1 = fixtures::tt1();
    const auto bf1 = brute_force_value(tt1.tree, tt1.payoff, tt1.priors, tt1.tree.root());
    CHECK(bf1.value == 1.5);
    CHECK(bf1.best_rule == stop_at_time(tt1.tree, tt1.tree.root(), 1));
    CHECK(bf1.best_selection[tt1.tree.root()] == 0);

    const auto tt4 = fixtures::tt4();
    CHECK(brute_force_value(tt4.tree, tt4.payoff, tt4.priors, tt4.tree.root()).value == 2.625);

    // Five rules under Q: 1, 1.5, 1.25, 1.75, 1.5.
    const auto q4 = fixtures::single_prior(tt4);
    const auto bfq = brute_force_value(q4.tree, q4.payoff, q4.priors, q4.tree.root());
    CHECK(bfq.value == 1.75);
    CHECK(bfq.best_rule.stop_nodes() == std::vector<NodeIndex>{q4.at("d"), q4.at("uu"), q4.at("ud")});

    CHECK(brute_force_value(fixtures::tt3().tree, fixtures::tt3().payoff, fixtures::tt3().priors, 0)
              .value == Approx(1.3).epsilon(1e-12));
}

TEST_CASE("brute_force_strict_value") {
    const auto tt1 = fixtures::tt1();
    CHECK(brute_force_strict_value(tt1.tree, tt1.payoff, tt1.priors, tt1.tree.root()) == 1.5);
    const auto tt4 = fixtures::tt4();
    CHECK(brute_force_strict_value(tt4.tree, tt4.payoff, tt4.priors, tt4.tree.root()) == 2.625);
    for (const char* leaf : {"uu", "ud", "du", "dd"}) {
        CHECK(brute_force_strict_value(tt4.tree, tt4.payoff, tt4.priors, tt4.at(leaf)) ==
              tt4.payoff[tt4.at(leaf)]);
    }
}

TEST_CASE("crosscheck on the fixtures") {
    for (const auto& f : {fixtures::tt1(), fixtures::tt3(), fixtures::tt4(),
                          fixtures::single_prior(fixtures::tt4())}) {
        CAPTURE(f.name);
        CHECK(crosscheck(f.tree, f.payoff, f.priors).max_deviation() < 1e-12);
    }
    const auto tt4 = fixtures::tt4();
    const auto report = crosscheck(tt4.tree, tt4.payoff, tt4.priors);
    CHECK(report.max_deviation_value == 0.0);
    CHECK(report.max_deviation_strict == 0.0);
}

TEST_CASE("crosscheck on 50 seeded random instances") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        CAPTURE(seed);
        const auto inst = random_instance(seed);
        CHECK(inst.tree.horizon() <= 3);
        CHECK(crosscheck(inst.tree, inst.payoff, inst.priors).max_deviation() < 1e-9);
    }
}

TEST_CASE("random instances respect the limits and are reproducible") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto a = random_instance(seed);
        const auto b = random_instance(seed);
        CHECK(a.payoff == b.payoff);
        CHECK(a.tree.size() == b.tree.size());
        CHECK(validate_prior_set(a.tree, a.priors).empty() == validate_prior_set(b.tree, b.priors).empty());
        for (NodeIndex n = 0; n < a.tree.size(); ++n) {
            CHECK(a.tree.node(n).children.size() <= 3);
            CHECK(a.priors.extremes(n).size() <= 3);
            CHECK(a.priors.extremes(n) == b.priors.extremes(n));
        }
        CHECK(enumerable(a.tree, a.priors, a.tree.root()));
        require_solvable_priors(a.tree, a.priors);
    }
}

TEST_CASE("max property by resampling rule and selection pairs") {
    std::mt19937_64 rng(11);
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
        const auto inst = random_instance(seed);
        const auto& tree = inst.tree;
        for (NodeIndex v = 0; v < tree.size(); ++v) {
            const double bf = brute_force_value(tree, inst.payoff, inst.priors, v).value;
            const auto rules = enumerate_rules(tree, v, false);
            const auto selections = extreme_selections(tree, inst.priors, tree.decision_nodes(v));
            for (int trial = 0; trial < 20; ++trial) {
                const auto& rule = rules[std::uniform_int_distribution<std::size_t>(0, rules.size() - 1)(rng)];
                const auto& sel =
                    selections[std::uniform_int_distribution<std::size_t>(0, selections.size() - 1)(rng)];
                const auto z = density_process(tree, inst.priors, sel);
                if (z.z[v] == 0.0) {
                    continue;
                }
                CHECK(bayes_conditional(tree, z, inst.payoff, rule, v) <= bf + 1e-12);
            }
        }
    }
}

TEST_CASE("singleton prior matches classical enumeration") {
    for (std::uint64_t seed = 300; seed < 320; ++seed) {
        const auto inst = random_instance(seed);
        const PriorSet q(inst.tree);
        for (NodeIndex v = 0; v < inst.tree.size(); ++v) {
            double classical = 0.0;
            for (const auto& rule : enumerate_rules(inst.tree, v, false)) {
                classical = std::max(classical, expected_value_q(inst.tree, inst.payoff, rule, v));
            }
            CHECK(brute_force_value(inst.tree, inst.payoff, q, v).value ==
                  Approx(classical).epsilon(1e-14));
        }
    }
}

TEST_CASE("enumeration guards") {
    SUBCASE("too many decision nodes") {
        // A chain of 25 binary nodes whose down branch is terminal-free: a comb.
        EventTree tree(25);
        NodeIndex spine = tree.add_root("s0");
        for (int t = 1; t <= 25; ++t) {
            const NodeIndex next = tree.add_child(spine, fmt::format("s{}", t), 0.5);
            NodeIndex side = tree.add_child(spine, fmt::format("x{}", t), 0.5);
            for (int u = t + 1; u <= 25; ++u) {
                side = tree.add_child(side, fmt::format("x{}_{}", t, u), 1.0);
            }
            spine = next;
        }
        const PriorSet priors(tree);
        const AdaptedFamily payoff(tree.size(), 1.0);
        CHECK_FALSE(enumerable(tree, priors, tree.root()));
        CHECK_THROWS_AS(brute_force_value(tree, payoff, priors, tree.root()), SizeGuardError);
        CHECK_THROWS_AS(crosscheck(tree, payoff, priors), SizeGuardError);
    }
    SUBCASE("too many selections") {
        EventTree tree(3);
        const auto r = tree.add_root("r");
        for (NodeIndex n = r; n < tree.size(); ++n) {
            if (tree.node(n).time < 3) {
                tree.add_child(n, tree.node(n).id + "0", 0.5);
                tree.add_child(n, tree.node(n).id + "1", 0.5);
            }
        }
        PriorSet priors(tree);
        for (NodeIndex n : tree.decision_nodes(r)) {
            priors.set_extremes(n, {{1.5, 0.5}, {0.5, 1.5}, {1.2, 0.8}, {0.8, 1.2}, {1.0, 1.0}});
        }
        const AdaptedFamily payoff(tree.size(), 1.0);
        CHECK_THROWS_AS(brute_force_value(tree, payoff, priors, r), SizeGuardError);
        CHECK(brute_force_value(tree, payoff, priors, tree.index_of("r0")).value == 1.0);
    }
}
