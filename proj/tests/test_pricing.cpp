#include "support/fixtures.hpp"

#include "robust_snell/errors.hpp"
#include "robust_snell/pricing.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace robust_snell;
using doctest::Approx;

namespace {

CrrParams tt4_params() {
    CrrParams p;
    p.S0 = 4.0;
    p.up = 2.0;
    p.down = 0.5;
    p.steps = 2;
    p.rate = 0.0;
    p.strike = 5.0;
    p.barrier = 4.0;
    p.q_up = 0.5;
    p.p_lo = 0.25;
    p.p_hi = 0.75;
    return p;
}

std::vector<std::string> hit_ids(const EventTree& tree) {
    std::vector<std::string> out;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (tree.state(n, "hit") == 1.0) {
            out.push_back(tree.node(n).id);
        }
    }
    return out;
}

CrrParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    CrrParams p;
    p.S0 = 50.0 + 100.0 * unit(rng);
    p.up = 1.05 + 0.4 * unit(rng);
    p.down = 0.6 + 0.35 * unit(rng);
    p.steps = 1 + static_cast<int>(unit(rng) * 6);
    p.rate = 0.03 * unit(rng);
    p.strike = p.S0 * (0.7 + 0.6 * unit(rng));
    p.barrier = p.S0 * (0.6 + 0.6 * unit(rng));
    p.direction = unit(rng) < 0.5 ? BarrierDirection::kCrossedBelow : BarrierDirection::kCrossedAbove;
    p.q_up = 0.3 + 0.4 * unit(rng);
    const double a = 0.1 + 0.8 * unit(rng);
    const double b = 0.1 + 0.8 * unit(rng);
    p.p_lo = std::min(a, b);
    p.p_hi = std::max(a, b);
    return p;
}

} // namespace

TEST_CASE("build_crr_barrier_tree") {
    auto p = tt4_params();
    p.barrier = 2.0;
    const auto tree = build_crr_barrier_tree(p);
    CHECK(tree.size() == 7);
    CHECK(tree.state(tree.index_of("dd"), "S") == 1.0);
    CHECK(tree.state(tree.index_of("uu"), "S") == 16.0);
    CHECK(hit_ids(tree) == std::vector<std::string>{"d", "du", "dd"});

    p.barrier = 4.0;
    CHECK(hit_ids(build_crr_barrier_tree(p)).size() == 7);
    p.barrier = 0.5;
    CHECK(hit_ids(build_crr_barrier_tree(p)).empty());

    p.barrier = 8.0;
    p.direction = BarrierDirection::kCrossedAbove;
    CHECK(hit_ids(build_crr_barrier_tree(p)) == std::vector<std::string>{"u", "uu", "ud"});
}

TEST_CASE("parameter validation") {
    const auto base = tt4_params();
    auto bad = base;
    bad.up = 0.9;
    CHECK_THROWS_AS(validate_params(bad), InputError);
    bad = base;
    bad.down = 1.0;
    CHECK_THROWS_AS(validate_params(bad), InputError);
    bad = base;
    bad.p_lo = 0.8;
    CHECK_THROWS_AS(validate_params(bad), InputError);
    bad = base;
    bad.p_hi = 1.0;
    CHECK_THROWS_AS(validate_params(bad), InputError);
    bad = base;
    bad.steps = 0;
    CHECK_THROWS_AS(validate_params(bad), InputError);
    bad = base;
    bad.steps = kMaxCrrSteps + 1;
    CHECK_THROWS_AS(validate_params(bad), SizeGuardError);
    bad = base;
    bad.S0 = -1.0;
    CHECK_THROWS_AS(build_crr_barrier_tree(bad), InputError);
}

TEST_CASE("knockin_payoff") {
    auto p = tt4_params();
    const auto tree = build_crr_barrier_tree(p);
    const auto y = knockin_payoff(tree, p);
    CHECK(y == AdaptedFamily(std::vector<double>{1.0, 0.0, 3.0, 0.0, 1.0, 1.0, 4.0}));
    CHECK(y[tree.index_of("dd")] == 4.0);

    p.barrier = 0.5;
    const auto none = knockin_payoff(build_crr_barrier_tree(p), p);
    CHECK(none == AdaptedFamily(tree.size(), 0.0));

    p = tt4_params();
    p.rate = std::log(2.0);
    const auto disc = knockin_payoff(tree, p);
    CHECK(disc[tree.index_of("d")] == Approx(1.5).epsilon(1e-15));

    EventTree bare(1);
    bare.add_root("r");
    bare.add_child(0, "u", 1.0);
    CHECK_THROWS_AS(knockin_payoff(bare, p), InputError);
}

TEST_CASE("drift_ambiguity_priors") {
    auto p = tt4_params();
    const auto tree = build_crr_barrier_tree(p);
    const auto priors = drift_ambiguity_priors(tree, p);
    const auto tt4 = fixtures::tt4();
    for (NodeIndex n : tree.decision_nodes(tree.root())) {
        CHECK(priors.extremes(n) == std::vector<DensityVector>{{0.5, 1.5}, {1.5, 0.5}});
        CHECK(priors.extremes(n) == tt4.priors.extremes(tt4.at(tree.node(n).id)));
    }
    p.p_lo = p.p_hi = 0.5;
    const auto single = drift_ambiguity_priors(tree, p);
    for (NodeIndex n : tree.decision_nodes(tree.root())) {
        CHECK(single.extremes(n) == std::vector<DensityVector>{{1.0, 1.0}});
    }
    p.p_lo = 0.0;
    CHECK_THROWS_AS(drift_ambiguity_priors(tree, p), InputError);
}

TEST_CASE("price") {
    auto p = tt4_params();
    const auto report = price(p);
    CHECK(report.H_S == 2.625);
    CHECK(report.exercise_boundary ==
          std::vector<NodeIndex>{report.tree.index_of("uu"), report.tree.index_of("ud"),
                                 report.tree.index_of("du"), report.tree.index_of("dd")});
    CHECK(report.chosen_up_probability[report.tree.root()] == 0.25);
    CHECK(std::isnan(report.chosen_up_probability[report.tree.index_of("dd")]));

    // Same tree, payoff and priors as the single-prior TT4 fixture.
    p.p_lo = p.p_hi = 0.5;
    const auto classical = price(p);
    const auto q4 = fixtures::single_prior(fixtures::tt4());
    CHECK(classical.H_S == solve(q4.tree, q4.payoff, q4.priors).value[q4.tree.root()]);
    CHECK(classical.H_S == 1.75);

    p = tt4_params();
    p.barrier = 0.5;
    CHECK(price(p).H_S == 0.0);
}

TEST_CASE("pricing properties over seeded parameter sets") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const auto p = random_params(rng);
        CAPTURE(trial);
        const auto report = price(p);
        const double vanilla = vanilla_price(p);
        CHECK(report.H_S <= vanilla + 1e-12);

        for (NodeIndex n = 0; n < report.tree.size(); ++n) {
            const auto& rec = report.tree.node(n);
            if (rec.parent != kNoNode) {
                CHECK(report.tree.state(rec.parent, "hit") <= report.tree.state(n, "hit"));
            }
        }

        auto wider = p;
        wider.p_lo = std::max(0.01, p.p_lo - 0.05);
        wider.p_hi = std::min(0.99, p.p_hi + 0.05);
        CHECK(price(wider).H_S >= report.H_S - 1e-12);

        auto higher_k = p;
        higher_k.strike *= 1.1;
        CHECK(price(higher_k).H_S >= report.H_S - 1e-12);

        auto higher_s = p;
        higher_s.S0 *= 1.1;
        CHECK(vanilla_price(higher_s) <= vanilla + 1e-12);
        // A down barrier is hit on fewer paths from a higher start; an up barrier on more.
        if (p.direction == BarrierDirection::kCrossedBelow) {
            CHECK(price(higher_s).H_S <= report.H_S + 1e-12);
        }

        auto always_in = p;
        always_in.direction = BarrierDirection::kCrossedBelow;
        always_in.barrier = p.S0;
        CHECK(price(always_in).H_S == Approx(vanilla_price(always_in)).epsilon(1e-14));
    }
}

TEST_CASE("ambiguity grid is nondecreasing") {
    auto p = tt4_params();
    double previous = -1.0;
    for (auto [lo, hi] : {std::pair{0.5, 0.5}, std::pair{0.4, 0.6}, std::pair{0.25, 0.75}}) {
        p.p_lo = lo;
        p.p_hi = hi;
        const double value = price(p).H_S;
        CHECK(value >= previous);
        previous = value;
    }
    CHECK(previous == 2.625);
}
