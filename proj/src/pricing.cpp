#include "robust_snell/pricing.hpp"

#include "robust_snell/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace robust_snell {

void validate_params(const CrrParams& p) {
    auto fail = [](const std::string& what) { throw InputError("invalid crr parameters: " + what); };
    if (!(p.S0 > 0.0)) fail("S0 must be > 0");
    if (!(p.up > 1.0)) fail("up must be > 1");
    if (!(p.down > 0.0 && p.down < 1.0)) fail("down must lie in (0, 1)");
    if (p.steps < 1) fail("steps must be >= 1");
    if (!(p.rate >= 0.0)) fail("rate must be >= 0");
    if (!(p.strike > 0.0)) fail("K must be > 0");
    if (!(p.barrier > 0.0)) fail("H must be > 0");
    if (!(p.q_up > 0.0 && p.q_up < 1.0)) fail("q_up must lie in (0, 1)");
    if (!(p.p_lo > 0.0 && p.p_hi < 1.0 && p.p_lo <= p.p_hi)) {
        fail("ambiguity must satisfy 0 < lo <= hi < 1");
    }
    if (p.steps > kMaxCrrSteps) {
        throw SizeGuardError(fmt::format("{} steps exceed the lattice limit {}", p.steps,
                                         kMaxCrrSteps));
    }
}

namespace {

bool barrier_condition(const CrrParams& p, double S) {
    const double slack = 1e-12 * p.barrier;
    return p.direction == BarrierDirection::kCrossedBelow ? S <= p.barrier + slack
                                                          : S >= p.barrier - slack;
}

} // namespace

EventTree build_crr_barrier_tree(const CrrParams& params) {
    validate_params(params);
    EventTree tree(params.steps);
    const double hit0 = barrier_condition(params, params.S0) ? 1.0 : 0.0;
    tree.add_root("r", {{"S", params.S0}, {"hit", hit0}});
    const double q_down = 1.0 - params.q_up;
    // Breadth-first: nodes of one period are appended before the next period.
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (tree.node(n).time == params.steps) {
            continue;
        }
        const std::string prefix = n == tree.root() ? std::string() : tree.node(n).id;
        const double S = tree.state(n, "S");
        const double hit = tree.state(n, "hit");
        const double s_up = S * params.up;
        const double s_down = S * params.down;
        tree.add_child(n, prefix + "u", params.q_up,
                       {{"S", s_up}, {"hit", (hit > 0.0 || barrier_condition(params, s_up)) ? 1.0 : 0.0}});
        tree.add_child(n, prefix + "d", q_down,
                       {{"S", s_down},
                        {"hit", (hit > 0.0 || barrier_condition(params, s_down)) ? 1.0 : 0.0}});
    }
    return tree;
}

namespace {

AdaptedFamily put_payoff(const EventTree& tree, const CrrParams& params, bool knock_in) {
    AdaptedFamily out(tree.size(), 0.0);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const double S = tree.state(n, "S");
        const double hit = knock_in ? tree.state(n, "hit") : 1.0;
        const double discount = std::exp(-params.rate * tree.node(n).time);
        out[n] = discount * std::max(params.strike - S, 0.0) * hit;
    }
    return out;
}

} // namespace

AdaptedFamily knockin_payoff(const EventTree& tree, const CrrParams& params) {
    return put_payoff(tree, params, true);
}

AdaptedFamily vanilla_payoff(const EventTree& tree, const CrrParams& params) {
    return put_payoff(tree, params, false);
}

PriorSet drift_ambiguity_priors(const EventTree& tree, const CrrParams& params,
                                DensityMode mode) {
    if (!(params.p_lo > 0.0 && params.p_hi < 1.0 && params.p_lo <= params.p_hi)) {
        throw InputError("ambiguity bounds must satisfy 0 < lo <= hi < 1");
    }
    PriorSet priors(tree, mode);
    std::vector<DensityVector> extremes{
        {params.p_lo / params.q_up, (1.0 - params.p_lo) / (1.0 - params.q_up)}};
    if (params.p_hi > params.p_lo) {
        extremes.push_back({params.p_hi / params.q_up, (1.0 - params.p_hi) / (1.0 - params.q_up)});
    }
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (!tree.node(n).terminal()) {
            priors.set_extremes(n, extremes);
        }
    }
    return priors;
}

PriceReport price(const CrrParams& params, DensityMode mode) {
    PriceReport report;
    report.tree = build_crr_barrier_tree(params);
    report.payoff = knockin_payoff(report.tree, params);
    report.priors = drift_ambiguity_priors(report.tree, params, mode);
    report.solution = solve(report.tree, report.payoff, report.priors);
    report.H_S = report.solution.value[report.tree.root()];
    report.chosen_up_probability.assign(report.tree.size(),
                                        std::numeric_limits<double>::quiet_NaN());
    for (NodeIndex n = 0; n < report.tree.size(); ++n) {
        if (report.solution.stop_region[n]) {
            report.exercise_boundary.push_back(n);
        }
        const std::size_t e = report.solution.argmax_extreme[n];
        if (e != kNoExtreme) {
            report.chosen_up_probability[n] = params.q_up * report.priors.extremes(n)[e][0];
        }
    }
    return report;
}

double vanilla_price(const CrrParams& params, DensityMode mode) {
    const auto tree = build_crr_barrier_tree(params);
    const auto payoff = vanilla_payoff(tree, params);
    const auto priors = drift_ambiguity_priors(tree, params, mode);
    return solve(tree, payoff, priors).value[tree.root()];
}

} // namespace robust_snell
