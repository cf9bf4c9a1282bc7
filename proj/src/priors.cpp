#include "robust_snell/priors.hpp"

#include "robust_snell/errors.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>

namespace robust_snell {

PriorSet::PriorSet(const EventTree& tree, DensityMode mode)
    : mode_(mode), extremes_(tree.size()) {
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (!rec.terminal()) {
            extremes_[n].push_back(DensityVector(rec.children.size(), 1.0));
        }
    }
}

void PriorSet::set_extremes(NodeIndex n, std::vector<DensityVector> extremes) {
    if (n >= extremes_.size()) {
        throw InputError("prior set has no such node");
    }
    extremes_[n] = std::move(extremes);
}

PriorSet interval_up_probability_priors(const EventTree& tree, double lo, double hi,
                                        DensityMode mode) {
    if (!(lo > 0.0 && hi < 1.0 && lo <= hi)) {
        throw InputError(fmt::format("up-probability interval [{}, {}] must satisfy 0 < lo <= hi < 1",
                                     lo, hi));
    }
    PriorSet priors(tree, mode);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (rec.terminal()) {
            continue;
        }
        if (rec.children.size() != 2) {
            throw InputError(fmt::format("node '{}' is not binary", rec.id));
        }
        const double q_up = rec.children[0].q;
        const double q_down = rec.children[1].q;
        std::vector<DensityVector> ext{{lo / q_up, (1.0 - lo) / q_down}};
        if (hi > lo) {
            ext.push_back({hi / q_up, (1.0 - hi) / q_down});
        }
        priors.set_extremes(n, std::move(ext));
    }
    return priors;
}

std::vector<PriorIssue> validate_prior_set(const EventTree& tree, const PriorSet& priors) {
    using Kind = PriorIssue::Kind;
    std::vector<PriorIssue> report;
    if (priors.size() != tree.size()) {
        report.push_back({Kind::kShape, kNoNode,
                          fmt::format("prior set covers {} nodes, tree has {}", priors.size(),
                                      tree.size())});
        return report;
    }
    const bool equivalent = priors.mode() == DensityMode::kEquivalent;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        const auto& ext = priors.extremes(n);
        if (rec.terminal()) {
            continue;
        }
        if (ext.empty()) {
            report.push_back({Kind::kShape, n, fmt::format("no extreme points at node '{}'", rec.id)});
            continue;
        }
        DensityVector mean(rec.children.size(), 0.0);
        bool shape_ok = true;
        for (std::size_t e = 0; e < ext.size(); ++e) {
            const auto& d = ext[e];
            if (d.size() != rec.children.size()) {
                report.push_back({Kind::kShape, n,
                                  fmt::format("extreme {} at node '{}' has {} components for {} children",
                                              e, rec.id, d.size(), rec.children.size())});
                shape_ok = false;
                continue;
            }
            double sum = 0.0;
            bool negative = false;
            bool nonpositive = false;
            for (std::size_t c = 0; c < d.size(); ++c) {
                sum += rec.children[c].q * d[c];
                negative = negative || !(d[c] >= 0.0);
                nonpositive = nonpositive || !(d[c] > 0.0);
                mean[c] += d[c] / static_cast<double>(ext.size());
            }
            if (!(std::abs(sum - 1.0) <= kSumTolerance)) {
                report.push_back({Kind::kMartingaleSum, n,
                                  fmt::format("martingale sum {:g} ≠ 1 for extreme {} at node '{}'",
                                              sum, e, rec.id)});
            }
            if (negative) {
                report.push_back({Kind::kNegative, n,
                                  fmt::format("negative density component in extreme {} at node '{}'",
                                              e, rec.id)});
            } else if (equivalent && nonpositive) {
                report.push_back({Kind::kNonpositive, n,
                                  fmt::format("nonpositive density component in extreme {} at node '{}'",
                                              e, rec.id)});
            }
        }
        if (equivalent && shape_ok) {
            for (double m : mean) {
                if (!(m > 0.0)) {
                    report.push_back({Kind::kNoPositivePoint, n,
                                      fmt::format("no strictly positive density at node '{}'",
                                                  rec.id)});
                    break;
                }
            }
        }
    }
    return report;
}

void require_solvable_priors(const EventTree& tree, const PriorSet& priors) {
    for (const auto& issue : validate_prior_set(tree, priors)) {
        if (issue.kind != PriorIssue::Kind::kNonpositive) {
            throw InputError("invalid prior set: " + issue.message);
        }
    }
}

DensityProcess make_density_process(const EventTree& tree, std::vector<DensityVector> ratios) {
    if (ratios.size() != tree.size()) {
        throw InputError("density ratios must cover every node");
    }
    DensityProcess out;
    out.ratio = std::move(ratios);
    out.z.assign(tree.size(), 0.0);
    out.z[tree.root()] = 1.0;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (rec.terminal()) {
            out.ratio[n].clear();
            continue;
        }
        const auto& r = out.ratio[n];
        if (r.size() != rec.children.size()) {
            throw InputError(fmt::format("density ratio at node '{}' has wrong dimension", rec.id));
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (!(r[c] >= 0.0)) {
                throw InputError(fmt::format("negative density ratio at node '{}'", rec.id));
            }
            sum += rec.children[c].q * r[c];
            out.z[rec.children[c].child] = out.z[n] * r[c];
        }
        if (!(std::abs(sum - 1.0) <= kSumTolerance)) {
            throw InputError(fmt::format("density ratio at node '{}' has martingale sum {:g} ≠ 1",
                                         rec.id, sum));
        }
    }
    return out;
}

DensityProcess reference_density(const EventTree& tree) {
    std::vector<DensityVector> ratios(tree.size());
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        ratios[n].assign(tree.node(n).children.size(), 1.0);
    }
    return make_density_process(tree, std::move(ratios));
}

double martingale_defect(const EventTree& tree, const DensityProcess& density) {
    double worst = 0.0;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (rec.terminal()) {
            continue;
        }
        double sum = 0.0;
        for (std::size_t c = 0; c < rec.children.size(); ++c) {
            sum += rec.children[c].q * density.ratio[n][c];
        }
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

DensityProcess density_process(const EventTree& tree, const PriorSet& priors,
                               const ExtremeWeights& weights) {
    if (weights.size() != tree.size()) {
        throw InputError("extreme weights must cover every node");
    }
    std::vector<DensityVector> ratios(tree.size());
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (rec.terminal()) {
            continue;
        }
        const auto& ext = priors.extremes(n);
        const auto& w = weights[n];
        if (w.size() != ext.size()) {
            throw InputError(fmt::format("node '{}' has {} extremes but {} weights", rec.id,
                                         ext.size(), w.size()));
        }
        double total = 0.0;
        for (double x : w) {
            if (!(x >= 0.0)) {
                throw InputError(fmt::format("negative extreme weight at node '{}'", rec.id));
            }
            total += x;
        }
        if (!(std::abs(total - 1.0) <= kSumTolerance)) {
            throw InputError(fmt::format("extreme weights at node '{}' sum to {:g}", rec.id, total));
        }
        ratios[n].assign(rec.children.size(), 0.0);
        for (std::size_t e = 0; e < ext.size(); ++e) {
            for (std::size_t c = 0; c < rec.children.size(); ++c) {
                ratios[n][c] += w[e] * ext[e][c];
            }
        }
    }
    return make_density_process(tree, std::move(ratios));
}

DensityProcess density_process(const EventTree& tree, const PriorSet& priors,
                               const ExtremeSelection& selection) {
    if (selection.size() != tree.size()) {
        throw InputError("extreme selection must cover every node");
    }
    std::vector<DensityVector> ratios(tree.size());
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (tree.node(n).terminal()) {
            continue;
        }
        const auto& ext = priors.extremes(n);
        if (selection[n] >= ext.size()) {
            throw InputError(fmt::format("extreme index {} out of range at node '{}'",
                                         selection[n], tree.node(n).id));
        }
        ratios[n] = ext[selection[n]];
    }
    return make_density_process(tree, std::move(ratios));
}

DensityProcess paste(const EventTree& tree, const DensityProcess& first,
                     const DensityProcess& second, int t, std::span<const NodeIndex> event) {
    std::vector<bool> in_event(tree.size(), false);
    for (NodeIndex a : event) {
        if (a >= tree.size() || tree.node(a).time != t) {
            throw InputError(fmt::format("pasting event is not measurable at time {}", t));
        }
        in_event[a] = true;
    }
    // Each node inherits the membership of its time-t ancestor.
    std::vector<bool> below_event(tree.size(), false);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (rec.time == t) {
            below_event[n] = in_event[n];
        } else if (rec.time > t) {
            below_event[n] = below_event[rec.parent];
        }
    }
    std::vector<DensityVector> ratios(tree.size());
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        ratios[n] = below_event[n] ? second.ratio.at(n) : first.ratio.at(n);
    }
    return make_density_process(tree, std::move(ratios));
}

DensityProcess convex_combine(const EventTree& tree, const DensityProcess& first,
                              const DensityProcess& second, double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw InputError(fmt::format("convex weight {} outside [0, 1]", x));
    }
    std::vector<DensityVector> ratios(tree.size());
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (rec.terminal()) {
            continue;
        }
        const double a = x * first.z.at(n);
        const double b = (1.0 - x) * second.z.at(n);
        // Where both processes vanish any martingale ratio works; blend them.
        const double wa = (a + b > 0.0) ? a / (a + b) : x;
        ratios[n].resize(rec.children.size());
        for (std::size_t c = 0; c < rec.children.size(); ++c) {
            ratios[n][c] = wa * first.ratio[n][c] + (1.0 - wa) * second.ratio[n][c];
        }
    }
    return make_density_process(tree, std::move(ratios));
}

double bayes_conditional(const EventTree& tree, const DensityProcess& density,
                         const AdaptedFamily& family, const StoppingRule& rule, NodeIndex v) {
    if (rule.floor() != v) {
        throw InputError(fmt::format("rule floor '{}' differs from conditioning node '{}'",
                                     tree.node(rule.floor()).id, tree.node(v).id));
    }
    if (!(density.z.at(v) > 0.0)) {
        throw UndefinedConditionalError(
            fmt::format("density vanishes at node '{}'; conditional expectation undefined",
                        tree.node(v).id));
    }
    // Path weights q * ratio from v onwards equal Q(v -> n) Z_n / Z_v.
    std::vector<double> weight(tree.size(), 0.0);
    weight[v] = 1.0;
    double total = 0.0;
    for (NodeIndex n : tree.subtree(v)) {
        if (rule.stops_at(n)) {
            total += weight[n] * family.at(n);
            continue;
        }
        const auto& rec = tree.node(n);
        for (std::size_t c = 0; c < rec.children.size(); ++c) {
            weight[rec.children[c].child] = weight[n] * rec.children[c].q * density.ratio[n][c];
        }
    }
    return total;
}

std::size_t count_selections(const PriorSet& priors, std::span<const NodeIndex> nodes) {
    std::size_t count = 1;
    for (NodeIndex n : nodes) {
        const std::size_t k = priors.extremes(n).size();
        if (k == 0) {
            return 0;
        }
        if (count > std::numeric_limits<std::size_t>::max() / k) {
            return std::numeric_limits<std::size_t>::max();
        }
        count *= k;
    }
    return count;
}

std::vector<ExtremeSelection> extreme_selections(const EventTree& tree, const PriorSet& priors,
                                                 std::span<const NodeIndex> nodes,
                                                 std::size_t max_count) {
    const std::size_t count = count_selections(priors, nodes);
    if (count > max_count) {
        throw SizeGuardError(fmt::format("{} extreme selections exceed the limit {}",
                                         count == std::numeric_limits<std::size_t>::max()
                                             ? std::string("too many")
                                             : std::to_string(count),
                                         max_count));
    }
    std::vector<ExtremeSelection> out;
    out.reserve(count);
    ExtremeSelection current(tree.size(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(current);
        for (NodeIndex n : nodes) {
            if (++current[n] < priors.extremes(n).size()) {
                break;
            }
            current[n] = 0;
        }
    }
    return out;
}

std::vector<ExtremeSelection> extreme_selections(const EventTree& tree, const PriorSet& priors,
                                                 std::size_t max_count) {
    std::vector<NodeIndex> nodes;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (!tree.node(n).terminal()) {
            nodes.push_back(n);
        }
    }
    return extreme_selections(tree, priors, nodes, max_count);
}

} // namespace robust_snell
