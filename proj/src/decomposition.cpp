#include "robust_snell/decomposition.hpp"

#include "robust_snell/errors.hpp"

#include <Eigen/Dense>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace robust_snell {

namespace {

constexpr double kRankTolerance = 1e-10;
// Children beyond this make the slice vertex enumeration too expensive.
constexpr std::size_t kMaxSliceChildren = 16;

double q_inner(const NodeRecord& rec, std::span<const double> x, std::span<const double> y) {
    double sum = 0.0;
    for (std::size_t c = 0; c < rec.children.size(); ++c) {
        sum += rec.children[c].q * x[c] * y[c];
    }
    return sum;
}

} // namespace

DoobDecomposition doob(const EventTree& tree, const AdaptedFamily& family,
                       const DensityProcess& density, double tolerance) {
    if (family.size() != tree.size()) {
        throw InputError("doob: family is not defined on every node");
    }
    DoobDecomposition out{AdaptedFamily(tree.size(), 0.0), AdaptedFamily(tree.size(), 0.0)};
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (rec.terminal()) {
            continue;
        }
        double expectation = 0.0;
        for (std::size_t c = 0; c < rec.children.size(); ++c) {
            expectation += rec.children[c].q * density.ratio.at(n)[c] * family[rec.children[c].child];
        }
        const double delta_a = family[n] - expectation;
        if (delta_a < -tolerance * std::max(1.0, std::abs(family[n]))) {
            throw NotSupermartingaleError(fmt::format(
                "family is not a supermartingale at node '{}': {:.17g} < {:.17g}", rec.id,
                family[n], expectation));
        }
        for (const auto& br : rec.children) {
            out.compensator[br.child] = out.compensator[n] + delta_a;
            out.martingale[br.child] = out.martingale[n] + family[br.child] - expectation;
        }
    }
    return out;
}

std::vector<std::vector<double>> node_subspace_basis(const EventTree& tree,
                                                     const PriorSet& priors, NodeIndex node) {
    const auto& rec = tree.node(node);
    std::vector<std::vector<double>> basis;
    if (rec.terminal()) {
        return basis;
    }
    // Modified Gram-Schmidt on d - 1 in the Q-weighted inner product.
    for (const auto& d : priors.extremes(node)) {
        std::vector<double> h(d.size());
        for (std::size_t c = 0; c < d.size(); ++c) {
            h[c] = d[c] - 1.0;
        }
        const double scale = std::sqrt(q_inner(rec, h, h));
        for (const auto& b : basis) {
            const double coef = q_inner(rec, h, b);
            for (std::size_t c = 0; c < h.size(); ++c) {
                h[c] -= coef * b[c];
            }
        }
        const double norm = std::sqrt(q_inner(rec, h, h));
        if (norm <= kRankTolerance * std::max(1.0, scale)) {
            continue;
        }
        for (auto& x : h) {
            x /= norm;
        }
        basis.push_back(std::move(h));
    }
    return basis;
}

Projection kw_project(const EventTree& tree, NodeIndex node, std::span<const double> increment,
                      const std::vector<std::vector<double>>& basis) {
    const auto& rec = tree.node(node);
    if (increment.size() != rec.children.size()) {
        throw InputError("kw_project: increment dimension differs from child count");
    }
    double mean = 0.0;
    double scale = 1.0;
    for (std::size_t c = 0; c < increment.size(); ++c) {
        mean += rec.children[c].q * increment[c];
        scale = std::max(scale, std::abs(increment[c]));
    }
    if (std::abs(mean) > kDefaultTolerance * scale) {
        throw InputError(fmt::format("kw_project: increment has nonzero Q-mean {:g} at node '{}'",
                                     mean, rec.id));
    }
    Projection out{std::vector<double>(increment.size(), 0.0),
                   std::vector<double>(increment.begin(), increment.end())};
    for (const auto& b : basis) {
        const double coef = q_inner(rec, increment, b);
        for (std::size_t c = 0; c < increment.size(); ++c) {
            out.in_span[c] += coef * b[c];
        }
    }
    for (std::size_t c = 0; c < increment.size(); ++c) {
        out.orthogonal[c] -= out.in_span[c];
    }
    return out;
}

namespace {

// The density polytope is contained in the slice (1 + L) ∩ {d >= 0}, so the
// two coincide iff every vertex of the slice is one of the given extremes.
bool slice_is_full(const NodeRecord& rec, const std::vector<DensityVector>& extremes,
                   const std::vector<std::vector<double>>& basis) {
    const std::size_t n = rec.children.size();
    const std::size_t k = basis.size();
    if (k == 0) {
        return true;
    }
    if (n > kMaxSliceChildren) {
        return false;
    }
    Eigen::MatrixXd B(n, k);
    for (std::size_t j = 0; j < k; ++j) {
        for (std::size_t c = 0; c < n; ++c) {
            B(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = basis[j][c];
        }
    }
    auto is_extreme = [&](const Eigen::VectorXd& point) {
        return std::any_of(extremes.begin(), extremes.end(), [&](const DensityVector& d) {
            for (std::size_t c = 0; c < n; ++c) {
                if (std::abs(d[c] - point(static_cast<Eigen::Index>(c))) > kDefaultTolerance) {
                    return false;
                }
            }
            return true;
        });
    };
    // Vertices: k active constraints 1 + (B y)_c = 0 with the rest satisfied.
    std::vector<bool> mask(n, false);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(k), true);
    do {
        Eigen::MatrixXd A(k, k);
        Eigen::Index row = 0;
        for (std::size_t c = 0; c < n; ++c) {
            if (mask[c]) {
                A.row(row++) = B.row(static_cast<Eigen::Index>(c));
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (lu.rank() < static_cast<Eigen::Index>(k)) {
            continue;
        }
        const Eigen::VectorXd y = lu.solve(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(k), -1.0));
        const Eigen::VectorXd point = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)) + B * y;
        if (point.minCoeff() < -kDefaultTolerance) {
            continue;
        }
        if (!is_extreme(point)) {
            return false;
        }
    } while (std::prev_permutation(mask.begin(), mask.end()));
    return true;
}

} // namespace

PremiseReport premise_check(const EventTree& tree, const PriorSet& priors) {
    PremiseReport report;
    report.full_slice.assign(tree.size(), true);
    report.scaling_closed.assign(tree.size(), true);
    report.dimension.assign(tree.size(), 0);
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto& rec = tree.node(n);
        if (rec.terminal()) {
            continue;
        }
        const auto basis = node_subspace_basis(tree, priors, n);
        report.dimension[n] = basis.size();
        report.scaling_closed[n] = basis.empty();
        report.full_slice[n] = slice_is_full(rec, priors.extremes(n), basis);
        report.holds = report.holds && report.scaling_closed[n];
    }
    return report;
}

Decomposition universal_decompose(const EventTree& tree, const SnellSolution& solution,
                                  const PriorSet& priors) {
    const auto& R = solution.value;
    const std::size_t size = tree.size();
    Decomposition out;
    out.X0 = R[tree.root()];
    out.M = AdaptedFamily(size, 0.0);
    out.C = AdaptedFamily(size, 0.0);
    out.K = AdaptedFamily(size, 0.0);
    out.A_q = AdaptedFamily(size, 0.0);
    out.delta_C.assign(size, 0.0);

    auto& diag = out.diagnostics;
    diag.min_delta_C = std::numeric_limits<double>::infinity();
    diag.min_delta_A_q = std::numeric_limits<double>::infinity();

    for (NodeIndex n = 0; n < size; ++n) {
        const auto& rec = tree.node(n);
        if (rec.terminal()) {
            continue;
        }
        const double eq = step_expectation_q(tree, R, n);
        const double delta_a = R[n] - eq;
        std::vector<double> increment(rec.children.size());
        for (std::size_t c = 0; c < rec.children.size(); ++c) {
            increment[c] = R[rec.children[c].child] - eq;
        }
        const auto proj = kw_project(tree, n, increment, node_subspace_basis(tree, priors, n));
        diag.min_delta_A_q = std::min(diag.min_delta_A_q, delta_a);
        for (std::size_t c = 0; c < rec.children.size(); ++c) {
            const NodeIndex child = rec.children[c].child;
            const double delta_c = delta_a - proj.in_span[c];
            out.A_q[child] = out.A_q[n] + delta_a;
            out.K[child] = out.K[n] + proj.in_span[c];
            out.M[child] = out.M[n] + proj.orthogonal[c];
            out.C[child] = out.C[n] + delta_c;
            out.delta_C[child] = delta_c;
            diag.min_delta_C = std::min(diag.min_delta_C, delta_c);
        }
        for (const auto& d : priors.extremes(n)) {
            double residual = 0.0;
            for (std::size_t c = 0; c < rec.children.size(); ++c) {
                residual += rec.children[c].q * d[c] * proj.orthogonal[c];
            }
            diag.universal_martingale_residual =
                std::max(diag.universal_martingale_residual, std::abs(residual));
        }
    }
    if (!std::isfinite(diag.min_delta_C)) {
        diag.min_delta_C = 0.0;
        diag.min_delta_A_q = 0.0;
    }
    diag.C_increasing = diag.min_delta_C >= -kDecompositionTolerance;
    for (NodeIndex n = 0; n < size; ++n) {
        diag.reconstruction_error =
            std::max(diag.reconstruction_error, std::abs(R[n] - (out.X0 + out.M[n] - out.C[n])));
    }
    diag.premise = premise_check(tree, priors);
    return out;
}

bool flat_off_check(const Decomposition& decomposition, [[maybe_unused]] const EventTree& tree,
                    const StoppingRule& rule, NodeIndex v, double tolerance) {
    if (rule.floor() != v) {
        throw InputError("flat_off_check: rule floor differs from v");
    }
    const double base = decomposition.C[v];
    auto flat = [&](NodeIndex n) { return std::abs(decomposition.C[n] - base) <= tolerance; };
    return std::all_of(rule.continuation_nodes().begin(), rule.continuation_nodes().end(), flat) &&
           std::all_of(rule.stop_nodes().begin(), rule.stop_nodes().end(), flat);
}

} // namespace robust_snell
