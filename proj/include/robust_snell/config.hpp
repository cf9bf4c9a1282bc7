#pragma once

// JSON run configuration: an explicit tree or a binomial barrier block,
// prior sets, and solver options.

#include "robust_snell/filtration.hpp"
#include "robust_snell/pricing.hpp"
#include "robust_snell/priors.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace robust_snell {

struct RunConfig {
    std::optional<EventTree> tree;
    std::optional<AdaptedFamily> payoff;
    std::optional<CrrParams> crr;
    nlohmann::json priors;  // null when absent
    DensityMode mode = DensityMode::kClosure;
    std::vector<double> alphas;
    std::optional<std::string> v;
    double tolerance = kDefaultTolerance;
    std::uint64_t seed = 0;
    std::size_t random_instances = 0;
};

/// Throws InputError naming the violated invariant.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Tree, payoff and priors ready for the solver.
struct Model {
    EventTree tree;
    AdaptedFamily payoff;
    PriorSet priors;
    NodeIndex v = 0;
};

Model build_model(const RunConfig& config);

} // namespace robust_snell
