#pragma once

#include <stdexcept>
#include <string>

namespace robust_snell {

/// Malformed tree, family, prior set, rule or configuration.
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An enumeration would exceed its configured size limit.
class SizeGuardError : public std::length_error {
public:
    using std::length_error::length_error;
};

/// Conditioning on a node that carries zero density.
class UndefinedConditionalError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Doob decomposition requested for a family that is not a supermartingale.
class NotSupermartingaleError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// The supremum over priors is not attained inside the admissible set.
class UnattainedSupremumError : public std::runtime_error {
public:
    UnattainedSupremumError(const std::string& what, double supremum)
        : std::runtime_error(what), supremum_(supremum) {}

    double supremum() const noexcept { return supremum_; }

private:
    double supremum_;
};

} // namespace robust_snell
