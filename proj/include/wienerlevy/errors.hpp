// errors.hpp
//
// Exception types shared by every module. The CLI maps them onto exit codes.

#ifndef WIENERLEVY_ERRORS_HPP
#define WIENERLEVY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wienerlevy {

/// Malformed input: bad dimensions, incompatible grids, out-of-range values.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// An analytic function was evaluated outside its continuation domain.
class DomainError : public std::domain_error {
public:
    explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

/// The requested run cannot be carried out with the given resources or
/// parameters (memory cap, unattainable tail budget, grid too coarse).
class ConfigurationError : public std::runtime_error {
public:
    explicit ConfigurationError(const std::string& what) : std::runtime_error(what) {}
};

/// The residual measures are too heavy for the geometric expansion to
/// converge.
class ContractionError : public ConfigurationError {
public:
    ContractionError(const std::string& what, double required_budget)
        : ConfigurationError(what), required_budget_(required_budget) {}

    double required_budget() const noexcept { return required_budget_; }

private:
    double required_budget_;
};

}  // namespace wienerlevy

#endif  // WIENERLEVY_ERRORS_HPP
