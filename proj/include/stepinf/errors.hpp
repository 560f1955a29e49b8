#ifndef STEPINF_ERRORS_HPP
#define STEPINF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace stepinf {

/// Bad user-supplied data: malformed files, inconsistent dimensions,
/// preconditions violated by the caller. CLI maps this to exit code 1.
class InvalidInput : public std::runtime_error {
public:
    explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure downstream of valid input: empty truncation region,
/// zero-mass region, degenerate statistic. CLI maps this to exit code 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace stepinf

#endif
