#pragma once

#include <stdexcept>
#include <string>

namespace factimp {

// Bad inputs: malformed files, configuration mistakes, violated data
// contracts, failed order conditions. Maps to CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Failures inside the estimation machinery: rank deficiency, non-positive
// degrees of freedom, unstable simulator parameters. Maps to exit code 2.
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace factimp
