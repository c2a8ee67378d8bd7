#pragma once

#include <stdexcept>
#include <string>

namespace macsic {

/// Thrown when an argument leaves the numerically supported range of a
/// kernel (as opposed to being malformed). CLI maps this to exit code 3.
class envelope_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Configuration / schema violation. CLI maps this to exit code 2.
class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace macsic
