#pragma once

#include <stdexcept>

namespace rdes {

// Invalid user input: bad configuration, infeasible bounds, malformed files.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical breakdown: rank deficiency, singular moment matrices, and the like.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rdes
