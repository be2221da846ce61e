#pragma once

#include <stdexcept>
#include <string>

namespace mua {

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Infeasible bid constraints.
struct ConstraintError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Invalid distribution, learner or experiment parameters.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EmptyEstimatorError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace mua
