#pragma once

#include <stdexcept>
#include <string>

namespace mflab {

// Invalid user-facing configuration (bad key, value out of range). CLI exit code 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A simulation failed at runtime. CLI exit code 2.
struct SimulationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteState : SimulationError {
    using SimulationError::SimulationError;
};

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct SizeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OutOfDomain : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OutOfOrderStep : std::logic_error {
    using std::logic_error::logic_error;
};

// Requested density lacks the derivative bounds the estimates need.
struct NonSmoothDensity : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidDensity : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NonFiniteDerivative : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Problem size exceeds a hard solver limit (e.g. exact assignment above n = 1024).
struct TooLarge : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InsufficientData : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A measured quantity violated an inequality that must hold; signals an
// implementation bug rather than an unlucky sample.
struct BoundViolated : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mflab
