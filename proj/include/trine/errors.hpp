#pragma once

#include <stdexcept>
#include <string>

namespace trine {

// Bad arguments or malformed input data. CLI maps this to a usage error.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Linear algebra gave up: factorization failed even after jitter escalation.
struct NumericalFailure : std::runtime_error {
    double attempted_jitter;
    explicit NumericalFailure(const std::string& what, double jitter = 0.0)
        : std::runtime_error(what), attempted_jitter(jitter) {}
};

// Hyperparameter search could not produce a finite objective anywhere.
struct OptimizationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Trajectory left the finite range during integration.
struct SimulationDiverged : std::runtime_error {
    long step;
    SimulationDiverged(const std::string& what, long step_index)
        : std::runtime_error(what), step(step_index) {}
};

// A user-supplied or built-in model returned something unusable (NaN drift,
// indefinite diffusion matrix, ...).
struct ModelEvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Filesystem or parse trouble in the serialization layer.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace trine
