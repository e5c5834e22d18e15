#pragma once

#include <cmath>
#include <string>

#include "trine/errors.hpp"

namespace trine {

// Whether samples come from an SDE observed every delta_t (so the one-step
// map is x + dt*f and the noise gain sqrt(dt)*g) or from a discrete map
// applied once per sample.
enum class DynamicsKind { Continuous, DiscreteMap };

// Distribution of the unit-variance driving noise w_k.
enum class BetaFamily { Gaussian, Laplacian, Bernoulli };

// beta = E|w| for the family; the scalar linking |noise| back to its SD.
inline double beta_value(BetaFamily f) {
    switch (f) {
        case BetaFamily::Gaussian: return std::sqrt(2.0 / 3.14159265358979323846);
        case BetaFamily::Laplacian: return std::sqrt(0.5);
        case BetaFamily::Bernoulli: return 1.0;
    }
    throw InvalidInput("unknown beta family");
}

inline std::string to_string(BetaFamily f) {
    switch (f) {
        case BetaFamily::Gaussian: return "gaussian";
        case BetaFamily::Laplacian: return "laplacian";
        case BetaFamily::Bernoulli: return "bernoulli";
    }
    throw InvalidInput("unknown beta family");
}

inline BetaFamily beta_family_from_string(const std::string& s) {
    if (s == "gaussian") return BetaFamily::Gaussian;
    if (s == "laplacian") return BetaFamily::Laplacian;
    if (s == "bernoulli") return BetaFamily::Bernoulli;
    throw InvalidInput("unknown beta family: " + s);
}

inline std::string to_string(DynamicsKind k) {
    return k == DynamicsKind::Continuous ? "continuous" : "discrete_map";
}

inline DynamicsKind dynamics_kind_from_string(const std::string& s) {
    if (s == "continuous") return DynamicsKind::Continuous;
    if (s == "discrete_map") return DynamicsKind::DiscreteMap;
    throw InvalidInput("unknown dynamics kind: " + s);
}

}  // namespace trine
