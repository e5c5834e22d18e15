#pragma once

#include <cstdint>
#include <vector>

#include "trine/errors.hpp"

namespace trine::theory {

// Scalar AR(1) surrogate of the estimation problem. The latent log-gain
// process has autocorrelation a and stationary variance gamma2; mu shifts the
// gain mean, sigma2 is the output measurement variance, beta2 = (E|w|)^2 for
// the driving noise family.
struct TheoryParams {
    double a = 0.0;
    double gamma2 = 1.0;
    double mu = 0.0;
    double sigma2 = 1.0;
    double beta2 = 2.0 / 3.14159265358979323846;

    void validate() const;
    double q() const;  // process noise variance beta2 * gamma2 * (1 - a^2)
    double r() const;  // effective measurement variance (gamma2+mu^2)(1-beta2) + sigma2
};

// Mean-squared error of the noise-realization estimate when signs are
// unknown: (gamma2 + mu^2) sigma2 / (gamma2 + mu^2 + sigma2).
double mse_unknown_signs(const TheoryParams& p);

// Positive root of P^2 + ((1-a^2) R - Q) P - Q R = 0, the steady-state
// one-step prediction variance of the sign-aided filter.
double riccati_P(const TheoryParams& p);

// MSE with signs revealed: harmonic sum of the filter's prior variance and
// the measurement variance; exactly zero when sigma2 = 0.
double mse_known_signs(const TheoryParams& p);

// mse_known_signs / mse_unknown_signs; lies in (1 - beta2, 1]. Requires
// sigma2 > 0 (the ratio is 0/0 otherwise).
double mse_ratio(const TheoryParams& p);

// Monte Carlo check of mse_known_signs: simulate the AR(1) surrogate, run the
// exact time-varying Kalman filter, and average the squared prediction error
// of the clean output over the second half of the horizon.
double kalman_empirical_mse(const TheoryParams& p, long horizon, int replicates,
                            std::uint64_t seed);

struct RCurvePoint {
    double a = 0.0;
    double mse_unknown = 0.0;
    double prediction_var = 0.0;
    double mse_known = 0.0;
    double ratio = 0.0;
};

std::vector<RCurvePoint> r_curve(double gamma2, double mu, double sigma2, double beta2,
                                 const std::vector<double>& a_values);

}  // namespace trine::theory
