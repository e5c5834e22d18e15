#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "trine/rng.hpp"
#include "trine/theory.hpp"

using trine::InvalidInput;
using trine::Rng;
using namespace trine::theory;

namespace {

constexpr double kGaussBeta2 = 2.0 / 3.14159265358979323846;

TheoryParams random_params(Rng& rng) {
    TheoryParams p;
    p.a = 0.999 * rng.uniform();
    p.gamma2 = 0.1 + 4.0 * rng.uniform();
    p.mu = 2.0 * rng.uniform();
    p.sigma2 = 0.05 + 4.0 * rng.uniform();
    p.beta2 = 0.05 + 0.95 * rng.uniform();
    return p;
}

double are_residual(const TheoryParams& p, double P) {
    // P = a^2 P - a^2 P^2 / (P + r) + q
    return p.a * p.a * P - p.a * p.a * P * P / (P + p.r()) + p.q() - P;
}

// (1 - a^2)(P - beta2 gamma2)(P - P0 + gamma2 + mu^2 + sigma2) + a^2 P^2,
// an equivalent factorization of the steady-state equation.
double factorized_residual(const TheoryParams& p, double P) {
    const double g2 = p.gamma2 + p.mu * p.mu;
    const double p0 = p.beta2 * g2;
    return (1.0 - p.a * p.a) * (P - p.beta2 * p.gamma2) * (P - p0 + g2 + p.sigma2) +
           p.a * p.a * P * P;
}

}  // namespace

TEST_CASE("the unknown sign error at unit parameters is one half") {
    TheoryParams p;
    p.a = 0.5;
    p.gamma2 = 1.0;
    p.mu = 0.0;
    p.sigma2 = 1.0;
    CHECK(mse_unknown_signs(p) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("the unknown sign error vanishes with the measurement noise") {
    TheoryParams p;
    p.sigma2 = 0.0;
    CHECK(mse_unknown_signs(p) == 0.0);
}

TEST_CASE("the unknown sign error saturates at the prior variance") {
    TheoryParams p;
    p.gamma2 = 1.7;
    p.mu = 0.6;
    p.sigma2 = 1e12;
    const double prior = p.gamma2 + p.mu * p.mu;
    CHECK(mse_unknown_signs(p) == doctest::Approx(prior).epsilon(1e-6));
}

TEST_CASE("with no correlation the prediction variance equals the process noise") {
    TheoryParams p;
    p.a = 0.0;
    p.gamma2 = 1.3;
    p.beta2 = kGaussBeta2;
    CHECK(riccati_P(p) == doctest::Approx(p.q()).epsilon(1e-12));
    CHECK(p.q() == doctest::Approx(p.beta2 * p.gamma2).epsilon(1e-14));
}

TEST_CASE("with full sign information and no noise the closed form hits the degenerate root") {
    TheoryParams p;
    p.a = 0.6;
    p.gamma2 = 0.9;
    p.mu = 0.0;
    p.sigma2 = 0.0;
    p.beta2 = 1.0;
    // r = 0, so P solves P^2 + (1-a^2) * 0 ... = q * 0; root q
    CHECK(riccati_P(p) == doctest::Approx(p.q()).epsilon(1e-10));
    CHECK(std::abs(are_residual(p, riccati_P(p))) < 1e-10);
}

TEST_CASE("the closed form prediction variance agrees with fixed point iteration") {
    Rng rng(41);
    for (int rep = 0; rep < 300; ++rep) {
        const TheoryParams p = random_params(rng);
        const double want = testoracle::riccati_fixed_point(p.a, p.q(), p.r());
        CHECK(riccati_P(p) == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("the prediction variance satisfies its equation and stays below the prior bound") {
    Rng rng(43);
    for (int rep = 0; rep < 1000; ++rep) {
        const TheoryParams p = random_params(rng);
        const double P = riccati_P(p);
        CHECK(P >= 0.0);
        CHECK(std::abs(are_residual(p, P)) <= 1e-10 * std::max(P, 1.0));
        const double p0 = p.beta2 * (p.gamma2 + p.mu * p.mu);
        CHECK(P <= p0 * (1.0 + 1e-12) + 1e-12);
    }
}

TEST_CASE("the rewritten factorized form of the equation vanishes at the root") {
    Rng rng(47);
    for (int rep = 0; rep < 1000; ++rep) {
        const TheoryParams p = random_params(rng);
        const double P = riccati_P(p);
        CHECK(std::abs(factorized_residual(p, P)) <= 1e-8 * std::max(1.0, P * P));
        // and the expanded quadratic it rearranges
        const double quad = P * P + ((1.0 - p.a * p.a) * p.r() - p.q()) * P - p.q() * p.r();
        CHECK(std::abs(quad) <= 1e-8 * std::max(1.0, P * P));
    }
}

TEST_CASE("the known sign error vanishes without measurement noise") {
    TheoryParams p;
    p.a = 0.7;
    p.sigma2 = 0.0;
    CHECK(mse_known_signs(p) == 0.0);
}

TEST_CASE("with white dynamics and sure signs both errors coincide") {
    TheoryParams p;
    p.a = 0.0;
    p.mu = 0.0;
    p.beta2 = 1.0;
    p.gamma2 = 1.4;
    p.sigma2 = 0.8;
    CHECK(mse_known_signs(p) == doctest::Approx(mse_unknown_signs(p)).epsilon(1e-12));
    CHECK(mse_ratio(p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the error ratio is one for uncorrelated centered dynamics") {
    TheoryParams p;
    p.a = 0.0;
    p.mu = 0.0;
    p.beta2 = kGaussBeta2;
    p.gamma2 = 1.0;
    p.sigma2 = 1.0;
    CHECK(mse_ratio(p) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("the error ratio approaches its lower bound for slow dynamics under heavy output noise") {
    // The infimum 1 - beta^2 needs both a -> 1 (predictable gain) and large
    // sigma2 (the harmonic sum collapses onto the prior term).
    TheoryParams p;
    p.a = 0.99999;
    p.gamma2 = 1.0;
    p.mu = 1.0;
    p.sigma2 = 100.0;
    p.beta2 = kGaussBeta2;
    const double r = mse_ratio(p);
    const double floor = 1.0 - kGaussBeta2;
    CHECK(r > floor);
    CHECK(r < floor + 0.08);
}

TEST_CASE("the error ratio stays inside its proven interval") {
    Rng rng(53);
    for (int rep = 0; rep < 1000; ++rep) {
        const TheoryParams p = random_params(rng);
        const double r = mse_ratio(p);
        CHECK(r > 1.0 - p.beta2 - 1e-10);
        CHECK(r <= 1.0 + 1e-10);
    }
}

TEST_CASE("a degenerate unknown sign error is rejected") {
    TheoryParams p;
    p.sigma2 = 0.0;  // makes the denominator error zero
    CHECK_THROWS_AS(mse_ratio(p), InvalidInput);
}

TEST_CASE("parameter validation enforces the documented ranges") {
    TheoryParams p;
    p.a = 1.0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p.a = -0.1;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p.a = 0.3;
    p.gamma2 = -1.0;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p.gamma2 = 1.0;
    p.beta2 = 1.2;
    CHECK_THROWS_AS(p.validate(), InvalidInput);
    p.beta2 = 0.5;
    CHECK_NOTHROW(p.validate());
}

TEST_CASE("tiny measurement noise gives a tiny empirical error") {
    TheoryParams p;
    p.a = 0.5;
    p.sigma2 = 1e-8;
    p.beta2 = kGaussBeta2;
    CHECK(kalman_empirical_mse(p, 20000, 4, 7) < 1e-6);
}

TEST_CASE("the empirical filter error matches the closed form in the white case") {
    TheoryParams p;
    p.a = 0.0;
    p.gamma2 = 1.0;
    p.mu = 0.0;
    p.sigma2 = 1.0;
    p.beta2 = kGaussBeta2;
    const double closed = mse_known_signs(p);
    const double empirical = kalman_empirical_mse(p, 100000, 20, 11);
    CHECK(std::abs(empirical - closed) < 0.02 * closed);
}

TEST_CASE("the empirical filter error matches the closed form under strong correlation") {
    TheoryParams p;
    p.a = 0.9;
    p.gamma2 = 1.0;
    p.mu = 0.0;
    p.sigma2 = 1.0;
    p.beta2 = kGaussBeta2;
    const double closed = mse_known_signs(p);
    const double empirical = kalman_empirical_mse(p, 100000, 20, 13);
    CHECK(std::abs(empirical - closed) < 0.03 * closed);
}

TEST_CASE("the ratio curve starts at one and respects the proposition bounds") {
    std::vector<double> grid;
    for (int i = 0; i <= 99; ++i) grid.push_back(0.01 * i);
    const auto blue = r_curve(1.0, 0.0, 1.0, kGaussBeta2, grid);
    REQUIRE(blue.size() == grid.size());
    CHECK(blue.front().a == 0.0);
    CHECK(blue.front().ratio == doctest::Approx(1.0).epsilon(1e-12));
    const double floor = 1.0 - kGaussBeta2;
    for (const auto& pt : blue) {
        CHECK(pt.ratio > floor);
        CHECK(pt.ratio <= 1.0 + 1e-12);
    }
    const auto orange = r_curve(1.0, 1.0, 100.0, kGaussBeta2, grid);
    for (const auto& pt : orange) {
        CHECK(pt.ratio > floor);
        CHECK(pt.ratio <= 1.0 + 1e-12);
    }
}

TEST_CASE("the centered ratio curve does not increase with correlation") {
    std::vector<double> grid;
    for (int i = 0; i <= 99; ++i) grid.push_back(0.01 * i);
    const auto curve = r_curve(1.0, 0.0, 1.0, kGaussBeta2, grid);
    bool monotone = true;
    for (std::size_t i = 1; i < curve.size(); ++i)
        if (curve[i].ratio > curve[i - 1].ratio + 1e-12) monotone = false;
    // suggested by the published curve, not proved; warn only
    WARN(monotone);
}

TEST_CASE("the bernoulli ratio can fall below the gaussian floor") {
    TheoryParams p;
    p.a = 0.995;
    p.gamma2 = 1.0;
    p.mu = 0.0;
    p.sigma2 = 1.0;
    p.beta2 = 1.0;
    CHECK(mse_ratio(p) < 1.0 - kGaussBeta2);
}
