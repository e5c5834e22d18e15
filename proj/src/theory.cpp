#include "trine/theory.hpp"

#include <cmath>

#include "trine/rng.hpp"

namespace trine::theory {

void TheoryParams::validate() const {
    if (!(a >= 0.0) || !(a < 1.0)) throw InvalidInput("autocorrelation a must lie in [0, 1)");
    if (!(gamma2 > 0.0)) throw InvalidInput("gamma2 must be positive");
    if (!(mu >= 0.0)) throw InvalidInput("mu must be nonnegative");
    if (!(sigma2 >= 0.0)) throw InvalidInput("sigma2 must be nonnegative");
    if (!(beta2 > 0.0) || beta2 > 1.0) throw InvalidInput("beta2 must lie in (0, 1]");
}

double TheoryParams::q() const { return beta2 * gamma2 * (1.0 - a * a); }

double TheoryParams::r() const { return (gamma2 + mu * mu) * (1.0 - beta2) + sigma2; }

double mse_unknown_signs(const TheoryParams& p) {
    p.validate();
    const double signal = p.gamma2 + p.mu * p.mu;
    return signal * p.sigma2 / (signal + p.sigma2);
}

double riccati_P(const TheoryParams& p) {
    p.validate();
    const double q = p.q();
    const double r = p.r();
    // Positive root of P^2 + b P - q r with b = (1-a^2) r - q; the b > 0
    // branch is rewritten to avoid cancellation between b and the radical.
    const double b = (1.0 - p.a * p.a) * r - q;
    const double disc = std::sqrt(b * b + 4.0 * q * r);
    return b > 0.0 ? 2.0 * q * r / (b + disc) : 0.5 * (disc - b);
}

double mse_known_signs(const TheoryParams& p) {
    p.validate();
    if (p.sigma2 == 0.0) return 0.0;
    const double prior = riccati_P(p) + (p.gamma2 + p.mu * p.mu) * (1.0 - p.beta2);
    if (prior == 0.0) return 0.0;
    return 1.0 / (1.0 / prior + 1.0 / p.sigma2);
}

double mse_ratio(const TheoryParams& p) {
    p.validate();
    if (!(p.sigma2 > 0.0))
        throw InvalidInput("mse ratio needs sigma2 > 0; both errors vanish otherwise");
    return mse_known_signs(p) / mse_unknown_signs(p);
}

double kalman_empirical_mse(const TheoryParams& p, long horizon, int replicates,
                            std::uint64_t seed) {
    p.validate();
    if (horizon < 10) throw InvalidInput("horizon too short for an empirical average");
    if (replicates < 1) throw InvalidInput("need at least one replicate");

    const double beta = std::sqrt(p.beta2);
    const double m = p.mu * beta;
    const double q = p.q();
    const double var_eps = (p.gamma2 + p.mu * p.mu) * (1.0 - p.beta2);
    const double var_q0 = p.beta2 * p.gamma2;  // stationary variance of the AR(1) state

    double total = 0.0;
    long counted = 0;
    for (int rep = 0; rep < replicates; ++rep) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(rep));
        double qs = std::sqrt(var_q0) * rng.gaussian();

        double qhat = 0.0;       // posterior mean of the AR(1) state
        double pvar = var_q0;    // posterior variance
        for (long k = 0; k < horizon; ++k) {
            qs = p.a * qs + std::sqrt(q) * rng.gaussian();
            const double eps = std::sqrt(var_eps) * rng.gaussian();
            const double clean = m + qs + eps;
            const double obs = clean + std::sqrt(p.sigma2) * rng.gaussian();

            const double p_pred = p.a * p.a * pvar + q;
            const double q_pred = p.a * qhat;
            const double innov = obs - m - q_pred;

            const double prior = p_pred + var_eps;
            const double denom = prior + p.sigma2;
            const double gain_out = denom > 0.0 ? prior / denom : 1.0;
            const double clean_hat = m + q_pred + gain_out * innov;

            const double rn = var_eps + p.sigma2;
            const double gain_state = (p_pred + rn) > 0.0 ? p_pred / (p_pred + rn) : 0.0;
            qhat = q_pred + gain_state * innov;
            pvar = (1.0 - gain_state) * p_pred;

            if (k >= horizon / 2) {
                const double err = clean_hat - clean;
                total += err * err;
                ++counted;
            }
        }
    }
    return total / static_cast<double>(counted);
}

std::vector<RCurvePoint> r_curve(double gamma2, double mu, double sigma2, double beta2,
                                 const std::vector<double>& a_values) {
    std::vector<RCurvePoint> out;
    out.reserve(a_values.size());
    for (const double a : a_values) {
        TheoryParams p{a, gamma2, mu, sigma2, beta2};
        RCurvePoint pt;
        pt.a = a;
        pt.mse_unknown = mse_unknown_signs(p);
        pt.prediction_var = riccati_P(p);
        pt.mse_known = mse_known_signs(p);
        pt.ratio = mse_ratio(p);
        out.push_back(pt);
    }
    return out;
}

}  // namespace trine::theory
