#include "trine/simulate.hpp"

#include <cmath>
#include <set>

namespace trine::simulate {

namespace {

constexpr int kBurnInSamples = 100;
constexpr std::uint64_t kNoiseStream = 1000003;
constexpr double kDivergenceBound = 1e9;

double draw_unit(Rng& rng, BetaFamily family) {
    switch (family) {
        case BetaFamily::Gaussian: return rng.gaussian();
        case BetaFamily::Laplacian: return rng.laplace();
        case BetaFamily::Bernoulli: return rng.rademacher();
    }
    throw InvalidInput("unknown beta family");
}

void check_state(const Eigen::VectorXd& x, long step) {
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > kDivergenceBound)
        throw SimulationDiverged("trajectory left the finite range", step);
}

// Symmetric PSD square root of a 2x2 matrix via (A + sqrt(det) I) / t with
// t = sqrt(trace + 2 sqrt(det)); exact for PSD input by Cayley-Hamilton.
Eigen::Matrix2d psd_sqrt_2x2(const Eigen::Matrix2d& a) {
    const double tr = a(0, 0) + a(1, 1);
    double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    if (tr < -1e-10 || det < -1e-10 * std::max(1.0, tr * tr))
        throw ModelEvaluationError("diffusion matrix is not positive semidefinite");
    if (det < 0.0) det = 0.0;
    const double s = std::sqrt(det);
    const double t2 = tr + 2.0 * s;
    if (t2 <= 0.0) return Eigen::Matrix2d::Zero();
    return (a + s * Eigen::Matrix2d::Identity()) / std::sqrt(t2);
}

double require_param(const std::map<std::string, double>& params, const std::string& key,
                     double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void reject_unknown(const std::map<std::string, double>& params,
                    const std::set<std::string>& known, const std::string& system) {
    for (const auto& [k, v] : params)
        if (!known.count(k)) throw InvalidInput("unknown parameter '" + k + "' for " + system);
}

}  // namespace

SystemDefinition ricker_system(double r) {
    SystemDefinition sys;
    sys.name = "ricker";
    sys.dimension = 1;
    sys.kind = DynamicsKind::DiscreteMap;
    sys.clamp_nonnegative = true;
    sys.initial_state = Eigen::VectorXd::Constant(1, 1.0);
    sys.drift = [r](const Eigen::VectorXd& x) {
        Eigen::VectorXd f(1);
        f[0] = x[0] * x[0] * std::exp(r * (1.0 - x[0]));
        return f;
    };
    auto sd = [](const Eigen::VectorXd& x) {
        Eigen::VectorXd s(1);
        s[0] = std::sqrt(std::max(0.0, 0.3 * 0.3 + 0.05 * 0.05 * x[0]));
        return s;
    };
    sys.diffusion = [sd](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g(1, 1);
        g(0, 0) = sd(x)[0];
        return g;
    };
    sys.sd_profile = sd;
    return sys;
}

SystemDefinition fhn_system(const FhnParams& p) {
    SystemDefinition sys;
    sys.name = "fhn";
    sys.dimension = 2;
    sys.kind = DynamicsKind::Continuous;
    sys.clamp_nonnegative = false;  // membrane variables cross zero
    sys.initial_state = Eigen::VectorXd::Zero(2);
    sys.drift = [p](const Eigen::VectorXd& x) {
        Eigen::VectorXd f(2);
        f[0] = x[0] - x[0] * x[0] * x[0] / 3.0 - x[1] + p.i_ext;
        f[1] = p.eps * (x[0] + p.a - p.b * x[1]);
        return f;
    };
    auto sd = [p](const Eigen::VectorXd& x) {
        Eigen::VectorXd s(2);
        s[0] = p.sigma_v * std::pow(std::abs(x[0]), p.exp_v);
        s[1] = p.sigma_w * std::pow(std::abs(x[1]), p.exp_w);
        return s;
    };
    sys.diffusion = [sd](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd(sd(x).asDiagonal());
    };
    sys.sd_profile = sd;
    return sys;
}

SystemDefinition self_promoter_system(double a0, double b, double m0, double kappa) {
    SystemDefinition sys;
    sys.name = "self_promoter";
    sys.dimension = 1;
    sys.kind = DynamicsKind::Continuous;
    sys.clamp_nonnegative = true;
    sys.initial_state = Eigen::VectorXd::Constant(1, a0);
    sys.drift = [a0, b, kappa](const Eigen::VectorXd& xv) {
        const double x = xv[0];
        const double den = b + x * x;
        const double macro = (b * a0 + x * x) / den - x;
        const double bracket = ((a0 - 2.0) + x) * x * x + b * (x - a0);
        const double corr = 2.0 * x * b * (a0 - 1.0) * bracket / (kappa * den * den * den * den);
        Eigen::VectorXd f(1);
        f[0] = macro - corr;
        return f;
    };
    auto sd = [a0, b, m0, kappa](const Eigen::VectorXd& xv) {
        const double x = xv[0];
        const double den = b + x * x;
        const double intrinsic = (b * (a0 + x) + x * x * (1.0 + x)) / den / m0;
        const double promoter =
            b * x * x * (a0 - 1.0) * (a0 - 1.0) / (kappa * den * den * den);
        Eigen::VectorXd s(1);
        s[0] = std::sqrt(std::max(0.0, intrinsic + promoter));
        return s;
    };
    sys.diffusion = [sd](const Eigen::VectorXd& x) {
        Eigen::MatrixXd g(1, 1);
        g(0, 0) = sd(x)[0];
        return g;
    };
    sys.sd_profile = sd;
    return sys;
}

namespace {

// Drift of one toggle coordinate; u is "own" protein, v the antagonist.
double toggle_drift_coord(double u, double v, double b, double kappa) {
    const double den = b + u * u + v * v;
    const double macro = (b + u * u) / den - u;
    const double bracket = (u - 1.0) * (b + u * u) * (2.0 * b + u * u) +
                           u * v * v * (3.0 * b + u * (2.0 * u - 1.0)) +
                           u * v * v * v * v;
    const double corr =
        2.0 * u * v * (u + v) * bracket / (kappa * b * den * den * den * den);
    return macro - corr;
}

double toggle_q_diag(double u, double v, double b, double kappa, double m0) {
    const double den = b + u * u + v * v;
    const double intrinsic = ((b + u * u) / den + u) / m0;
    const double promoter =
        v * v * (b * b + 2.0 * b * u * u + u * u * v * v + u * u * u * u) /
        (kappa * b * den * den * den);
    return intrinsic + promoter;
}

double toggle_q_cross(double u, double v, double b, double kappa) {
    const double den = b + u * u + v * v;
    return u * u * v * v * (2.0 * b + u * u + v * v) / (kappa * b * den * den * den);
}

}  // namespace

SystemDefinition toggle_system(double b, double kappa, double m0) {
    SystemDefinition sys;
    sys.name = "toggle";
    sys.dimension = 2;
    sys.kind = DynamicsKind::Continuous;
    sys.clamp_nonnegative = true;
    // Started at the symmetric (saddle) point so independent trajectories fall
    // into either expression basin; the published state-space picture covers
    // both basins.
    sys.initial_state = (Eigen::VectorXd(2) << 1.0, 1.0).finished();
    sys.drift = [b, kappa](const Eigen::VectorXd& x) {
        Eigen::VectorXd f(2);
        f[0] = toggle_drift_coord(x[0], x[1], b, kappa);
        f[1] = toggle_drift_coord(x[1], x[0], b, kappa);
        return f;
    };
    auto q_matrix = [b, kappa, m0](const Eigen::VectorXd& x) {
        Eigen::Matrix2d q;
        q(0, 0) = toggle_q_diag(x[0], x[1], b, kappa, m0);
        q(1, 1) = toggle_q_diag(x[1], x[0], b, kappa, m0);
        q(0, 1) = q(1, 0) = toggle_q_cross(x[0], x[1], b, kappa);
        return q;
    };
    sys.diffusion = [q_matrix](const Eigen::VectorXd& x) {
        return Eigen::MatrixXd(psd_sqrt_2x2(q_matrix(x)));
    };
    sys.sd_profile = [q_matrix](const Eigen::VectorXd& x) {
        const Eigen::Matrix2d q = q_matrix(x);
        Eigen::VectorXd s(2);
        s[0] = std::sqrt(std::max(0.0, q(0, 0)));
        s[1] = std::sqrt(std::max(0.0, q(1, 1)));
        return s;
    };
    return sys;
}

std::pair<double, double> toggle_compound_parameters(double theta, double alpha, double beta,
                                                     double delta, double cap) {
    const double b = beta * theta * delta * delta / (alpha * alpha);
    const double kappa = cap * alpha * alpha / (theta * delta * delta * delta);
    return {b, kappa};
}

SystemDefinition toggle_system_from_rates(double theta, double alpha, double beta, double delta,
                                          double cap, double m0) {
    const auto [b, kappa] = toggle_compound_parameters(theta, alpha, beta, delta, cap);
    return toggle_system(b, kappa, m0);
}

SystemDefinition make_system(const std::string& name,
                             const std::map<std::string, double>& params) {
    if (name == "ricker") {
        reject_unknown(params, {"r"}, name);
        return ricker_system(require_param(params, "r", 2.5));
    }
    if (name == "fhn") {
        reject_unknown(params,
                       {"eps", "a", "b", "i_ext", "sigma_v", "sigma_w", "exp_v", "exp_w"}, name);
        FhnParams p;
        p.eps = require_param(params, "eps", p.eps);
        p.a = require_param(params, "a", p.a);
        p.b = require_param(params, "b", p.b);
        p.i_ext = require_param(params, "i_ext", p.i_ext);
        p.sigma_v = require_param(params, "sigma_v", p.sigma_v);
        p.sigma_w = require_param(params, "sigma_w", p.sigma_w);
        p.exp_v = require_param(params, "exp_v", p.exp_v);
        p.exp_w = require_param(params, "exp_w", p.exp_w);
        return fhn_system(p);
    }
    if (name == "self_promoter") {
        reject_unknown(params, {"a0", "b", "m0", "kappa"}, name);
        return self_promoter_system(
            require_param(params, "a0", 0.05), require_param(params, "b", 10.0),
            require_param(params, "m0", 25.0), require_param(params, "kappa", 1.0));
    }
    if (name == "toggle") {
        reject_unknown(params, {"theta", "alpha", "beta", "delta", "K", "m0"}, name);
        return toggle_system_from_rates(
            require_param(params, "theta", 1e4), require_param(params, "alpha", 1e3),
            require_param(params, "beta", 50.0), require_param(params, "delta", 0.75),
            require_param(params, "K", 0.01), require_param(params, "m0", 1000.0));
    }
    throw InvalidInput("unknown system: " + name);
}

BenchmarkScenario default_scenario(const std::string& system) {
    BenchmarkScenario s;
    s.system = system;
    s.noise_ratio_range = {0.3, 0.4};
    s.beta_family = BetaFamily::Gaussian;
    if (system == "ricker") {
        s.inner_step = 1.0;
        s.sampling_stride = 1;
        s.num_points = 1000;
        s.num_trajectories = 1;
    } else if (system == "fhn") {
        s.inner_step = 0.01;
        s.sampling_stride = 10;
        s.num_points = 2000;
        s.num_trajectories = 1;
    } else if (system == "self_promoter" || system == "toggle") {
        s.inner_step = 0.01;
        s.sampling_stride = 1;
        s.num_points = 1000;
        s.num_trajectories = 4;
    } else {
        throw InvalidInput("unknown system: " + system);
    }
    return s;
}

RawTrajectory euler_maruyama(const SystemDefinition& sys, const Eigen::VectorXd& x0, double dt,
                             long steps, Rng& rng, BetaFamily family) {
    if (x0.size() != sys.dimension) throw InvalidInput("initial state has wrong dimension");
    if (steps < 0) throw InvalidInput("step count must be nonnegative");
    if (sys.kind == DynamicsKind::Continuous && !(dt > 0.0))
        throw InvalidInput("integration step must be positive");

    const int dim = sys.dimension;
    RawTrajectory out;
    out.states.resize(steps + 1, dim);
    out.increments.resize(steps, dim);

    Eigen::VectorXd x = x0;
    const double sqrt_dt = sys.kind == DynamicsKind::Continuous ? std::sqrt(dt) : 1.0;
    out.states.row(0) = x;
    Eigen::VectorXd w(dim), xn(dim), det_part(dim);
    for (long k = 0; k < steps; ++k) {
        for (int d = 0; d < dim; ++d) w[d] = draw_unit(rng, family);
        const Eigen::VectorXd f = sys.drift(x);
        const Eigen::MatrixXd g = sys.diffusion(x);
        if (!f.allFinite() || !g.allFinite())
            throw ModelEvaluationError("drift or diffusion returned non-finite values");
        if (sys.kind == DynamicsKind::Continuous) {
            det_part = x + dt * f;
            xn = det_part + sqrt_dt * (g * w);
        } else {
            det_part = f;
            xn = det_part + g * w;
        }
        if (sys.clamp_nonnegative) xn = xn.cwiseMax(0.0);
        check_state(xn, k + 1);
        // Recorded as realized displacement minus the deterministic part, so
        // the bookkeeping identity holds bit for bit even after clamping.
        out.increments.row(k) = xn - det_part;
        out.states.row(k + 1) = xn;
        x = xn;
    }
    return out;
}

SimulatedBundle sample_trajectory(const SystemDefinition& sys, const Eigen::VectorXd& x0,
                                  double dt, int stride, int num_samples, int burn_in_samples,
                                  Rng& rng, BetaFamily family) {
    if (num_samples < 2) throw InvalidInput("need at least two samples per trajectory");
    if (stride < 1) throw InvalidInput("sampling stride must be at least 1");
    if (sys.kind == DynamicsKind::DiscreteMap && stride != 1)
        throw InvalidInput("discrete maps are sampled every step");

    const long total_steps =
        static_cast<long>(burn_in_samples + num_samples - 1) * static_cast<long>(stride);
    const RawTrajectory raw = euler_maruyama(sys, x0, dt, total_steps, rng, family);

    const int dim = sys.dimension;
    const double delta_t = sys.kind == DynamicsKind::Continuous ? dt * stride : 1.0;
    SimulatedBundle b;
    b.delta_t = delta_t;
    b.kind = sys.kind;
    b.states.resize(num_samples, dim);
    b.observations.resize(num_samples, dim);
    b.increments = Eigen::MatrixXd::Zero(num_samples - 1, dim);
    b.noise_sd = Eigen::MatrixXd::Zero(num_samples, dim);
    b.times.resize(num_samples);

    const long offset = static_cast<long>(burn_in_samples) * stride;
    for (int j = 0; j < num_samples; ++j) {
        b.states.row(j) = raw.states.row(offset + static_cast<long>(j) * stride);
        b.times[j] = static_cast<double>(j) * delta_t;
        if (j > 0)
            for (int s = 0; s < stride; ++s)
                b.increments.row(j - 1) +=
                    raw.increments.row(offset + static_cast<long>(j - 1) * stride + s);
    }
    b.observations = b.states;
    return b;
}

double add_measurement_noise(std::vector<SimulatedBundle>& bundles,
                             const std::array<double, 2>& ratio_range, Rng& rng) {
    if (bundles.empty()) throw InvalidInput("no trajectories to add noise to");
    if (!(ratio_range[0] >= 0.0) || !(ratio_range[1] >= ratio_range[0]))
        throw InvalidInput("noise ratio range must satisfy 0 <= lo <= hi");

    const double target =
        ratio_range[0] + (ratio_range[1] - ratio_range[0]) * rng.uniform();

    double inc_norm2 = 0.0;
    for (const auto& b : bundles) inc_norm2 += b.increments.squaredNorm();

    std::vector<Eigen::MatrixXd> draws;
    draws.reserve(bundles.size());
    double raw_norm2 = 0.0;
    for (auto& b : bundles) {
        Eigen::MatrixXd e(b.states.rows(), b.states.cols());
        for (Eigen::Index k = 0; k < e.rows(); ++k)
            for (Eigen::Index d = 0; d < e.cols(); ++d)
                e(k, d) = std::abs(b.states(k, d)) * rng.gaussian();
        raw_norm2 += e.squaredNorm();
        draws.push_back(std::move(e));
    }

    double scale = 0.0;
    if (target > 0.0) {
        if (!(inc_norm2 > 0.0))
            throw InvalidInput("cannot target a noise ratio on a noise-free trajectory");
        if (!(raw_norm2 > 0.0))
            throw InvalidInput("state magnitudes are all zero; proportional noise is degenerate");
        scale = target * std::sqrt(inc_norm2) / std::sqrt(raw_norm2);
    }

    double err_norm2 = 0.0;
    for (std::size_t t = 0; t < bundles.size(); ++t) {
        auto& b = bundles[t];
        b.observations = b.states + scale * draws[t];
        b.noise_sd = scale * b.states.cwiseAbs();
        err_norm2 += (scale * draws[t]).squaredNorm();
    }
    return inc_norm2 > 0.0 ? std::sqrt(err_norm2 / inc_norm2) : 0.0;
}

estimator::TrainingSet build_dataset(const std::vector<SimulatedBundle>& bundles,
                                     int coordinate) {
    if (bundles.empty()) throw InvalidInput("no trajectories in dataset");
    const auto dim = bundles.front().observations.cols();
    if (coordinate < 0 || coordinate >= dim) throw InvalidInput("coordinate out of range");

    Eigen::Index pairs = 0;
    for (const auto& b : bundles) {
        if (b.observations.cols() != dim)
            throw InvalidInput("trajectories have mismatched dimensions");
        if (b.observations.rows() < 2)
            throw InvalidInput("each trajectory needs at least two samples");
        pairs += b.observations.rows() - 1;
    }

    estimator::TrainingSet ts;
    ts.inputs.resize(pairs, dim);
    ts.outputs.resize(pairs);
    ts.noise_var.resize(pairs);
    ts.delta_t = bundles.front().delta_t;
    ts.kind = bundles.front().kind;
    ts.coordinate = coordinate;

    Eigen::Index row = 0;
    for (const auto& b : bundles) {
        if (b.delta_t != ts.delta_t || b.kind != ts.kind)
            throw InvalidInput("trajectories have mismatched sampling conventions");
        for (Eigen::Index k = 0; k + 1 < b.observations.rows(); ++k, ++row) {
            ts.inputs.row(row) = b.observations.row(k);
            ts.outputs[row] = b.observations(k + 1, coordinate);
            const double sd = b.noise_sd.size() > 0 ? b.noise_sd(k + 1, coordinate) : 0.0;
            ts.noise_var[row] = sd * sd;
        }
    }
    return ts;
}

Eigen::VectorXd collect_increments(const std::vector<SimulatedBundle>& bundles, int coordinate) {
    Eigen::Index pairs = 0;
    for (const auto& b : bundles) pairs += b.increments.rows();
    Eigen::VectorXd out(pairs);
    Eigen::Index row = 0;
    for (const auto& b : bundles)
        for (Eigen::Index k = 0; k < b.increments.rows(); ++k, ++row)
            out[row] = b.increments(k, coordinate);
    return out;
}

Eigen::VectorXd true_gain_at_inputs(const SystemDefinition& sys,
                                    const estimator::TrainingSet& ts) {
    const double unit =
        ts.kind == DynamicsKind::Continuous ? std::sqrt(ts.delta_t) : 1.0;
    Eigen::VectorXd out(ts.size());
    for (Eigen::Index i = 0; i < ts.size(); ++i)
        out[i] = unit * sys.sd_profile(ts.inputs.row(i).transpose())[ts.coordinate];
    return out;
}

ScenarioRun simulate_scenario(const BenchmarkScenario& scenario, std::uint64_t seed) {
    if (scenario.num_trajectories < 1) throw InvalidInput("need at least one trajectory");
    if (scenario.num_points % scenario.num_trajectories != 0)
        throw InvalidInput("num_points must divide evenly across trajectories");
    const int per_traj = scenario.num_points / scenario.num_trajectories;

    ScenarioRun run;
    run.scenario = scenario;
    run.seed = seed;
    run.system = make_system(scenario.system, scenario.parameters);

    for (int t = 0; t < scenario.num_trajectories; ++t) {
        Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(t));
        run.bundles.push_back(sample_trajectory(run.system, run.system.initial_state,
                                                scenario.inner_step, scenario.sampling_stride,
                                                per_traj, kBurnInSamples, rng,
                                                scenario.beta_family));
    }

    Rng noise_rng = Rng::substream(seed, kNoiseStream);
    run.realized_ratio = add_measurement_noise(run.bundles, scenario.noise_ratio_range, noise_rng);
    return run;
}

}  // namespace trine::simulate
