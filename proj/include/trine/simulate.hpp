#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "trine/estimator.hpp"
#include "trine/rng.hpp"
#include "trine/types.hpp"

namespace trine::simulate {

// A dynamical system in one-step form. For continuous dynamics `drift` and
// `diffusion` are the SDE's f and g (as a dim x dim factor); for discrete
// maps they are the map itself and the per-step noise gain. `sd_profile`
// returns the per-coordinate noise SD sqrt((g g^T)_ii), the quantity the
// estimators are benchmarked against.
struct SystemDefinition {
    std::string name;
    int dimension = 1;
    DynamicsKind kind = DynamicsKind::Continuous;
    bool clamp_nonnegative = false;
    Eigen::VectorXd initial_state;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;
    std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> diffusion;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> sd_profile;
};

// One simulated trajectory at sampling resolution. `increments` holds the
// realized stochastic displacement between consecutive samples, recorded so
// that x_{k+1} - x_k - (accumulated drift) reproduces it bit for bit.
struct SimulatedBundle {
    Eigen::MatrixXd states;        // N x dim
    Eigen::MatrixXd observations;  // N x dim
    Eigen::MatrixXd increments;    // (N-1) x dim
    Eigen::MatrixXd noise_sd;      // N x dim, measurement SD per sample
    Eigen::VectorXd times;         // N
    double delta_t = 1.0;
    DynamicsKind kind = DynamicsKind::Continuous;
};

struct BenchmarkScenario {
    std::string system;
    std::map<std::string, double> parameters;  // overrides for the system's constants
    double inner_step = 0.01;
    int sampling_stride = 1;
    int num_points = 1000;  // total across trajectories
    int num_trajectories = 1;
    std::array<double, 2> noise_ratio_range{0.3, 0.4};
    BetaFamily beta_family = BetaFamily::Gaussian;
};

struct ScenarioRun {
    BenchmarkScenario scenario;
    SystemDefinition system;
    std::vector<SimulatedBundle> bundles;
    std::uint64_t seed = 0;
    double realized_ratio = 0.0;
};

SystemDefinition ricker_system(double r = 2.5);

struct FhnParams {
    double eps = 0.08, a = 0.7, b = 0.8, i_ext = 0.5;
    double sigma_v = 0.1, sigma_w = 0.05, exp_v = 0.8, exp_w = 0.8;
};
SystemDefinition fhn_system(const FhnParams& p = {});

SystemDefinition self_promoter_system(double a0 = 0.05, double b = 10.0, double m0 = 25.0,
                                      double kappa = 1.0);

// Dimensionless toggle switch; b and kappa are the compound parameters the
// drift and diffusion are written in.
SystemDefinition toggle_system(double b, double kappa, double m0);

// Same system from the raw rate constants; b = beta * theta * delta^2 / alpha^2
// and kappa = cap * alpha^2 / (theta * delta^3).
SystemDefinition toggle_system_from_rates(double theta = 1e4, double alpha = 1e3,
                                          double beta = 50.0, double delta = 0.75,
                                          double cap = 0.01, double m0 = 1000.0);
std::pair<double, double> toggle_compound_parameters(double theta, double alpha, double beta,
                                                     double delta, double cap);

// Build a system by name with parameter overrides (unknown keys rejected).
SystemDefinition make_system(const std::string& name,
                             const std::map<std::string, double>& parameters);

// Scenario defaults used by the command line and the benchmark harness.
BenchmarkScenario default_scenario(const std::string& system);

struct RawTrajectory {
    Eigen::MatrixXd states;      // (steps+1) x dim
    Eigen::MatrixXd increments;  // steps x dim
};

// Euler-Maruyama for continuous systems (x += dt f + sqrt(dt) g w), direct
// iteration for discrete maps (x = f + g w). Noise w is iid unit variance
// from the given family. Throws SimulationDiverged on non-finite states.
RawTrajectory euler_maruyama(const SystemDefinition& sys, const Eigen::VectorXd& x0, double dt,
                             long steps, Rng& rng, BetaFamily family);

// Integrate with burn-in and subsample every `stride` steps, aggregating the
// inner increments between samples.
SimulatedBundle sample_trajectory(const SystemDefinition& sys, const Eigen::VectorXd& x0,
                                  double dt, int stride, int num_samples, int burn_in_samples,
                                  Rng& rng, BetaFamily family);

// Draw per-sample Gaussian measurement noise with SD proportional to |x|,
// rescaled so the realized ||e|| / ||n|| over the whole collection equals a
// uniform draw from `ratio_range` exactly. Observations and noise_sd columns
// are overwritten; returns the realized ratio.
double add_measurement_noise(std::vector<SimulatedBundle>& bundles,
                             const std::array<double, 2>& ratio_range, Rng& rng);

// Concatenate consecutive-observation pairs of one coordinate across
// trajectories; pairs never straddle a trajectory boundary.
estimator::TrainingSet build_dataset(const std::vector<SimulatedBundle>& bundles,
                                     int coordinate);

// Per-pair realized stochastic increments of one coordinate, aligned with
// build_dataset's pair order; the oracle's targets.
Eigen::VectorXd collect_increments(const std::vector<SimulatedBundle>& bundles, int coordinate);

// True noise SD at the training inputs, in the same per-step units the
// estimated profile uses (sqrt(delta_t) g for continuous dynamics).
Eigen::VectorXd true_gain_at_inputs(const SystemDefinition& sys,
                                    const estimator::TrainingSet& ts);

ScenarioRun simulate_scenario(const BenchmarkScenario& scenario, std::uint64_t seed);

}  // namespace trine::simulate
