#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <string>

#include "trine/kernels.hpp"
#include "trine/types.hpp"

namespace trine::estimator {

// Supervised view of one scalar coordinate of a time series: inputs are full
// observed states y_k, outputs are the next observation of the target
// coordinate, z_k = y_{k+1}[coordinate]. Pairs never straddle trajectory ends;
// builders enforce that.
struct TrainingSet {
    Eigen::MatrixXd inputs;     // (N-1) x dim
    Eigen::VectorXd outputs;    // N-1
    Eigen::VectorXd noise_var;  // variance of measurement noise on each output, >= 0
    double delta_t = 1.0;
    DynamicsKind kind = DynamicsKind::Continuous;
    int coordinate = 0;

    Eigen::Index size() const { return outputs.size(); }
    void validate() const;
};

enum class MeanTermMode {
    Off,   // mu = 0 (default; matches the plain second-stage model)
    Auto,  // mu = mean(|stage-1 noise estimate|) / beta
    Fixed  // mu = mean_value
};

struct TrineConfig {
    BetaFamily beta_family = BetaFamily::Gaussian;
    MeanTermMode mean_mode = MeanTermMode::Off;
    double mean_value = 0.0;

    int grid_points = 7;
    int refine_max = 200;

    // NaN leaves a hyperparameter free; a finite value pins it (the search box
    // collapses to that point, so reported evidence is still comparable).
    double lambda_f = nan_, ell_f = nan_, rho_n = nan_;
    double lambda_w = nan_, ell_w = nan_;
    double lambda_g = nan_, ell_g = nan_, rho_g = nan_;

    // Rank budget for the low-rank evidence path during hyperparameter search;
    // 0 forces every evaluation through the dense route. Final-stage solves
    // are always dense.
    Eigen::Index lowrank_cap = 420;

  private:
    static constexpr double nan_ = std::numeric_limits<double>::quiet_NaN();
};

struct Stage1Result {
    kernels::GaussianKernelParams kf;
    double rho_n = 0.0;
    double evidence = 0.0;
    int evaluations = 0;
    Eigen::VectorXd coeffs;          // (K_f + Sigma_e + rho_n I)^{-1} z
    Eigen::VectorXd noise_estimate;  // rho_n * coeffs
    kernels::SignVector signs;       // sign(coeffs), sign(0) = +1
};

struct Stage2Result {
    kernels::GaussianKernelParams kw;
    double mu = 0.0;
    double evidence = 0.0;
    int evaluations = 0;
    Eigen::VectorXd noise_estimate;
};

struct Stage3Result {
    kernels::GaussianKernelParams kg;
    double rho_g = 0.0;
    double evidence = 0.0;
    int evaluations = 0;
    Eigen::VectorXd weights;  // ridge representer coefficients
};

// Kernel expansion of the one-step noise gain G(x); sd_value() undoes the
// sqrt(delta_t) scaling for continuous dynamics.
struct SdProfile {
    Eigen::MatrixXd centers;
    Eigen::VectorXd weights;
    kernels::GaussianKernelParams kg;
    double delta_t = 1.0;
    DynamicsKind kind = DynamicsKind::Continuous;

    double evaluate(const Eigen::VectorXd& x) const;
    Eigen::VectorXd evaluate_rows(const Eigen::MatrixXd& xs) const;
    double sd_value(const Eigen::VectorXd& x) const;
    Eigen::VectorXd sd_values_rows(const Eigen::MatrixXd& xs) const;
};

enum class EstimatorKind { Trine, TrineUnstructured, Oracle };

std::string to_string(EstimatorKind k);
EstimatorKind estimator_kind_from_string(const std::string& s);

struct TrineOutput {
    EstimatorKind estimator = EstimatorKind::Trine;
    std::optional<Stage1Result> stage1;
    std::optional<Stage2Result> stage2;
    Stage3Result stage3;
    SdProfile profile;
    // sqrt(mean measurement variance) / sqrt(rho_n); only meaningful when
    // stage 1 ran.
    std::optional<double> diagnostic;
};

// Stage 1: evidence-optimized GP regression of z on y with an iid noise
// bucket; returns the solve coefficients, their signs, and the unstructured
// noise estimate rho_n * coeffs.
Stage1Result stage1_signs(const TrainingSet& ts, const TrineConfig& cfg);

// Stage 2: replaces the iid bucket by the sign-structured noise kernel,
// re-optimizes the noise kernel's amplitude and width (drift kernel held from
// stage 1), and extracts the noise realization estimate.
Stage2Result stage2_noise(const TrainingSet& ts, const Stage1Result& s1, const TrineConfig& cfg);

// Stage 3: kernel ridge regression of |noise|/beta targets onto the inputs.
Stage3Result stage3_profile(const TrainingSet& ts, const Eigen::VectorXd& targets,
                            const TrineConfig& cfg);

SdProfile make_profile(const TrainingSet& ts, const Stage3Result& s3);

TrineOutput run_trine(const TrainingSet& ts, const TrineConfig& cfg);

// Stage 1 + stage 3 on the unstructured estimate; stage 2 skipped entirely.
TrineOutput run_trine_unstructured(const TrainingSet& ts, const TrineConfig& cfg);

// Stage 3 on the true noise realizations (per-pair stochastic increments of
// the target coordinate); the upper reference in benchmarks.
TrineOutput run_oracle(const TrainingSet& ts, const Eigen::VectorXd& true_noise,
                       const TrineConfig& cfg);

double noise_strength_diagnostic(const TrainingSet& ts, const Stage1Result& s1);

}  // namespace trine::estimator
