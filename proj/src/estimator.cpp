#include "trine/estimator.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "trine/gp.hpp"

namespace trine::estimator {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Tail tolerance for the partial factorizations used during hyperparameter
// search. Final solves never go through this path.
constexpr double kPivTol = 1e-14;

// Accept a fast evidence value only when its a-posteriori error bound stays
// below this fraction of the magnitude; otherwise recompute densely.
constexpr double kEvidenceSlack = 1e-5;

double sample_variance(const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    if (n < 2) return 0.0;
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(n - 1);
}

double pow10(double x) { return std::pow(10.0, x); }

gp::HyperparamBox::Axis free_axis(double lo_mult, double hi_mult, double scale) {
    if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
    return {std::log10(lo_mult * scale), std::log10(hi_mult * scale)};
}

gp::HyperparamBox::Axis fixed_axis(double value) {
    if (!(value > 0.0) || !std::isfinite(value))
        throw InvalidInput("pinned hyperparameters must be positive and finite");
    const double l = std::log10(value);
    return {l, l};
}

gp::HyperparamBox::Axis make_axis(double pinned, double lo_mult, double hi_mult, double scale) {
    return std::isnan(pinned) ? free_axis(lo_mult, hi_mult, scale) : fixed_axis(pinned);
}

// Pinned values round-trip exactly instead of through log10/pow10.
double resolve(double pinned, double log10_value) {
    return std::isnan(pinned) ? pow10(log10_value) : pinned;
}

// Small LRU of partial factors keyed by the exact bits of the width, so a
// grid scan re-visiting the same width pays for one factorization only.
class FactorCache {
  public:
    std::shared_ptr<const kernels::LowRankFactor> get(const Eigen::MatrixXd& pts, double ell,
                                                      Eigen::Index max_rank, double tol) {
        const std::uint64_t key = std::bit_cast<std::uint64_t>(ell);
        for (auto& e : entries_)
            if (e.key == key) {
                e.stamp = ++tick_;
                return e.factor;
            }
        auto f = std::make_shared<const kernels::LowRankFactor>(
            kernels::pivoted_cholesky(pts, ell, max_rank, tol));
        if (entries_.size() >= 10) {
            std::size_t oldest = 0;
            for (std::size_t i = 1; i < entries_.size(); ++i)
                if (entries_[i].stamp < entries_[oldest].stamp) oldest = i;
            entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(oldest));
        }
        entries_.push_back({key, f, ++tick_});
        return f;
    }

  private:
    struct Entry {
        std::uint64_t key;
        std::shared_ptr<const kernels::LowRankFactor> factor;
        std::uint64_t stamp;
    };
    std::vector<Entry> entries_;
    std::uint64_t tick_ = 0;
};

// Single-slot cache for the dense unit-amplitude kernel matrix.
class DenseKernelCache {
  public:
    const Eigen::MatrixXd& get(const Eigen::MatrixXd& pts, double ell) {
        const std::uint64_t key = std::bit_cast<std::uint64_t>(ell);
        if (!has_ || key != key_) {
            e_ = kernels::kernel_matrix({1.0, ell}, pts);
            key_ = key;
            has_ = true;
        }
        return e_;
    }

  private:
    Eigen::MatrixXd e_;
    std::uint64_t key_ = 0;
    bool has_ = false;
};

// Evidence of z under C = lambda E(ell) + diag(extra) + rho I, used by
// stages 1 and 3. A truncated factor of E drives a Woodbury evaluation; the
// neglected tail gives an error bound, and evaluations whose bound is too
// loose (or whose rank hits the cap) fall back to the dense route.
class RidgeEvidence {
  public:
    RidgeEvidence(const Eigen::MatrixXd& pts, Eigen::VectorXd target, Eigen::VectorXd extra,
                  Eigen::Index cap)
        : pts_(pts), target_(std::move(target)), extra_(std::move(extra)), cap_(cap) {}

    double operator()(double lambda, double ell, double rho) {
        if (cap_ > 0) {
            auto f = lru_.get(pts_, ell, cap_, kPivTol);
            if (f->L.cols() < cap_) {
                Eigen::VectorXd d = extra_.array() + rho;
                const double dmin = d.minCoeff();
                if (dmin > 0.0) {
                    try {
                        double quad = 0.0;
                        const double ev = gp::log_evidence_diag_lowrank(
                            d, std::sqrt(lambda) * f->L, target_, &quad);
                        const double bound = lambda * f->tail * (1.0 + quad) / dmin;
                        if (bound <= kEvidenceSlack * (1.0 + std::abs(ev))) return ev;
                    } catch (const NumericalFailure&) {
                    }
                }
            }
        }
        Eigen::MatrixXd c = lambda * dense_.get(pts_, ell);
        c.diagonal() += extra_;
        c.diagonal().array() += rho;
        try {
            return gp::log_evidence(gp::CovarianceModel(std::move(c)), target_);
        } catch (const NumericalFailure&) {
            return kNegInf;
        }
    }

  private:
    const Eigen::MatrixXd& pts_;
    Eigen::VectorXd target_;
    Eigen::VectorXd extra_;
    Eigen::Index cap_;
    FactorCache lru_;
    DenseKernelCache dense_;
};

// Evidence of z under C = K_f + Sigma_e + S(G_w o Q)S + mu^2 (1-beta^2) I
// with mean mu beta s; the drift kernel K_f is held fixed. Sign congruence
// keeps the noise kernel's low-rank structure: S G S = (S L)(S L)^T.
class StructuredEvidence {
  public:
    StructuredEvidence(const Eigen::MatrixXd& pts, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& noise_var, const kernels::GaussianKernelParams& kf,
                       const kernels::SignVector& signs, double beta, double mu,
                       Eigen::Index cap)
        : pts_(pts),
          noise_var_(noise_var),
          signs_(signs.vec()),
          beta2_(beta * beta),
          mu_(mu),
          cap_(cap) {
        kf_dense_ = kernels::kernel_matrix(kf, pts);
        if (cap_ > 0) {
            const auto f = kernels::pivoted_cholesky(pts, kf.squared_width, cap_, kPivTol);
            if (f.L.cols() < cap_) {
                lf_scaled_ = std::sqrt(kf.amplitude) * f.L;
                lf_tail_scaled_ = kf.amplitude * f.tail;
                have_lf_ = true;
            }
        }
        residual_ = z - mu_ * std::sqrt(beta2_) * signs_;
        mean_ = mu_ * std::sqrt(beta2_) * signs_;
        z_ = z;
    }

    double operator()(double lambda_w, double ell_w) {
        const double diag_const = (1.0 - beta2_) * (lambda_w + mu_ * mu_);
        if (cap_ > 0 && have_lf_) {
            auto fw = lru_.get(pts_, ell_w, cap_, kPivTol);
            if (fw->L.cols() < cap_) {
                Eigen::VectorXd d = noise_var_.array() + diag_const;
                const double dmin = d.minCoeff();
                if (dmin > 0.0) {
                    Eigen::MatrixXd u(pts_.rows(), lf_scaled_.cols() + fw->L.cols());
                    u.leftCols(lf_scaled_.cols()) = lf_scaled_;
                    u.rightCols(fw->L.cols()) =
                        std::sqrt(beta2_ * lambda_w) * (signs_.asDiagonal() * fw->L);
                    try {
                        double quad = 0.0;
                        const double ev = gp::log_evidence_diag_lowrank(d, u, residual_, &quad);
                        const double bound =
                            (lf_tail_scaled_ + beta2_ * lambda_w * fw->tail) * (1.0 + quad) / dmin;
                        if (bound <= kEvidenceSlack * (1.0 + std::abs(ev))) return ev;
                    } catch (const NumericalFailure&) {
                    }
                }
            }
        }
        Eigen::MatrixXd c = kf_dense_;
        c.noalias() += kernels::structured_kernel(
            lambda_w * dense_.get(pts_, ell_w),
            kernels::SignVector::signs_of(signs_), std::sqrt(beta2_));
        c.diagonal() += noise_var_;
        c.diagonal().array() += mu_ * mu_ * (1.0 - beta2_);
        try {
            return gp::log_evidence(gp::CovarianceModel(std::move(c)), z_, mean_);
        } catch (const NumericalFailure&) {
            return kNegInf;
        }
    }

  private:
    const Eigen::MatrixXd& pts_;
    Eigen::VectorXd noise_var_;
    Eigen::VectorXd signs_;
    Eigen::VectorXd z_;
    Eigen::VectorXd residual_;
    Eigen::VectorXd mean_;
    double beta2_;
    double mu_;
    Eigen::Index cap_;
    Eigen::MatrixXd kf_dense_;
    Eigen::MatrixXd lf_scaled_;
    double lf_tail_scaled_ = 0.0;
    bool have_lf_ = false;
    FactorCache lru_;
    DenseKernelCache dense_;
};

double resolve_mu(const TrineConfig& cfg, const Stage1Result& s1, double beta) {
    switch (cfg.mean_mode) {
        case MeanTermMode::Off: return 0.0;
        case MeanTermMode::Auto: return s1.noise_estimate.cwiseAbs().mean() / beta;
        case MeanTermMode::Fixed:
            if (!(cfg.mean_value >= 0.0) || !std::isfinite(cfg.mean_value))
                throw InvalidInput("fixed mean term must be finite and nonnegative");
            return cfg.mean_value;
    }
    throw InvalidInput("unknown mean term mode");
}

}  // namespace

void TrainingSet::validate() const {
    if (inputs.rows() != outputs.size() || inputs.rows() != noise_var.size())
        throw InvalidInput("training set arrays have mismatched lengths");
    if (inputs.rows() < 2) throw InvalidInput("training set needs at least two pairs");
    if (!(delta_t > 0.0) || !std::isfinite(delta_t))
        throw InvalidInput("sampling interval must be positive");
    if (!inputs.allFinite() || !outputs.allFinite() || !noise_var.allFinite())
        throw InvalidInput("training set contains non-finite values");
    if ((noise_var.array() < 0.0).any())
        throw InvalidInput("measurement noise variances must be nonnegative");
}

std::string to_string(EstimatorKind k) {
    switch (k) {
        case EstimatorKind::Trine: return "trine";
        case EstimatorKind::TrineUnstructured: return "trine_u";
        case EstimatorKind::Oracle: return "oracle";
    }
    throw InvalidInput("unknown estimator kind");
}

EstimatorKind estimator_kind_from_string(const std::string& s) {
    if (s == "trine") return EstimatorKind::Trine;
    if (s == "trine_u") return EstimatorKind::TrineUnstructured;
    if (s == "oracle") return EstimatorKind::Oracle;
    throw InvalidInput("unknown estimator: " + s);
}

Stage1Result stage1_signs(const TrainingSet& ts, const TrineConfig& cfg) {
    ts.validate();
    const double var_z = sample_variance(ts.outputs);
    const double med = kernels::median_squared_distance(ts.inputs);

    gp::HyperparamBox box;
    box.grid_points = cfg.grid_points;
    box.axes = {make_axis(cfg.lambda_f, 1e-4, 1e4, var_z),
                make_axis(cfg.ell_f, 1e-2, 1e2, med),
                make_axis(cfg.rho_n, 1e-6, 1e1, var_z)};

    RidgeEvidence objective(ts.inputs, ts.outputs, ts.noise_var, cfg.lowrank_cap);
    const auto opt = gp::maximize_evidence(
        [&](const Eigen::VectorXd& p) { return objective(pow10(p[0]), pow10(p[1]), pow10(p[2])); },
        box, cfg.refine_max);

    const kernels::GaussianKernelParams kf{resolve(cfg.lambda_f, opt.log10_params[0]),
                                           resolve(cfg.ell_f, opt.log10_params[1])};
    const double rho_n = resolve(cfg.rho_n, opt.log10_params[2]);

    Eigen::MatrixXd c = kernels::kernel_matrix(kf, ts.inputs);
    c.diagonal() += ts.noise_var;
    c.diagonal().array() += rho_n;
    gp::CovarianceModel model(std::move(c));
    const Eigen::VectorXd coeffs = gp::solve_regularized(model, ts.outputs);
    const double evidence = gp::log_evidence(model, ts.outputs);

    return Stage1Result{kf,     rho_n,           evidence,
                        opt.evaluations, coeffs, rho_n * coeffs,
                        kernels::SignVector::signs_of(coeffs)};
}

Stage2Result stage2_noise(const TrainingSet& ts, const Stage1Result& s1, const TrineConfig& cfg) {
    ts.validate();
    const double beta = beta_value(cfg.beta_family);
    const double mu = resolve_mu(cfg, s1, beta);
    const double var_z = sample_variance(ts.outputs);
    const double med = kernels::median_squared_distance(ts.inputs);

    gp::HyperparamBox box;
    box.grid_points = cfg.grid_points;
    box.axes = {make_axis(cfg.lambda_w, 1e-4, 1e4, var_z),
                make_axis(cfg.ell_w, 1e-2, 1e2, med)};

    StructuredEvidence objective(ts.inputs, ts.outputs, ts.noise_var, s1.kf, s1.signs, beta, mu,
                                 cfg.lowrank_cap);
    const auto opt = gp::maximize_evidence(
        [&](const Eigen::VectorXd& p) { return objective(pow10(p[0]), pow10(p[1])); }, box,
        cfg.refine_max);

    const kernels::GaussianKernelParams kw{resolve(cfg.lambda_w, opt.log10_params[0]),
                                           resolve(cfg.ell_w, opt.log10_params[1])};

    const double beta2 = beta * beta;
    const Eigen::MatrixXd kgw =
        kernels::structured_kernel(kernels::kernel_matrix(kw, ts.inputs), s1.signs, beta);
    Eigen::MatrixXd c = kernels::kernel_matrix(s1.kf, ts.inputs);
    c += kgw;
    c.diagonal() += ts.noise_var;
    c.diagonal().array() += mu * mu * (1.0 - beta2);
    gp::CovarianceModel model(std::move(c));

    const Eigen::VectorXd mean = mu * beta * s1.signs.vec();
    const Eigen::VectorXd coeffs = gp::solve_regularized(model, ts.outputs - mean);
    Eigen::VectorXd n_hat = mean;
    n_hat.noalias() += kgw * coeffs;
    n_hat += (mu * mu * (1.0 - beta2)) * coeffs;
    const double evidence = gp::log_evidence(model, ts.outputs, mean);

    return Stage2Result{kw, mu, evidence, opt.evaluations, std::move(n_hat)};
}

Stage3Result stage3_profile(const TrainingSet& ts, const Eigen::VectorXd& targets,
                            const TrineConfig& cfg) {
    ts.validate();
    if (targets.size() != ts.size())
        throw InvalidInput("stage-3 target length must match the training set");
    if (!targets.allFinite()) throw InvalidInput("stage-3 targets contain non-finite values");

    const double var_t = sample_variance(targets);
    const double med = kernels::median_squared_distance(ts.inputs);

    gp::HyperparamBox box;
    box.grid_points = cfg.grid_points;
    box.axes = {make_axis(cfg.lambda_g, 1e-4, 1e4, var_t),
                make_axis(cfg.ell_g, 1e-2, 1e2, med),
                make_axis(cfg.rho_g, 1e-6, 1e1, var_t)};

    RidgeEvidence objective(ts.inputs, targets, Eigen::VectorXd::Zero(ts.size()),
                            cfg.lowrank_cap);
    const auto opt = gp::maximize_evidence(
        [&](const Eigen::VectorXd& p) { return objective(pow10(p[0]), pow10(p[1]), pow10(p[2])); },
        box, cfg.refine_max);

    const kernels::GaussianKernelParams kg{resolve(cfg.lambda_g, opt.log10_params[0]),
                                           resolve(cfg.ell_g, opt.log10_params[1])};
    const double rho_g = resolve(cfg.rho_g, opt.log10_params[2]);

    Eigen::MatrixXd c = kernels::kernel_matrix(kg, ts.inputs);
    c.diagonal().array() += rho_g;
    gp::CovarianceModel model(std::move(c));
    Eigen::VectorXd weights = gp::solve_regularized(model, targets);
    const double evidence = gp::log_evidence(model, targets);

    return Stage3Result{kg, rho_g, evidence, opt.evaluations, std::move(weights)};
}

SdProfile make_profile(const TrainingSet& ts, const Stage3Result& s3) {
    return SdProfile{ts.inputs, s3.weights, s3.kg, ts.delta_t, ts.kind};
}

double SdProfile::evaluate(const Eigen::VectorXd& x) const {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < centers.rows(); ++k)
        acc += weights[k] * kernels::gaussian_kernel(kg, x, centers.row(k).transpose());
    return acc;
}

Eigen::VectorXd SdProfile::evaluate_rows(const Eigen::MatrixXd& xs) const {
    Eigen::VectorXd out(xs.rows());
    for (Eigen::Index i = 0; i < xs.rows(); ++i) out[i] = evaluate(xs.row(i).transpose());
    return out;
}

double SdProfile::sd_value(const Eigen::VectorXd& x) const {
    const double g = evaluate(x);
    return kind == DynamicsKind::Continuous ? g / std::sqrt(delta_t) : g;
}

Eigen::VectorXd SdProfile::sd_values_rows(const Eigen::MatrixXd& xs) const {
    Eigen::VectorXd out = evaluate_rows(xs);
    if (kind == DynamicsKind::Continuous) out /= std::sqrt(delta_t);
    return out;
}

TrineOutput run_trine(const TrainingSet& ts, const TrineConfig& cfg) {
    const double beta = beta_value(cfg.beta_family);
    Stage1Result s1 = stage1_signs(ts, cfg);
    Stage2Result s2 = stage2_noise(ts, s1, cfg);
    const Eigen::VectorXd targets = s2.noise_estimate.cwiseAbs() / beta;
    Stage3Result s3 = stage3_profile(ts, targets, cfg);

    TrineOutput out;
    out.estimator = EstimatorKind::Trine;
    out.diagnostic = noise_strength_diagnostic(ts, s1);
    out.stage1 = std::move(s1);
    out.stage2 = std::move(s2);
    out.profile = make_profile(ts, s3);
    out.stage3 = std::move(s3);
    return out;
}

TrineOutput run_trine_unstructured(const TrainingSet& ts, const TrineConfig& cfg) {
    const double beta = beta_value(cfg.beta_family);
    Stage1Result s1 = stage1_signs(ts, cfg);
    const Eigen::VectorXd targets = s1.noise_estimate.cwiseAbs() / beta;
    Stage3Result s3 = stage3_profile(ts, targets, cfg);

    TrineOutput out;
    out.estimator = EstimatorKind::TrineUnstructured;
    out.diagnostic = noise_strength_diagnostic(ts, s1);
    out.stage1 = std::move(s1);
    out.profile = make_profile(ts, s3);
    out.stage3 = std::move(s3);
    return out;
}

TrineOutput run_oracle(const TrainingSet& ts, const Eigen::VectorXd& true_noise,
                       const TrineConfig& cfg) {
    if (true_noise.size() != ts.size())
        throw InvalidInput("true noise length must match the training set");
    const double beta = beta_value(cfg.beta_family);
    const Eigen::VectorXd targets = true_noise.cwiseAbs() / beta;
    Stage3Result s3 = stage3_profile(ts, targets, cfg);

    TrineOutput out;
    out.estimator = EstimatorKind::Oracle;
    out.profile = make_profile(ts, s3);
    out.stage3 = std::move(s3);
    return out;
}

double noise_strength_diagnostic(const TrainingSet& ts, const Stage1Result& s1) {
    if (!(s1.rho_n > 0.0)) throw InvalidInput("stage-1 ridge must be positive");
    return std::sqrt(ts.noise_var.mean()) / std::sqrt(s1.rho_n);
}

}  // namespace trine::estimator
