#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "trine/errors.hpp"

namespace trine::gp {

// Dense covariance with lazy Cholesky. If plain LLT fails, a diagonal jitter
// starting at 1e-12 * trace/n is added and escalated tenfold, at most six
// times; the amount actually used is recorded in `jitter()`.
class CovarianceModel {
  public:
    explicit CovarianceModel(Eigen::MatrixXd c);

    const Eigen::MatrixXd& matrix() const { return c_; }
    Eigen::Index size() const { return c_.rows(); }

    // Zero when the unmodified matrix factorized.
    double jitter() const { return jitter_; }

    const Eigen::LLT<Eigen::MatrixXd>& factor() const;

  private:
    Eigen::MatrixXd c_;
    mutable Eigen::LLT<Eigen::MatrixXd> llt_;
    mutable bool factored_ = false;
    mutable double jitter_ = 0.0;
};

// C^{-1} z through the Cholesky factor.
Eigen::VectorXd solve_regularized(const CovarianceModel& model, const Eigen::VectorXd& z);

// log N(z; mean, C); pass an empty mean for zero.
double log_evidence(const CovarianceModel& model, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& mean = Eigen::VectorXd());

// Same density for C = diag(d) + U U^T via the matrix inversion lemma;
// costs O(n r^2) instead of O(n^3). `r` is the residual z - mean. When
// `quad_out` is given it receives r^T C^{-1} r, which callers use to bound
// the error committed by a truncated U.
double log_evidence_diag_lowrank(const Eigen::VectorXd& d, const Eigen::MatrixXd& u,
                                 const Eigen::VectorXd& r, double* quad_out = nullptr);

// Axis-aligned search box in log10 space.
struct HyperparamBox {
    struct Axis {
        double log10_lo = 0.0;
        double log10_hi = 0.0;
    };
    std::vector<Axis> axes;
    int grid_points = 7;  // per axis
};

struct OptResult {
    Eigen::VectorXd log10_params;
    double value = 0.0;
    int evaluations = 0;
};

// Maximize a log-evidence surface: full grid scan, then Nelder-Mead from the
// best cell (ties broken toward lexicographically smaller parameters, so the
// result does not depend on evaluation order), clamped to the box. Refinement
// spends at most `refine_max` extra evaluations. Non-finite objective values
// are treated as -inf; if the whole grid is non-finite the search fails.
OptResult maximize_evidence(const std::function<double(const Eigen::VectorXd&)>& objective,
                            const HyperparamBox& box, int refine_max = 200);

}  // namespace trine::gp
