#pragma once

#include <Eigen/Dense>

#include "trine/errors.hpp"

namespace trine::kernels {

// Squared-exponential kernel k(a, b) = amplitude * exp(-|a - b|^2 / (2 * squared_width)).
// The width parameter multiplies squared distances directly, i.e. it carries
// units of length^2; callers that think in length units must square first.
struct GaussianKernelParams {
    double amplitude = 1.0;
    double squared_width = 1.0;
};

// Vector with entries in {-1, +1}. Construction rejects anything else.
class SignVector {
  public:
    explicit SignVector(Eigen::VectorXd v);

    // Entrywise sign of an arbitrary vector, mapping 0 to +1.
    static SignVector signs_of(const Eigen::VectorXd& raw);

    const Eigen::VectorXd& vec() const { return v_; }
    Eigen::Index size() const { return v_.size(); }
    double operator[](Eigen::Index i) const { return v_[i]; }

  private:
    Eigen::VectorXd v_;
};

double gaussian_kernel(const GaussianKernelParams& p, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& b);

// Dense kernel matrix over rows of `points` (one point per row).
// Symmetric with diagonal exactly equal to the amplitude.
Eigen::MatrixXd kernel_matrix(const GaussianKernelParams& p, const Eigen::MatrixXd& points);

// Kernel evaluations between rows of `a` and rows of `b`.
Eigen::MatrixXd kernel_cross_matrix(const GaussianKernelParams& p, const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b);

// Moment correction for absolute-value observations of mean-zero unit noise:
// Q = beta^2 * ones + (1 - beta^2) * I, where beta = E|w|.
// Eigenvalues are 1 - beta^2 (n-1 fold) and 1 - beta^2 + n * beta^2.
Eigen::MatrixXd correction_matrix(double beta, Eigen::Index n);

// S (G o Q) S for S = diag(signs): the covariance of s_k |w_k| noise carried
// through a base kernel G. Equals beta^2 SGS + (1 - beta^2) diag(G).
// PSD whenever G is PSD and beta^2 <= 1.
Eigen::MatrixXd structured_kernel(const Eigen::MatrixXd& base, const SignVector& signs,
                                  double beta);

// Median of squared pairwise distances between rows; the default length-scale
// unit. Uses every pair up to 600 points, a fixed-seed subsample beyond that,
// so the value is reproducible.
double median_squared_distance(const Eigen::MatrixXd& points);

// Partial pivoted Cholesky of the unit-amplitude kernel matrix E over `points`:
// E ~ L L^T with trace(E - L L^T) = tail <= rel_tol * n (or rank hit max_rank).
// Columns of E are evaluated on demand; cost is O(n * rank) kernel calls plus
// O(n * rank^2) flops.
struct LowRankFactor {
    Eigen::MatrixXd L;  // n x rank
    double tail = 0.0;  // trace of the neglected remainder, >= 0
};
LowRankFactor pivoted_cholesky(const Eigen::MatrixXd& points, double squared_width,
                               Eigen::Index max_rank, double rel_tol);

}  // namespace trine::kernels
