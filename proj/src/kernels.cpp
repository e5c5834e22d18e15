#include "trine/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "trine/rng.hpp"

namespace trine::kernels {

namespace {

void check_params(const GaussianKernelParams& p) {
    if (!(p.amplitude > 0.0) || !std::isfinite(p.amplitude))
        throw InvalidInput("kernel amplitude must be positive and finite");
    if (!(p.squared_width > 0.0) || !std::isfinite(p.squared_width))
        throw InvalidInput("kernel squared width must be positive and finite");
}

double sqdist(const Eigen::MatrixXd& a, Eigen::Index i, const Eigen::MatrixXd& b,
              Eigen::Index j) {
    double s = 0.0;
    for (Eigen::Index d = 0; d < a.cols(); ++d) {
        const double diff = a(i, d) - b(j, d);
        s += diff * diff;
    }
    return s;
}

}  // namespace

SignVector::SignVector(Eigen::VectorXd v) : v_(std::move(v)) {
    for (Eigen::Index i = 0; i < v_.size(); ++i)
        if (v_[i] != 1.0 && v_[i] != -1.0)
            throw InvalidInput("sign vector entries must be exactly +1 or -1");
}

SignVector SignVector::signs_of(const Eigen::VectorXd& raw) {
    Eigen::VectorXd s(raw.size());
    for (Eigen::Index i = 0; i < raw.size(); ++i) s[i] = raw[i] < 0.0 ? -1.0 : 1.0;
    return SignVector(std::move(s));
}

double gaussian_kernel(const GaussianKernelParams& p, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& b) {
    check_params(p);
    if (a.size() != b.size()) throw InvalidInput("kernel inputs must have equal dimension");
    double s = 0.0;
    for (Eigen::Index d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return p.amplitude * std::exp(-s / (2.0 * p.squared_width));
}

Eigen::MatrixXd kernel_matrix(const GaussianKernelParams& p, const Eigen::MatrixXd& points) {
    check_params(p);
    if (points.rows() < 1) throw InvalidInput("kernel matrix needs at least one point");
    const Eigen::Index n = points.rows();
    Eigen::MatrixXd d2(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        d2(j, j) = 0.0;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double v = sqdist(points, i, points, j);
            d2(i, j) = v;
            d2(j, i) = v;
        }
    }
    return p.amplitude * (-d2 / (2.0 * p.squared_width)).array().exp().matrix();
}

Eigen::MatrixXd kernel_cross_matrix(const GaussianKernelParams& p, const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b) {
    check_params(p);
    if (a.cols() != b.cols()) throw InvalidInput("kernel inputs must have equal dimension");
    Eigen::MatrixXd d2(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j)
        for (Eigen::Index i = 0; i < a.rows(); ++i) d2(i, j) = sqdist(a, i, b, j);
    return p.amplitude * (-d2 / (2.0 * p.squared_width)).array().exp().matrix();
}

Eigen::MatrixXd correction_matrix(double beta, Eigen::Index n) {
    const double b2 = beta * beta;
    if (!(beta > 0.0) || b2 > 1.0) throw InvalidInput("beta must lie in (0, 1]");
    if (n < 1) throw InvalidInput("correction matrix needs n >= 1");
    Eigen::MatrixXd q = Eigen::MatrixXd::Constant(n, n, b2);
    q.diagonal().setOnes();
    return q;
}

Eigen::MatrixXd structured_kernel(const Eigen::MatrixXd& base, const SignVector& signs,
                                  double beta) {
    const double b2 = beta * beta;
    if (!(beta > 0.0) || b2 > 1.0) throw InvalidInput("beta must lie in (0, 1]");
    if (base.rows() != base.cols()) throw InvalidInput("base kernel matrix must be square");
    if (signs.size() != base.rows())
        throw InvalidInput("sign vector length must match kernel size");
    const Eigen::VectorXd& s = signs.vec();
    Eigen::MatrixXd out = b2 * (s * s.transpose()).cwiseProduct(base);
    out.diagonal() = base.diagonal();  // beta^2 G_ii + (1 - beta^2) G_ii
    return out;
}

double median_squared_distance(const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    if (n < 2) throw InvalidInput("median squared distance needs at least two points");
    std::vector<double> d2;
    if (n <= 600) {
        d2.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j) d2.push_back(sqdist(points, i, points, j));
    } else {
        Rng rng(0x6D656469616EULL);  // fixed stream keeps the estimate reproducible
        const std::size_t samples = 200000;
        d2.reserve(samples);
        for (std::size_t k = 0; k < samples; ++k) {
            const auto i = static_cast<Eigen::Index>(rng.next_u64() % n);
            auto j = static_cast<Eigen::Index>(rng.next_u64() % n);
            if (i == j) j = (j + 1) % n;
            d2.push_back(sqdist(points, i, points, j));
        }
    }
    const auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
    std::nth_element(d2.begin(), mid, d2.end());
    return *mid;
}

LowRankFactor pivoted_cholesky(const Eigen::MatrixXd& points, double squared_width,
                               Eigen::Index max_rank, double rel_tol) {
    if (!(squared_width > 0.0)) throw InvalidInput("squared width must be positive");
    const Eigen::Index n = points.rows();
    max_rank = std::min(max_rank, n);
    const double inv2w = 1.0 / (2.0 * squared_width);

    // Rows of Lt are factor columns; column-major storage makes the running
    // inner products over rows of L contiguous.
    Eigen::MatrixXd lt = Eigen::MatrixXd::Zero(max_rank, n);
    Eigen::VectorXd diag = Eigen::VectorXd::Ones(n);  // unit-amplitude kernel diagonal
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;

    double tail = static_cast<double>(n);
    const double tol_abs = rel_tol * static_cast<double>(n);
    Eigen::Index rank = 0;

    for (Eigen::Index m = 0; m < max_rank; ++m) {
        Eigen::Index best = m;
        for (Eigen::Index t = m + 1; t < n; ++t)
            if (diag[perm[static_cast<std::size_t>(t)]] >
                diag[perm[static_cast<std::size_t>(best)]])
                best = t;
        std::swap(perm[static_cast<std::size_t>(m)], perm[static_cast<std::size_t>(best)]);
        const Eigen::Index pm = perm[static_cast<std::size_t>(m)];

        if (tail <= tol_abs || diag[pm] <= 0.0) break;

        const double piv = std::sqrt(diag[pm]);
        lt(m, pm) = piv;
        tail -= diag[pm];
        diag[pm] = 0.0;

        for (Eigen::Index t = m + 1; t < n; ++t) {
            const Eigen::Index i = perm[static_cast<std::size_t>(t)];
            const double e = std::exp(-sqdist(points, i, points, pm) * inv2w);
            double proj = 0.0;
            if (m > 0) proj = lt.col(i).head(m).dot(lt.col(pm).head(m));
            const double l = (e - proj) / piv;
            lt(m, i) = l;
            tail -= l * l;
            diag[i] -= l * l;
            if (diag[i] < 0.0) {
                tail -= diag[i];
                diag[i] = 0.0;
            }
        }
        if (tail < 0.0) tail = 0.0;
        rank = m + 1;
    }

    LowRankFactor out;
    out.L = lt.topRows(rank).transpose();
    out.tail = tail;
    return out;
}

}  // namespace trine::kernels
