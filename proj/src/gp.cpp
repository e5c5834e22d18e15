#include "trine/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace trine::gp {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

CovarianceModel::CovarianceModel(Eigen::MatrixXd c) : c_(std::move(c)) {
    if (c_.rows() != c_.cols()) throw InvalidInput("covariance matrix must be square");
    if (c_.rows() == 0) throw InvalidInput("covariance matrix must be non-empty");
}

const Eigen::LLT<Eigen::MatrixXd>& CovarianceModel::factor() const {
    if (factored_) return llt_;
    llt_.compute(c_);
    if (llt_.info() == Eigen::Success) {
        jitter_ = 0.0;
        factored_ = true;
        return llt_;
    }
    // Jitter must stay positive even when the trace is negative or zero.
    const double unit = std::abs(c_.trace()) / static_cast<double>(c_.rows());
    double jitter = 1e-12 * std::max(unit, 1.0);
    for (int attempt = 0; attempt < 6; ++attempt, jitter *= 10.0) {
        Eigen::MatrixXd bumped = c_;
        bumped.diagonal().array() += jitter;
        llt_.compute(bumped);
        if (llt_.info() == Eigen::Success) {
            jitter_ = jitter;
            factored_ = true;
            return llt_;
        }
    }
    throw NumericalFailure("covariance factorization failed after jitter escalation",
                           jitter / 10.0);
}

Eigen::VectorXd solve_regularized(const CovarianceModel& model, const Eigen::VectorXd& z) {
    if (z.size() != model.size())
        throw InvalidInput("right-hand side length must match covariance size");
    return model.factor().solve(z);
}

double log_evidence(const CovarianceModel& model, const Eigen::VectorXd& z,
                    const Eigen::VectorXd& mean) {
    if (z.size() != model.size())
        throw InvalidInput("observation length must match covariance size");
    Eigen::VectorXd r = z;
    if (mean.size() != 0) {
        if (mean.size() != z.size()) throw InvalidInput("mean length must match observations");
        r -= mean;
    }
    const auto& llt = model.factor();
    const double quad = r.dot(llt.solve(r));
    const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    return -0.5 * quad - 0.5 * logdet - 0.5 * kLog2Pi * static_cast<double>(z.size());
}

double log_evidence_diag_lowrank(const Eigen::VectorXd& d, const Eigen::MatrixXd& u,
                                 const Eigen::VectorXd& r, double* quad_out) {
    const Eigen::Index n = d.size();
    if (u.rows() != n || r.size() != n)
        throw InvalidInput("low-rank evidence inputs have mismatched sizes");
    if ((d.array() <= 0.0).any())
        throw NumericalFailure("diagonal part must be positive for the low-rank path");

    const Eigen::ArrayXd dinv = d.array().inverse();
    const Eigen::VectorXd dinv_r = (r.array() * dinv).matrix();
    const double base_quad = r.dot(dinv_r);
    const double base_logdet = d.array().log().sum();

    const Eigen::Index rank = u.cols();
    if (rank == 0) {
        if (quad_out) *quad_out = base_quad;
        return -0.5 * base_quad - 0.5 * base_logdet - 0.5 * kLog2Pi * static_cast<double>(n);
    }

    Eigen::MatrixXd w = Eigen::MatrixXd::Identity(rank, rank);
    w.noalias() += u.transpose() * dinv.matrix().asDiagonal() * u;
    Eigen::LLT<Eigen::MatrixXd> llt(w);
    if (llt.info() != Eigen::Success)
        throw NumericalFailure("capacitance factorization failed in low-rank evidence");

    const Eigen::VectorXd ut_dinv_r = u.transpose() * dinv_r;
    const double quad = base_quad - ut_dinv_r.dot(llt.solve(ut_dinv_r));
    const double logdet = base_logdet + 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    if (quad_out) *quad_out = quad;
    return -0.5 * quad - 0.5 * logdet - 0.5 * kLog2Pi * static_cast<double>(n);
}

namespace {

// Lexicographic order on parameter vectors; used to break value ties so the
// scan result is independent of evaluation order.
bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return true;
        if (a[i] > b[i]) return false;
    }
    return false;
}

double safe_eval(const std::function<double(const Eigen::VectorXd&)>& objective,
                 const Eigen::VectorXd& x) {
    const double v = objective(x);
    return std::isfinite(v) ? v : kNegInf;
}

}  // namespace

OptResult maximize_evidence(const std::function<double(const Eigen::VectorXd&)>& objective,
                            const HyperparamBox& box, int refine_max) {
    const auto dims = static_cast<Eigen::Index>(box.axes.size());
    if (dims == 0) throw InvalidInput("hyperparameter box needs at least one axis");
    if (box.grid_points < 1) throw InvalidInput("grid needs at least one point per axis");
    for (const auto& ax : box.axes)
        if (!(ax.log10_lo <= ax.log10_hi) || !std::isfinite(ax.log10_lo) ||
            !std::isfinite(ax.log10_hi))
            throw InvalidInput("box axis bounds must be finite with lo <= hi");

    std::vector<int> npts(static_cast<std::size_t>(dims));
    for (Eigen::Index a = 0; a < dims; ++a)
        npts[static_cast<std::size_t>(a)] =
            box.axes[static_cast<std::size_t>(a)].log10_lo ==
                    box.axes[static_cast<std::size_t>(a)].log10_hi
                ? 1
                : box.grid_points;

    OptResult best;
    best.value = kNegInf;
    int evals = 0;

    // Full grid scan, last axis fastest.
    std::vector<int> idx(static_cast<std::size_t>(dims), 0);
    Eigen::VectorXd x(dims);
    while (true) {
        for (Eigen::Index a = 0; a < dims; ++a) {
            const auto& ax = box.axes[static_cast<std::size_t>(a)];
            const int g = npts[static_cast<std::size_t>(a)];
            x[a] = g == 1 ? ax.log10_lo
                          : ax.log10_lo + (ax.log10_hi - ax.log10_lo) * idx[static_cast<std::size_t>(a)] /
                                              (g - 1);
        }
        const double v = safe_eval(objective, x);
        ++evals;
        if (v > best.value || (v == best.value && best.log10_params.size() != 0 &&
                               lex_less(x, best.log10_params))) {
            best.value = v;
            best.log10_params = x;
        }
        if (best.log10_params.size() == 0) best.log10_params = x;

        Eigen::Index a = dims - 1;
        while (a >= 0 && ++idx[static_cast<std::size_t>(a)] >=
                             npts[static_cast<std::size_t>(a)]) {
            idx[static_cast<std::size_t>(a)] = 0;
            --a;
        }
        if (a < 0) break;
    }

    if (best.value == kNegInf)
        throw OptimizationFailure("objective is non-finite on the entire grid");

    // Nelder-Mead over the non-degenerate axes, seeded at the grid optimum.
    std::vector<Eigen::Index> act;
    for (Eigen::Index a = 0; a < dims; ++a)
        if (npts[static_cast<std::size_t>(a)] > 1) act.push_back(a);
    const auto m = static_cast<Eigen::Index>(act.size());

    if (m > 0 && refine_max > 0) {
        auto clamp_full = [&](Eigen::VectorXd& full) {
            for (Eigen::Index a = 0; a < dims; ++a) {
                const auto& ax = box.axes[static_cast<std::size_t>(a)];
                full[a] = std::clamp(full[a], ax.log10_lo, ax.log10_hi);
            }
        };
        auto expand_pt = [&](const Eigen::VectorXd& sub) {
            Eigen::VectorXd full = best.log10_params;
            for (Eigen::Index k = 0; k < m; ++k) full[act[static_cast<std::size_t>(k)]] = sub[k];
            clamp_full(full);
            return full;
        };

        int budget = refine_max;
        auto eval_sub = [&](const Eigen::VectorXd& sub) {
            const Eigen::VectorXd full = expand_pt(sub);
            const double v = safe_eval(objective, full);
            ++evals;
            --budget;
            if (v > best.value || (v == best.value && lex_less(full, best.log10_params))) {
                best.value = v;
                best.log10_params = full;
            }
            return v;
        };

        Eigen::VectorXd x0(m);
        for (Eigen::Index k = 0; k < m; ++k) x0[k] = best.log10_params[act[static_cast<std::size_t>(k)]];

        std::vector<Eigen::VectorXd> simplex;
        std::vector<double> fval;
        simplex.push_back(x0);
        fval.push_back(best.value);
        for (Eigen::Index k = 0; k < m && budget > 0; ++k) {
            const auto& ax = box.axes[static_cast<std::size_t>(act[static_cast<std::size_t>(k)])];
            const double span = ax.log10_hi - ax.log10_lo;
            const double step = 0.5 * span / (box.grid_points - 1);
            Eigen::VectorXd xk = x0;
            xk[k] += (x0[k] + step <= ax.log10_hi) ? step : -step;
            simplex.push_back(xk);
            fval.push_back(eval_sub(xk));
        }

        const auto nv = static_cast<Eigen::Index>(simplex.size());
        while (budget > 0 && nv == m + 1) {
            std::vector<std::size_t> ord(simplex.size());
            for (std::size_t i = 0; i < ord.size(); ++i) ord[i] = i;
            std::sort(ord.begin(), ord.end(),
                      [&](std::size_t a, std::size_t b) { return fval[a] > fval[b]; });
            const double fbest = fval[ord.front()];
            const double fworst = fval[ord.back()];
            if (std::isfinite(fworst) && fbest - fworst <= 1e-9 * (1.0 + std::abs(fbest))) break;

            double diam = 0.0;
            for (std::size_t i = 1; i < ord.size(); ++i)
                diam = std::max(diam, (simplex[ord[i]] - simplex[ord[0]]).lpNorm<Eigen::Infinity>());
            if (diam <= 1e-5) break;

            Eigen::VectorXd centroid = Eigen::VectorXd::Zero(m);
            for (std::size_t i = 0; i + 1 < ord.size(); ++i) centroid += simplex[ord[i]];
            centroid /= static_cast<double>(m);
            const std::size_t iw = ord.back();

            Eigen::VectorXd xr = centroid + (centroid - simplex[iw]);
            const double fr = eval_sub(xr);
            if (fr > fval[ord[0]]) {
                if (budget <= 0) break;
                Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[iw]);
                const double fe = eval_sub(xe);
                if (fe > fr) {
                    simplex[iw] = xe;
                    fval[iw] = fe;
                } else {
                    simplex[iw] = xr;
                    fval[iw] = fr;
                }
            } else if (fr > fval[ord[ord.size() - 2]]) {
                simplex[iw] = xr;
                fval[iw] = fr;
            } else {
                if (budget <= 0) break;
                const bool outside = fr > fval[iw];
                Eigen::VectorXd xc = outside ? centroid + 0.5 * (xr - centroid)
                                             : centroid + 0.5 * (simplex[iw] - centroid);
                const double fc = eval_sub(xc);
                if (fc > (outside ? fr : fval[iw])) {
                    simplex[iw] = xc;
                    fval[iw] = fc;
                } else {
                    for (std::size_t i = 1; i < ord.size() && budget > 0; ++i) {
                        simplex[ord[i]] = simplex[ord[0]] + 0.5 * (simplex[ord[i]] - simplex[ord[0]]);
                        fval[ord[i]] = eval_sub(simplex[ord[i]]);
                    }
                }
            }
        }
    }

    best.evaluations = evals;
    return best;
}

}  // namespace trine::gp
