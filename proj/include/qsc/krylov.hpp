#pragma once

// Krylov-subspace action of the matrix exponential on a vector.
//
// Both routines take the operator as a callable `apply(in, out)` computing
// out = M in, so they work on sparse matrices, linear combinations of them and
// the 2x2 block operators used for parameter derivatives. The subspace is
// grown until the a posteriori error estimate meets the tolerance; if the
// dimension cap is reached first the remaining time is split into substeps
// (the Krylov basis does not depend on the step, so shrinking is free).

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "qsc/error.hpp"
#include "qsc/sparse.hpp"

namespace qsc {

struct KrylovOptions {
    double tolerance = 1e-12;        // target ||result - exact||_2 over the whole interval
    std::size_t max_dimension = 40;  // subspace cap per substep
    std::size_t max_substeps = 100000;
};

struct KrylovStats {
    std::size_t matvecs = 0;
    std::size_t substeps = 0;
    double error_estimate = 0.0;
};

namespace detail {

inline void axpy(cplx a, std::span<const cplx> x, std::span<cplx> y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] += a * x[i];
    }
}

} // namespace detail

/// exp(-i t H) v for hermitian H (Lanczos). `apply` computes H x.
template <class Apply>
StateVector expmv_hermitian(Apply &&apply, double t, std::span<const cplx> v, const KrylovOptions &opts = {},
                            KrylovStats *stats = nullptr) {
    const std::size_t dim = v.size();
    StateVector cur(v.begin(), v.end());
    if (t == 0.0) {
        return cur;
    }
    const double t_total = std::abs(t);
    const double sign = t > 0 ? 1.0 : -1.0;
    double t_done = 0.0;
    double tau = t_total;
    double err_total = 0.0;
    std::size_t substeps = 0, matvecs = 0;

    std::vector<StateVector> basis;
    StateVector w(dim);
    while (t_done < t_total) {
        if (++substeps > opts.max_substeps) {
            throw ConvergenceError("expmv_hermitian: substep limit reached", err_total);
        }
        tau = std::min(tau, t_total - t_done);
        const double beta0 = norm2(cur);
        if (beta0 == 0.0) {
            return cur;
        }
        basis.clear();
        basis.emplace_back(cur);
        for (auto &a : basis.back()) {
            a /= beta0;
        }
        std::vector<double> alpha, beta;
        Eigen::VectorXcd coeffs;
        bool accepted = false;
        double err = 0.0;
        for (std::size_t j = 0; j < opts.max_dimension; ++j) {
            apply(std::span<const cplx>(basis[j]), std::span<cplx>(w));
            ++matvecs;
            alpha.push_back(inner(basis[j], w).real());
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto &b : basis) {
                    const cplx c = inner(b, w);
                    detail::axpy(-c, b, w);
                }
            }
            const double b = norm2(w);
            const auto m = static_cast<Eigen::Index>(alpha.size());
            Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
            Eigen::VectorXd sub =
                m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1)) : Eigen::VectorXd();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            const Eigen::MatrixXd &q = es.eigenvectors();
            const Eigen::VectorXd &lam = es.eigenvalues();
            const bool breakdown = b <= 1e-13 * std::max(1.0, lam.cwiseAbs().maxCoeff());
            const bool last = breakdown || j + 1 == opts.max_dimension || j + 1 == dim;
            // Try the current step; at the cap shrink it until the estimate is met.
            for (;;) {
                Eigen::VectorXcd phase(m);
                for (Eigen::Index k = 0; k < m; ++k) {
                    phase(k) = std::exp(cplx(0.0, -sign * tau * lam(k))) * q(0, k);
                }
                coeffs = q.cast<cplx>() * phase;
                err = breakdown ? 0.0 : beta0 * b * std::abs(coeffs(m - 1));
                const double allowed = opts.tolerance * tau / t_total;
                if (err <= allowed) {
                    accepted = true;
                    break;
                }
                if (!last) {
                    break;
                }
                tau *= 0.5;
                if (tau < 1e-14 * t_total) {
                    throw ConvergenceError("expmv_hermitian: step size underflow", err);
                }
            }
            if (accepted) {
                break;
            }
            beta.push_back(b);
            basis.emplace_back(w);
            for (auto &a : basis.back()) {
                a /= b;
            }
        }
        if (!accepted) {
            throw ConvergenceError("expmv_hermitian: tolerance not met within the subspace cap", err);
        }
        std::fill(cur.begin(), cur.end(), cplx{});
        for (std::size_t k = 0; k < static_cast<std::size_t>(coeffs.size()); ++k) {
            detail::axpy(beta0 * coeffs(static_cast<Eigen::Index>(k)), basis[k], cur);
        }
        t_done += tau;
        err_total += err;
        // Let the next substep try a longer interval again.
        tau = std::min(2.0 * tau, t_total);
    }
    if (stats) {
        stats->matvecs += matvecs;
        stats->substeps += substeps;
        stats->error_estimate += err_total;
    }
    return cur;
}

/// exp(A) v for a general operator A (Arnoldi). `apply` computes A x.
template <class Apply>
StateVector expmv_general(Apply &&apply, std::span<const cplx> v, const KrylovOptions &opts = {},
                          KrylovStats *stats = nullptr) {
    const std::size_t dim = v.size();
    StateVector cur(v.begin(), v.end());
    double s_done = 0.0; // fraction of the unit interval already applied
    double tau = 1.0;
    double err_total = 0.0;
    std::size_t substeps = 0, matvecs = 0;
    std::vector<StateVector> basis;
    StateVector w(dim);
    while (s_done < 1.0) {
        if (++substeps > opts.max_substeps) {
            throw ConvergenceError("expmv_general: substep limit reached", err_total);
        }
        tau = std::min(tau, 1.0 - s_done);
        const double beta0 = norm2(cur);
        if (beta0 == 0.0) {
            return cur;
        }
        basis.clear();
        basis.emplace_back(cur);
        for (auto &a : basis.back()) {
            a /= beta0;
        }
        const auto cap = static_cast<Eigen::Index>(opts.max_dimension);
        Eigen::MatrixXcd hess = Eigen::MatrixXcd::Zero(cap + 1, cap);
        Eigen::VectorXcd coeffs;
        bool accepted = false;
        double err = 0.0;
        for (Eigen::Index j = 0; j < cap; ++j) {
            apply(std::span<const cplx>(basis[static_cast<std::size_t>(j)]), std::span<cplx>(w));
            ++matvecs;
            for (int pass = 0; pass < 2; ++pass) {
                for (Eigen::Index i = 0; i <= j; ++i) {
                    const cplx c = inner(basis[static_cast<std::size_t>(i)], w);
                    hess(i, j) += c;
                    detail::axpy(-c, basis[static_cast<std::size_t>(i)], w);
                }
            }
            const double b = norm2(w);
            hess(j + 1, j) = b;
            const Eigen::Index m = j + 1;
            const double scale = std::max(1.0, hess.topLeftCorner(m, m).cwiseAbs().maxCoeff());
            const bool breakdown = b <= 1e-13 * scale;
            const bool last = breakdown || j + 1 == cap || static_cast<std::size_t>(j + 1) == dim;
            for (;;) {
                const Eigen::MatrixXcd e = (tau * hess.topLeftCorner(m, m)).exp();
                coeffs = e.col(0);
                err = breakdown ? 0.0 : beta0 * b * std::abs(coeffs(m - 1));
                if (err <= opts.tolerance * tau) {
                    accepted = true;
                    break;
                }
                if (!last) {
                    break;
                }
                tau *= 0.5;
                if (tau < 1e-14) {
                    throw ConvergenceError("expmv_general: step size underflow", err);
                }
            }
            if (accepted) {
                break;
            }
            basis.emplace_back(w);
            for (auto &a : basis.back()) {
                a /= b;
            }
        }
        if (!accepted) {
            throw ConvergenceError("expmv_general: tolerance not met within the subspace cap", err);
        }
        std::fill(cur.begin(), cur.end(), cplx{});
        for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
            detail::axpy(beta0 * coeffs(k), basis[static_cast<std::size_t>(k)], cur);
        }
        s_done += tau;
        err_total += err;
        tau = std::min(2.0 * tau, 1.0);
    }
    if (stats) {
        stats->matvecs += matvecs;
        stats->substeps += substeps;
        stats->error_estimate += err_total;
    }
    return cur;
}

/// exp(-i dt H) psi for a sparse hermitian operator. The result norm is checked.
template <class Scalar>
QuantumState expmv(const SparseMatrix<Scalar> &op, double dt, const QuantumState &psi, double tol = 1e-12) {
    if (!op.hermitian) {
        throw DataError("expmv: operator is not hermitian");
    }
    if (op.dim != psi.dim()) {
        throw DimensionError("expmv: operator and state dimensions differ");
    }
    KrylovOptions opts;
    opts.tolerance = tol;
    auto out = expmv_hermitian([&op](std::span<const cplx> x, std::span<cplx> y) { op.apply(x, y); }, dt,
                               psi.span(), opts);
    return QuantumState(psi.n_qubits(), std::move(out)); // re-checks the norm
}

} // namespace qsc
