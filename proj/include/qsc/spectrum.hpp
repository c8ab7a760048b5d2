#pragma once

// Lowest eigenpair of a sparse hermitian operator (restarted Lanczos), with an
// optional restriction to a particle-number / spin-projection sector.

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "qsc/error.hpp"
#include "qsc/sparse.hpp"

namespace qsc {

/// Symmetry sector of an interleaved spin-orbital register: even qubits are
/// alpha, odd qubits are beta. `two_sz` is n_alpha - n_beta.
struct Sector {
    std::size_t n_particles = 0;
    int two_sz = 0;

    [[nodiscard]] bool contains(std::uint64_t basis_index) const noexcept {
        constexpr std::uint64_t even = 0x5555555555555555ULL;
        const int n_alpha = std::popcount(basis_index & even);
        const int n_beta = std::popcount(basis_index & ~even);
        return static_cast<std::size_t>(n_alpha + n_beta) == n_particles && n_alpha - n_beta == two_sz;
    }
};

struct EigenPair {
    double energy = 0.0;
    QuantumState state;
    double residual = 0.0;
};

struct LanczosOptions {
    double tolerance = 1e-9;      // on ||H v - E v||
    std::size_t basis_size = 80;  // Krylov dimension per restart
    std::size_t max_restarts = 200;
    std::uint64_t seed = 12345;
};

/// Lowest eigenpair of a hermitian operator. When a sector is given the
/// iteration is confined to it (the operator must commute with N and S_z).
template <class Scalar>
EigenPair exact_ground_state(const SparseMatrix<Scalar> &op, std::optional<Sector> sector = std::nullopt,
                             const LanczosOptions &opts = {}) {
    if (!op.hermitian || op.hermiticity_defect() > 1e-12) {
        throw DataError("exact_ground_state: operator is not hermitian");
    }
    const std::size_t dim = op.dim;
    const auto n_qubits = static_cast<std::size_t>(std::countr_zero(dim));

    std::vector<char> mask(dim, 1);
    if (sector) {
        std::size_t count = 0;
        for (std::size_t i = 0; i < dim; ++i) {
            mask[i] = sector->contains(i) ? 1 : 0;
            count += mask[i];
        }
        if (count == 0) {
            throw DataError("exact_ground_state: requested sector is empty");
        }
    }
    auto project = [&](StateVector &v) {
        if (sector) {
            for (std::size_t i = 0; i < dim; ++i) {
                if (!mask[i]) {
                    v[i] = 0.0;
                }
            }
        }
    };

    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> normal;
    StateVector start(dim);
    for (auto &a : start) {
        a = {normal(rng), 0.0};
    }
    project(start);

    const std::size_t m_max = std::min(opts.basis_size, dim);
    double last_residual = std::numeric_limits<double>::infinity();
    for (std::size_t restart = 0; restart <= opts.max_restarts; ++restart) {
        std::vector<StateVector> basis;
        std::vector<double> alpha, beta;
        StateVector v = start;
        double nv = norm2(v);
        for (auto &a : v) {
            a /= nv;
        }
        StateVector w(dim);
        Eigen::VectorXd ritz_vec;
        double ritz = 0.0;
        for (std::size_t j = 0; j < m_max; ++j) {
            basis.push_back(v);
            op.apply(basis.back(), w);
            project(w);
            const double a = inner(basis.back(), w).real();
            alpha.push_back(a);
            // Full reorthogonalization, twice.
            for (int pass = 0; pass < 2; ++pass) {
                for (const auto &b : basis) {
                    const cplx c = inner(b, w);
                    for (std::size_t i = 0; i < dim; ++i) {
                        w[i] -= c * b[i];
                    }
                }
            }
            const double b = norm2(w);

            const auto m = static_cast<Eigen::Index>(alpha.size());
            Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), m);
            Eigen::VectorXd sub = m > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), m - 1))
                                        : Eigen::VectorXd();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
            es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
            ritz = es.eigenvalues()(0);
            ritz_vec = es.eigenvectors().col(0);
            const double est = b * std::abs(ritz_vec(m - 1));
            if (est <= 0.1 * opts.tolerance || b < 1e-14 || j + 1 == m_max) {
                break;
            }
            beta.push_back(b);
            for (std::size_t i = 0; i < dim; ++i) {
                v[i] = w[i] / b;
            }
        }
        StateVector x(dim);
        for (std::size_t k = 0; k < basis.size(); ++k) {
            const double c = ritz_vec(static_cast<Eigen::Index>(k));
            for (std::size_t i = 0; i < dim; ++i) {
                x[i] += c * basis[k][i];
            }
        }
        const double nx = norm2(x);
        for (auto &a : x) {
            a /= nx;
        }
        StateVector hx = op * std::span<const cplx>(x);
        const double e = inner(x, hx).real();
        double res = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            res += std::norm(hx[i] - e * x[i]);
        }
        res = std::sqrt(res);
        last_residual = res;
        if (res <= opts.tolerance) {
            return {e, QuantumState(n_qubits, std::move(x)), res};
        }
        start = std::move(x);
    }
    throw ConvergenceError("exact_ground_state: Lanczos did not converge", last_residual);
}

/// Dense copy, for test oracles on small registers.
template <class Scalar>
Eigen::MatrixXcd to_dense(const SparseMatrix<Scalar> &op) {
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(op.dim), static_cast<Eigen::Index>(op.dim));
    for (std::size_t r = 0; r < op.dim; ++r) {
        for (std::size_t k = op.row_ptr[r]; k < op.row_ptr[r + 1]; ++k) {
            d(static_cast<Eigen::Index>(r), op.cols[k]) = op.values[k];
        }
    }
    return d;
}

} // namespace qsc
