#pragma once

// Independent dense oracles shared by the unit tests.

#include <complex>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "qsc/pauli.hpp"
#include "qsc/sparse.hpp"

namespace qsc::test {

inline std::filesystem::path fixture(const std::string &name) {
    return std::filesystem::path(QSC_FIXTURE_DIR) / (name + ".mhx");
}

inline nlohmann::json reference_energies() {
    std::ifstream in(std::filesystem::path(QSC_FIXTURE_DIR) / "reference_energies.json");
    return nlohmann::json::parse(in);
}

/// Single-qubit Pauli as a 2x2 matrix.
inline Eigen::Matrix2cd pauli_matrix(char c) {
    using C = std::complex<double>;
    Eigen::Matrix2cd m;
    switch (c) {
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, C(0, -1), C(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: m.setIdentity();
    }
    return m;
}

/// Kronecker-product construction; qubit 0 is the least significant bit, so it
/// is the rightmost factor.
inline Eigen::MatrixXcd kron_string(const PauliString &p, std::size_t n) {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Identity(1, 1);
    const std::string s = p.to_string(n);
    for (std::size_t j = 0; j < n; ++j) {
        const Eigen::Matrix2cd f = pauli_matrix(s[j]);
        Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
        for (Eigen::Index a = 0; a < 2; ++a) {
            for (Eigen::Index b = 0; b < 2; ++b) {
                next.block(a * out.rows(), b * out.cols(), out.rows(), out.cols()) = f(a, b) * out;
            }
        }
        out = next;
    }
    return out;
}

inline Eigen::MatrixXcd kron_sum(const PauliSum &ps) {
    const auto n = ps.n_qubits();
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto &t : ps.terms()) {
        out += t.coeff * kron_string(t.string, n);
    }
    return out;
}

/// Dense annihilation operator of mode p with the JW string on lower modes,
/// built from occupation-number bit manipulation.
inline Eigen::MatrixXcd dense_annihilator(std::size_t p, std::size_t n) {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
        if (((b >> p) & 1U) == 0) {
            continue;
        }
        const int parity = std::popcount(b & ((std::uint64_t{1} << p) - 1));
        a(static_cast<Eigen::Index>(b ^ (std::uint64_t{1} << p)), static_cast<Eigen::Index>(b)) =
            parity % 2 ? -1.0 : 1.0;
    }
    return a;
}

/// exp(-i t H) through a dense hermitian eigendecomposition.
inline Eigen::MatrixXcd dense_propagator(const Eigen::MatrixXcd &h, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXcd phase =
        (es.eigenvalues().cast<std::complex<double>>() * std::complex<double>(0, -t)).array().exp();
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

inline Eigen::VectorXcd to_eigen(const QuantumState &psi) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(psi.dim()));
    for (std::size_t i = 0; i < psi.dim(); ++i) {
        v(static_cast<Eigen::Index>(i)) = psi[i];
    }
    return v;
}

/// Random hermitian Pauli sum with `n_terms` strings and real coefficients.
inline PauliSum random_pauli_sum(std::size_t n, std::size_t n_terms, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    std::vector<PauliTerm> terms;
    const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
    for (std::size_t k = 0; k < n_terms; ++k) {
        terms.push_back({coeff(rng), {rng() & mask, rng() & mask}});
    }
    return PauliSum(n, std::move(terms));
}

} // namespace qsc::test
