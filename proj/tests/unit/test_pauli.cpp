#include <gtest/gtest.h>

#include "qsc/dynamics.hpp"
#include "qsc/molham.hpp"
#include "qsc/pauli.hpp"
#include "qsc/spectrum.hpp"
#include "test_support.hpp"

using namespace qsc;

namespace {

Eigen::MatrixXcd dense_of(const PauliSum &ps) { return to_dense(to_sparse_matrix(ps, ps.n_qubits())); }

/// Second-quantized operator assembled from dense ladder matrices.
Eigen::MatrixXcd dense_fermion_operator(const FermionCoeffs &fc) {
    const auto n = fc.n_spin_orbitals;
    std::vector<Eigen::MatrixXcd> a;
    for (std::size_t p = 0; p < n; ++p) {
        a.push_back(test::dense_annihilator(p, n));
    }
    const auto dim = a[0].rows();
    Eigen::MatrixXcd h = fc.constant * Eigen::MatrixXcd::Identity(dim, dim);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            const double v = fc.one_body(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
            if (v != 0.0) {
                h += v * a[p].adjoint() * a[q];
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t s = 0; s < n; ++s) {
                    const double v = fc.g(p, q, r, s);
                    if (v != 0.0) {
                        h += 0.5 * v * a[p].adjoint() * a[r].adjoint() * a[s] * a[q];
                    }
                }
            }
        }
    }
    return h;
}

/// Number of Pauli strings with a nonzero trace overlap, by brute force.
std::size_t pauli_support(const Eigen::MatrixXcd &m, std::size_t n) {
    std::size_t count = 0;
    const std::uint64_t full = std::uint64_t{1} << n;
    for (std::uint64_t x = 0; x < full; ++x) {
        for (std::uint64_t z = 0; z < full; ++z) {
            const auto p = test::kron_string({x, z}, n);
            if (std::abs((p * m).trace()) / static_cast<double>(full) > 1e-12) {
                ++count;
            }
        }
    }
    return count;
}

} // namespace

TEST(Pauli, ParseAndPrint) {
    const auto p = PauliString::from_string("XIYZ");
    EXPECT_EQ(p.to_string(4), "XIYZ");
    EXPECT_EQ(p.n_y(), 1);
    EXPECT_THROW((void)PauliString::from_string("XA"), DataError);
}

TEST(Pauli, NumberOperatorSingleMode) {
    FermionCoeffs fc(1);
    fc.one_body(0, 0) = 1.0;
    const auto ps = jordan_wigner(fc);
    ASSERT_EQ(ps.size(), 2u);
    EXPECT_NEAR(std::abs(ps.coefficient(PauliString{}) - cplx(0.5)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(ps.coefficient(PauliString::from_string("Z")) - cplx(-0.5)), 0.0, 1e-15);
}

TEST(Pauli, ZeroCoefficientsGiveConstantOnly) {
    FermionCoeffs fc(4);
    fc.constant = 0.25;
    const auto ps = jordan_wigner(fc);
    ASSERT_EQ(ps.size(), 1u);
    EXPECT_TRUE(ps.terms()[0].string.is_identity());
}

TEST(Pauli, H2HasFifteenTerms) {
    const auto ints = parse_integral_file(test::fixture("h2"));
    const auto fc = build_core_hamiltonian(ints);
    const auto ps = jordan_wigner(fc);
    EXPECT_EQ(ps.size(), pauli_support(dense_fermion_operator(fc), 4));
    EXPECT_EQ(ps.size(), 15u);
    EXPECT_TRUE(ps.is_hermitian());
}

TEST(Pauli, SingleQubitMatrices) {
    const auto x = dense_of(PauliSum(1, {{1.0, PauliString::from_string("X")}}));
    Eigen::Matrix2cd expect_x;
    expect_x << 0, 1, 1, 0;
    EXPECT_EQ((x - expect_x).norm(), 0.0);
    const auto zz = dense_of(PauliSum(2, {{1.0, PauliString::from_string("ZZ")}}));
    EXPECT_EQ((zz - Eigen::Vector4cd(1, -1, -1, 1).asDiagonal().toDenseMatrix()).norm(), 0.0);
}

TEST(Pauli, SparseMatchesKroneckerOracle) {
    const auto ints = parse_integral_file(test::fixture("h2"));
    const auto ps = jordan_wigner(build_core_hamiltonian(ints));
    EXPECT_LE((dense_of(ps) - test::kron_sum(ps)).cwiseAbs().maxCoeff(), 1e-14);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto rnd = test::random_pauli_sum(5, 30, seed);
        EXPECT_LE((dense_of(rnd) - test::kron_sum(rnd)).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Pauli, JordanWignerMatchesDenseFermionAlgebra) {
    for (const char *name : {"h2", "h4_square_r1.2"}) {
        const auto ints = parse_integral_file(test::fixture(name));
        const auto fc = build_core_hamiltonian(ints);
        const auto jw = dense_of(jordan_wigner(fc));
        EXPECT_LE((jw - dense_fermion_operator(fc)).cwiseAbs().maxCoeff(), 1e-12) << name;
    }
}

TEST(Pauli, CanonicalAnticommutators) {
    for (std::size_t n = 1; n <= 3; ++n) {
        const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n);
        const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(dim, dim);
        for (std::size_t p = 0; p < n; ++p) {
            const auto ap = dense_of(jordan_wigner_product(n, {{p, false}}));
            const auto apd = dense_of(jordan_wigner_product(n, {{p, true}}));
            EXPECT_LE((ap.adjoint() - apd).cwiseAbs().maxCoeff(), 1e-12);
            for (std::size_t q = 0; q < n; ++q) {
                const auto aq = dense_of(jordan_wigner_product(n, {{q, false}}));
                const auto aqd = dense_of(jordan_wigner_product(n, {{q, true}}));
                const Eigen::MatrixXcd mixed = ap * aqd + aqd * ap;
                const Eigen::MatrixXcd expected = p == q ? id : Eigen::MatrixXcd::Zero(dim, dim);
                EXPECT_LE((mixed - expected).cwiseAbs().maxCoeff(), 1e-12) << n << " " << p << " " << q;
                EXPECT_LE((ap * aq + aq * ap).cwiseAbs().maxCoeff(), 1e-12);
                EXPECT_LE((apd * aqd + aqd * apd).cwiseAbs().maxCoeff(), 1e-12);
            }
            // Agreement with the bit-manipulation ladder oracle.
            EXPECT_LE((ap - test::dense_annihilator(p, n)).cwiseAbs().maxCoeff(), 1e-12);
        }
    }
}

TEST(Pauli, SumAlgebra) {
    PauliSum a(2, {{1.0, PauliString::from_string("XI")}, {2.0, PauliString::from_string("ZZ")}});
    PauliSum b(2, {{-1.0, PauliString::from_string("XI")}});
    a += b;
    EXPECT_EQ(a.size(), 1u);
    a *= cplx(0.5);
    EXPECT_NEAR(a.coefficient(PauliString::from_string("ZZ")).real(), 1.0, 1e-15);
    EXPECT_THROW(a += PauliSum(3), DimensionError);
}

TEST(Pauli, NonHermitianCoefficientsRejected) {
    FermionCoeffs fc(2);
    fc.one_body(0, 1) = 1.0;
    EXPECT_THROW((void)jordan_wigner(fc), DataError);
}
