#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "qsc/dynamics.hpp"
#include "qsc/krylov.hpp"
#include "qsc/molham.hpp"
#include "qsc/sector.hpp"
#include "qsc/spectrum.hpp"
#include "test_support.hpp"

using namespace qsc;

namespace {

SparseOperator op_of(const std::string &pauli, double coeff = 1.0) {
    const auto p = PauliString::from_string(pauli);
    return to_sparse_matrix(PauliSum(pauli.size(), {{coeff, p}}), pauli.size());
}

QuantumState random_state(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    StateVector v(std::size_t{1} << n);
    for (auto &a : v) {
        a = {g(rng), g(rng)};
    }
    return QuantumState::normalized(n, std::move(v));
}

} // namespace

TEST(Spectrum, DiagonalGroundState) {
    const auto h = op_of("Z", -0.5);
    const auto gs = exact_ground_state(h);
    EXPECT_NEAR(gs.energy, -0.5, 1e-12);
}

TEST(Spectrum, ExpectationBasics) {
    const auto id = to_sparse_matrix(PauliSum(2, {{1.0, PauliString{}}}), 2);
    EXPECT_NEAR(expectation(id, random_state(2, 3)), 1.0, 1e-14);
    EXPECT_NEAR(expectation(op_of("Z"), QuantumState::basis(1, 0)), 1.0, 1e-15);
}

TEST(Spectrum, LanczosMatchesDenseDiagonalization) {
    for (const char *name : {"h2", "h4_square_r1.2", "h4_square_r2.4"}) {
        const auto ints = parse_integral_file(test::fixture(name));
        const auto h = fermion_to_sparse(build_core_hamiltonian(ints));
        const Sector sector{ints.n_electrons, 0};
        const SectorBasis basis(ints.n_qubits(), sector);
        const Eigen::MatrixXcd block = basis.restrict(h);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block);
        const auto gs = exact_ground_state(h, sector);
        EXPECT_NEAR(gs.energy, es.eigenvalues()(0), 1e-9) << name;
        EXPECT_LT(gs.energy, ints.hf_energy) << name;
    }
}

TEST(Spectrum, NonHermitianRejected) {
    PauliSum ps(1, {{cplx(0, 1), PauliString::from_string("X")}});
    EXPECT_THROW((void)exact_ground_state(to_sparse_matrix(ps, 1)), DataError);
}

TEST(Krylov, DiagonalPhase) {
    const auto out = expmv(op_of("Z"), std::numbers::pi, QuantumState::basis(1, 0));
    EXPECT_NEAR(std::abs(out[0]), 1.0, 1e-12);
    EXPECT_NEAR(std::abs(out[0] - cplx(-1.0)), 0.0, 1e-12);
}

TEST(Krylov, RabiQuarterPeriod) {
    const auto out = expmv(op_of("X"), std::numbers::pi / 2, QuantumState::basis(1, 0));
    EXPECT_NEAR(std::abs(out[0]), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(out[1] - cplx(0, -1)), 0.0, 1e-12);
}

TEST(Krylov, RandomEightQubitMatchesDenseExponential) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto ps = test::random_pauli_sum(8, 40, seed);
        const auto h = to_sparse_matrix(ps, 8);
        const auto psi = random_state(8, seed + 10);
        for (double dt : {0.05, 0.7}) {
            const auto out = expmv(h, dt, psi);
            const Eigen::VectorXcd ref = test::dense_propagator(test::kron_sum(ps), dt) * test::to_eigen(psi);
            EXPECT_LE((test::to_eigen(out) - ref).norm(), 1e-8) << seed << " " << dt;
        }
    }
}

TEST(Krylov, MolecularHamiltonianMatchesDense) {
    const auto ints = parse_integral_file(test::fixture("h4_square_r1.2"));
    const auto h = fermion_to_sparse(build_core_hamiltonian(ints));
    const auto psi = random_state(8, 4);
    const auto out = expmv(h, 0.37, psi);
    const Eigen::VectorXcd ref = test::dense_propagator(to_dense(h), 0.37) * test::to_eigen(psi);
    EXPECT_LE((test::to_eigen(out) - ref).norm(), 1e-8);
    EXPECT_NEAR(out.norm(), 1.0, 1e-10);
}

TEST(Krylov, GeneralExponentialMatchesDense) {
    // A = -i H with a nilpotent coupling block, as in the augmented derivative system.
    const auto ps = test::random_pauli_sum(3, 10, 7);
    const Eigen::MatrixXcd h = test::kron_sum(ps);
    const Eigen::MatrixXcd e = test::kron_sum(test::random_pauli_sum(3, 6, 8));
    const Eigen::Index d = h.rows();
    Eigen::MatrixXcd aug = Eigen::MatrixXcd::Zero(2 * d, 2 * d);
    const cplx mi(0, -0.3);
    aug.topLeftCorner(d, d) = mi * h;
    aug.topRightCorner(d, d) = mi * e;
    aug.bottomRightCorner(d, d) = mi * h;
    StateVector v(static_cast<std::size_t>(2 * d));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (auto &a : v) {
        a = {g(rng), g(rng)};
    }
    const auto out = expmv_general(
        [&](std::span<const cplx> x, std::span<cplx> y) {
            Eigen::Map<const Eigen::VectorXcd> xm(x.data(), 2 * d);
            Eigen::Map<Eigen::VectorXcd>(y.data(), 2 * d) = aug * xm;
        },
        v);
    // Reference: Taylor series with scaling and squaring.
    Eigen::MatrixXcd expm = Eigen::MatrixXcd::Identity(2 * d, 2 * d);
    Eigen::MatrixXcd term = expm;
    const Eigen::MatrixXcd small = aug / 64.0;
    for (int k = 1; k < 30; ++k) {
        term = term * small / static_cast<double>(k);
        expm += term;
    }
    for (int k = 0; k < 6; ++k) {
        expm = expm * expm;
    }
    const Eigen::VectorXcd ref = expm * Eigen::Map<const Eigen::VectorXcd>(v.data(), 2 * d);
    EXPECT_LE((Eigen::Map<const Eigen::VectorXcd>(out.data(), 2 * d) - ref).norm(), 1e-9 * ref.norm());
}

TEST(Krylov, ZeroTimeIsIdentity) {
    const auto psi = random_state(3, 2);
    const auto out = expmv(to_sparse_matrix(test::random_pauli_sum(3, 5, 1), 3), 0.0, psi);
    EXPECT_EQ(test::to_eigen(out), test::to_eigen(psi));
}

TEST(Sector, RestrictionAndScatter) {
    const auto ints = parse_integral_file(test::fixture("h2"));
    const auto h = fermion_to_sparse(build_core_hamiltonian(ints));
    const auto hf = QuantumState::hartree_fock(4, 2);
    const auto s = SectorBasis::sector_of(hf);
    EXPECT_EQ(s.n_particles, 2u);
    EXPECT_EQ(s.two_sz, 0);
    const SectorBasis basis(4, s);
    EXPECT_EQ(basis.dim(), 4u);
    const auto v = basis.gather(hf.span());
    EXPECT_EQ(basis.scatter(v), hf.amplitudes());
    const Eigen::MatrixXcd block = basis.restrict(h);
    EXPECT_NEAR(block(0, 0).real(), ints.hf_energy, 1e-8);
    // X_0 breaks number conservation.
    EXPECT_THROW((void)basis.restrict(op_of("XIII")), DataError);
}
