#include <gtest/gtest.h>

#include "qsc/anneal.hpp"
#include "qsc/molham.hpp"
#include "qsc/sector.hpp"
#include "qsc/spectrum.hpp"
#include "test_support.hpp"

using namespace qsc;

namespace {

IntegralSet h2() { return parse_integral_file(test::fixture("h2")); }

} // namespace

TEST(HfHamiltonian, DeterminantIsEigenstate) {
    for (const char *name : {"h2", "h4_square_r1.2"}) {
        const auto ints = parse_integral_file(test::fixture(name));
        const auto h = to_sparse_matrix(build_hf_hamiltonian(ints), ints.n_qubits());
        const auto hf = QuantumState::hartree_fock(ints.n_qubits(), ints.n_electrons);
        const auto out = h * hf.span();
        for (std::size_t i = 0; i < out.size(); ++i) {
            EXPECT_NEAR(std::abs(out[i] - ints.hf_energy * hf[i]), 0.0, 1e-10) << name;
        }
    }
}

TEST(HfHamiltonian, DoubleExcitationGap) {
    const auto ints = h2();
    const auto h = to_sparse_matrix(build_hf_hamiltonian(ints), 4);
    const SectorBasis basis(4, {2, 0});
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(basis.restrict(h));
    const auto &ev = es.eigenvalues();
    const double gap = ev(ev.size() - 1) - ev(0);
    EXPECT_NEAR(gap, 2.0 * (ints.orbital_energies[1] - ints.orbital_energies[0]), 1e-12);
    EXPECT_NEAR(ev(0), ints.hf_energy, 1e-12);
}

TEST(HfHamiltonian, EqualLevelsGiveNumberOperator) {
    auto ints = h2();
    ints.orbital_energies = {-0.3, -0.3};
    const auto ps = build_hf_hamiltonian(ints);
    const auto h = to_dense(to_sparse_matrix(ps, 4));
    for (Eigen::Index b = 0; b < h.rows(); ++b) {
        EXPECT_NEAR(h(b, b).real(), -0.3 * std::popcount(static_cast<unsigned>(b)) + ints.hf_energy + 0.6, 1e-12);
    }
    EXPECT_LE((h - Eigen::MatrixXcd(h.diagonal().asDiagonal())).norm(), 1e-14);
}

TEST(HfHamiltonian, MissingOrbitalEnergiesRejected) {
    auto ints = h2();
    ints.orbital_energies.clear();
    EXPECT_THROW((void)build_hf_hamiltonian(ints), DataError);
}

TEST(Anneal, LinearScheduleEndpoints) {
    EXPECT_EQ(linear_schedule(0.0, 5.0), std::make_pair(1.0, 0.0));
    EXPECT_EQ(linear_schedule(5.0, 5.0), std::make_pair(0.0, 1.0));
}

TEST(Anneal, EnergyDecreasesWithDuration) {
    const auto ints = h2();
    const double e_fci = exact_ground_state(fermion_to_sparse(build_core_hamiltonian(ints)), Sector{2, 0}).energy;
    double prev = 0.0;
    for (double t : {2.5, 5.0, 10.0, 25.0}) {
        PropagationOptions o;
        o.store_states = false;
        const auto traj = anneal_run(ints, {t, static_cast<std::size_t>(t / 0.05)}, o);
        if (t > 2.5) {
            EXPECT_LE(traj.final_molecular_energy, prev + 1e-12) << t;
        }
        prev = traj.final_molecular_energy;
        EXPECT_GE(traj.final_molecular_energy, e_fci - 1e-10);
    }
    EXPECT_LT(prev - e_fci, 2e-3);
}

TEST(Anneal, DrivingEnergyStartsAtHartreeFock) {
    const auto ints = h2();
    const auto traj = anneal_run(ints, {2.5, 50});
    // Both H_HF and H_mol give the determinant the stored HF energy.
    EXPECT_NEAR(traj.e_drive.front(), ints.hf_energy, 1e-8);
}

TEST(Anneal, IdenticalHamiltoniansConserveEnergy) {
    // With a family whose direction vanishes, annealing is idle molecular evolution.
    const auto ints = h2();
    const auto h = fermion_to_sparse(build_core_hamiltonian(ints));
    SparseOperator zero = h;
    std::fill(zero.values.begin(), zero.values.end(), cplx{});
    const HamiltonianFamily family(h, {zero});
    StateVector v(16);
    v[3] = std::sqrt(0.5);
    v[12] = std::sqrt(0.5);
    const QuantumState psi(4, v);
    const auto traj = propagate_weights(family, to_real(h), std::vector<double>(20, 0.7), 20, 1.0, psi);
    for (double e : traj.e_mol) {
        EXPECT_NEAR(e, traj.e_mol.front(), 1e-10);
    }
}

TEST(AttractionControl, ZeroAndLinear) {
    const auto ints = h2();
    EXPECT_TRUE(h2_scaling_perturbation(ints, 0.0).is_zero());
    auto one = h2_scaling_perturbation(ints, 1.5);
    const auto two = h2_scaling_perturbation(ints, 3.0);
    one *= 2.0;
    EXPECT_LE((one.one_body - two.one_body).cwiseAbs().maxCoeff(), 1e-15);
    for (double g : two.two_body) {
        EXPECT_EQ(g, 0.0);
    }
}

TEST(AttractionControl, UnitScaleCancelsAttraction) {
    // Adding f * sum_i Z_i A^i with f = 1 removes -sum_i Z_i A^i from h, leaving -K/2.
    const auto ints = h2();
    auto fc = build_core_hamiltonian(ints);
    fc += h2_scaling_perturbation(ints, 1.0);
    EXPECT_LE((fc.one_body - spin_expand_one_body(-0.5 * ints.kinetic)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AttractionControl, NonFiniteScaleRejected) {
    EXPECT_THROW((void)h2_scaling_perturbation(h2(), std::nan("")), DataError);
}
