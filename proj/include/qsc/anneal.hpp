#pragma once

// Annealing baseline and the attraction-only control used for H2.
//
// Annealing interpolates H(t) = A(t) H_HF + B(t) H_mol with A = 1 - t/T,
// B = t/T sampled at slot midpoints. It is propagated as
// H_mol + A(t) (H_HF - H_mol), so A = 0 is exactly idle molecular evolution.

#include <cmath>
#include <string>
#include <vector>

#include "qsc/control.hpp"
#include "qsc/dynamics.hpp"
#include "qsc/error.hpp"
#include "qsc/molham.hpp"
#include "qsc/pauli.hpp"
#include "qsc/sparse.hpp"

namespace qsc {

struct AnnealConfig {
    double total_time = 1.0;
    std::size_t n_steps = 1;
};

/// Fermionic form of H_HF = sum_p eps_p n_p + c, with c fixed so that the HF
/// determinant has the stored mean-field energy.
inline FermionCoeffs hf_hamiltonian_coeffs(const IntegralSet &ints) {
    if (ints.orbital_energies.size() != ints.n_spatial) {
        throw DataError("build_hf_hamiltonian: orbital energies missing or of wrong length");
    }
    FermionCoeffs fc(ints.n_spin_orbitals());
    double occupied = 0.0;
    for (std::size_t p = 0; p < ints.n_spin_orbitals(); ++p) {
        const double eps = ints.orbital_energies[p / 2];
        fc.one_body(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)) = eps;
        if (p < ints.n_electrons) {
            occupied += eps;
        }
    }
    fc.constant = ints.hf_energy - occupied;
    return fc;
}

inline PauliSum build_hf_hamiltonian(const IntegralSet &ints) { return jordan_wigner(hf_hamiltonian_coeffs(ints)); }

/// A and B of the linear schedule at time t.
inline std::pair<double, double> linear_schedule(double t, double total_time) {
    const double b = t / total_time;
    return {1.0 - b, b};
}

/// Family with base H_mol and the single direction H_HF - H_mol.
inline HamiltonianFamily build_anneal_family(const IntegralSet &ints, const SparseOperator &h_mol) {
    auto diff = hf_hamiltonian_coeffs(ints);
    auto core = build_core_hamiltonian(ints);
    core *= -1.0;
    diff += core;
    return {h_mol, {fermion_to_sparse(diff)}};
}

/// Propagate the HF state under the linear annealing schedule.
inline Trajectory anneal_run(const HamiltonianFamily &family, const SparseMatrix<double> &h_mol,
                             const IntegralSet &ints, const AnnealConfig &cfg, PropagationOptions opts = {}) {
    ControlSchedule::validate_shape(1, cfg.n_steps, cfg.total_time);
    if (family.n_directions() != 1) {
        throw DimensionError("anneal_run: expected the single-direction annealing family");
    }
    const double dt = cfg.total_time / static_cast<double>(cfg.n_steps);
    std::vector<double> weights(cfg.n_steps);
    for (std::size_t k = 0; k < cfg.n_steps; ++k) {
        weights[k] = linear_schedule((static_cast<double>(k) + 0.5) * dt, cfg.total_time).first;
    }
    const auto psi0 = QuantumState::hartree_fock(ints.n_qubits(), ints.n_electrons);
    return propagate_weights(family, h_mol, weights, cfg.n_steps, cfg.total_time, psi0, opts);
}

inline Trajectory anneal_run(const IntegralSet &ints, const AnnealConfig &cfg, PropagationOptions opts = {}) {
    const auto h_mol = fermion_to_sparse(build_core_hamiltonian(ints));
    const auto family = build_anneal_family(ints, h_mol);
    return anneal_run(family, to_real(h_mol), ints, cfg, opts);
}

/// One-body perturbation f sum_i Z_i A^i with the physical charges.
inline FermionCoeffs h2_scaling_perturbation(const IntegralSet &ints, double f) {
    if (!std::isfinite(f)) {
        throw DataError("h2_scaling_perturbation: non-finite scale");
    }
    FermionCoeffs fc(ints.n_spin_orbitals());
    fc.one_body = spin_expand_one_body(f * ints.weighted_attraction());
    return fc;
}

/// Family with base H_mol and the single direction sum_i Z_i A^i (weight f).
inline HamiltonianFamily build_attraction_family(const IntegralSet &ints, const SparseOperator &h_mol) {
    return {h_mol, {fermion_to_sparse(h2_scaling_perturbation(ints, 1.0))}};
}

} // namespace qsc
