#pragma once

// Time evolution under piecewise-constant Hamiltonians
//
//   H(t) = H_0 + sum_j w_j(t) O_j
//
// where the O_j are fixed operators (the "skeleton" of a control model) and
// w_j(t) is constant on every integration step. The skeleton is mapped to
// qubits once; each step only recombines stored matrix values.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "qsc/control.hpp"
#include "qsc/error.hpp"
#include "qsc/krylov.hpp"
#include "qsc/molham.hpp"
#include "qsc/pauli.hpp"
#include "qsc/sparse.hpp"

namespace qsc {

/// Empirically supported integration step range (a.u.).
inline constexpr double kMinTimeStep = 0.00125;
inline constexpr double kMaxTimeStep = 0.05;

/// H(w) = base + sum_j w_j O_j on the union sparsity pattern of all terms.
/// Matrix elements must be real (true for real molecular orbitals).
class HamiltonianFamily {
  public:
    HamiltonianFamily() = default;

    HamiltonianFamily(const SparseOperator &base, const std::vector<SparseOperator> &directions) {
        dim_ = base.dim;
        for (const auto &d : directions) {
            if (d.dim != dim_) {
                throw DimensionError("HamiltonianFamily: operator dimensions differ");
            }
            if (!d.hermitian) {
                throw DataError("HamiltonianFamily: direction operator is not hermitian");
            }
            directions_.push_back(to_real(d));
        }
        if (!base.hermitian) {
            throw DataError("HamiltonianFamily: base operator is not hermitian");
        }
        base_ = to_real(base);

        // Union pattern, row by row.
        row_ptr_.assign(dim_ + 1, 0);
        std::vector<std::uint32_t> row;
        for (std::size_t r = 0; r < dim_; ++r) {
            row.clear();
            auto add = [&](const SparseMatrix<double> &m) {
                for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
                    row.push_back(m.cols[k]);
                }
            };
            add(base_);
            for (const auto &d : directions_) {
                add(d);
            }
            std::sort(row.begin(), row.end());
            row.erase(std::unique(row.begin(), row.end()), row.end());
            cols_.insert(cols_.end(), row.begin(), row.end());
            row_ptr_[r + 1] = cols_.size();
        }
        base_values_ = scatter(base_);
        for (const auto &d : directions_) {
            direction_values_.push_back(scatter(d));
        }
    }

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t n_directions() const noexcept { return directions_.size(); }
    [[nodiscard]] std::size_t nnz() const noexcept { return cols_.size(); }
    [[nodiscard]] const SparseMatrix<double> &base() const noexcept { return base_; }
    [[nodiscard]] const SparseMatrix<double> &direction(std::size_t j) const { return directions_.at(j); }

    /// Matrix values of H(w) on the union pattern.
    [[nodiscard]] std::vector<double> combine(std::span<const double> w) const {
        if (w.size() != directions_.size()) {
            throw DimensionError("HamiltonianFamily: expected " + std::to_string(directions_.size()) + " weights");
        }
        std::vector<double> v = base_values_;
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (w[j] == 0.0) {
                continue;
            }
            const auto &d = direction_values_[j];
            for (std::size_t k = 0; k < v.size(); ++k) {
                v[k] += w[j] * d[k];
            }
        }
        return v;
    }

    /// y = H x with H given by combined values.
    void apply(std::span<const double> values, std::span<const cplx> x, std::span<cplx> y) const {
        for (std::size_t r = 0; r < dim_; ++r) {
            double re = 0.0, im = 0.0;
            for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                const cplx xv = x[cols_[k]];
                re += values[k] * xv.real();
                im += values[k] * xv.imag();
            }
            y[r] = {re, im};
        }
    }

    /// Standalone matrix for combined values.
    [[nodiscard]] SparseMatrix<double> matrix(std::span<const double> values) const {
        SparseMatrix<double> m;
        m.dim = dim_;
        m.row_ptr = row_ptr_;
        m.cols = cols_;
        m.values.assign(values.begin(), values.end());
        m.hermitian = true;
        return m;
    }

    [[nodiscard]] static double frobenius(std::span<const double> values) {
        double s = 0.0;
        for (double v : values) {
            s += v * v;
        }
        return std::sqrt(s);
    }

  private:
    [[nodiscard]] std::vector<double> scatter(const SparseMatrix<double> &m) const {
        std::vector<double> out(cols_.size(), 0.0);
        for (std::size_t r = 0; r < dim_; ++r) {
            std::size_t pos = row_ptr_[r];
            for (std::size_t k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
                while (cols_[pos] != m.cols[k]) {
                    ++pos;
                }
                out[pos] = m.values[k];
            }
        }
        return out;
    }

    std::size_t dim_ = 0;
    SparseMatrix<double> base_;
    std::vector<SparseMatrix<double>> directions_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> cols_;
    std::vector<double> base_values_;
    std::vector<std::vector<double>> direction_values_;
};

/// Maps the parameters of one knot to the weights of a HamiltonianFamily.
class ControlModel {
  public:
    virtual ~ControlModel() = default;
    [[nodiscard]] virtual std::size_t params_per_knot() const = 0;
    [[nodiscard]] virtual std::size_t n_directions() const = 0;
    virtual void weights(std::span<const double> knot, std::span<double> w) const = 0;
    /// grad_knot = (dw/dknot)^T grad_w
    virtual void pullback(std::span<const double> knot, std::span<const double> grad_w,
                          std::span<double> grad_knot) const = 0;
    [[nodiscard]] virtual std::vector<std::string> parameter_names() const = 0;
};

/// Five-ingredient model. Directions: [K (mu), B (b0), G (rho), A_1 .. A_M (Z~_i)],
/// weights [a0 mu, a0 b0, a0 rho, -a0 Z~_i].
class FiveIngredientModel final : public ControlModel {
  public:
    explicit FiveIngredientModel(std::size_t n_nuclei) : n_nuclei_(n_nuclei) {}

    [[nodiscard]] std::size_t params_per_knot() const override { return 4 + n_nuclei_; }
    [[nodiscard]] std::size_t n_directions() const override { return 3 + n_nuclei_; }

    void weights(std::span<const double> v, std::span<double> w) const override {
        const double a0 = v[0];
        w[0] = a0 * v[2];
        w[1] = a0 * v[1];
        w[2] = a0 * v[3];
        for (std::size_t i = 0; i < n_nuclei_; ++i) {
            w[3 + i] = -a0 * v[4 + i];
        }
    }

    void pullback(std::span<const double> v, std::span<const double> gw, std::span<double> g) const override {
        const double a0 = v[0];
        g[0] = v[2] * gw[0] + v[1] * gw[1] + v[3] * gw[2];
        for (std::size_t i = 0; i < n_nuclei_; ++i) {
            g[0] -= v[4 + i] * gw[3 + i];
        }
        g[1] = a0 * gw[1];
        g[2] = a0 * gw[0];
        g[3] = a0 * gw[2];
        for (std::size_t i = 0; i < n_nuclei_; ++i) {
            g[4 + i] = -a0 * gw[3 + i];
        }
    }

    [[nodiscard]] std::vector<std::string> parameter_names() const override {
        return knot_parameter_names(n_nuclei_);
    }

  private:
    std::size_t n_nuclei_;
};

/// One parameter per knot, equal to the weight of a single direction.
class LinearModel final : public ControlModel {
  public:
    explicit LinearModel(std::size_t n_directions, std::vector<std::string> names = {})
        : n_(n_directions), names_(std::move(names)) {
        if (names_.empty()) {
            for (std::size_t j = 0; j < n_; ++j) {
                names_.push_back("w" + std::to_string(j));
            }
        }
    }
    [[nodiscard]] std::size_t params_per_knot() const override { return n_; }
    [[nodiscard]] std::size_t n_directions() const override { return n_; }
    void weights(std::span<const double> v, std::span<double> w) const override {
        std::copy(v.begin(), v.end(), w.begin());
    }
    void pullback(std::span<const double>, std::span<const double> gw, std::span<double> g) const override {
        std::copy(gw.begin(), gw.end(), g.begin());
    }
    [[nodiscard]] std::vector<std::string> parameter_names() const override { return names_; }

  private:
    std::size_t n_;
    std::vector<std::string> names_;
};

/// Sparse qubit matrix of a fermionic operator.
inline SparseOperator fermion_to_sparse(const FermionCoeffs &fc) {
    return to_sparse_matrix(jordan_wigner(fc), fc.n_spin_orbitals);
}

/// Skeleton operators of the five-ingredient model: the perturbation of a
/// unit control point in each linear direction (a0 = 1).
inline std::vector<FermionCoeffs> five_ingredient_skeleton(const IntegralSet &ints) {
    const std::size_t m = ints.n_nuclei();
    auto unit = [&](double b0, double mu, double rho, std::size_t zi) {
        ControlPoint cp{1.0, b0, mu, rho, std::vector<double>(m, 0.0)};
        if (zi < m) {
            cp.zeff[zi] = -1.0; // direction weight is -a0 Z~_i
        }
        return assemble_perturbation(ints, cp);
    };
    std::vector<FermionCoeffs> out;
    out.push_back(unit(0, 1, 0, m));
    out.push_back(unit(1, 0, 0, m));
    out.push_back(unit(0, 0, 1, m));
    for (std::size_t i = 0; i < m; ++i) {
        out.push_back(unit(0, 0, 0, i));
    }
    return out;
}

inline HamiltonianFamily build_five_ingredient_family(const IntegralSet &ints, const SparseOperator &h_mol) {
    std::vector<SparseOperator> dirs;
    for (const auto &fc : five_ingredient_skeleton(ints)) {
        dirs.push_back(fermion_to_sparse(fc));
    }
    return {h_mol, dirs};
}

/// Time-ordered record of a propagation. Row k < n_steps describes the state
/// at t_k together with the Hamiltonian of step k; the last row is t = T with
/// the Hamiltonian of the final step.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> e_mol;      // <psi|H_mol|psi>
    std::vector<double> e_drive;    // <psi|H(t)|psi>
    std::vector<double> variance;   // <psi|(H(t) - E(t))^2|psi>
    std::vector<double> norm_ratio; // ||H(t)||_F / ||H_mol||_F
    std::vector<QuantumState> states;
    QuantumState final_state;
    double final_molecular_energy = 0.0;
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t n_steps() const noexcept { return times.empty() ? 0 : times.size() - 1; }
    [[nodiscard]] double total_time() const { return times.empty() ? 0.0 : times.back() - times.front(); }
};

struct PropagationOptions {
    double krylov_tolerance = 1e-12;
    bool store_states = true;
    double norm_tolerance = 1e-8;
};

/// Propagate psi0 through n_steps slots of width T/n_steps, slot k using the
/// weights step_weights[k * n_dir .. (k+1) * n_dir).
inline Trajectory propagate_weights(const HamiltonianFamily &family, const SparseMatrix<double> &h_mol,
                                    std::span<const double> step_weights, std::size_t n_steps, double total_time,
                                    const QuantumState &psi0, const PropagationOptions &opts = {}) {
    const std::size_t n_dir = family.n_directions();
    if (step_weights.size() != n_steps * n_dir) {
        throw DimensionError("propagate: step weight table has the wrong size");
    }
    if (psi0.dim() != family.dim() || h_mol.dim != family.dim()) {
        throw DimensionError("propagate: state and operator dimensions differ");
    }
    Trajectory traj;
    const double dt = total_time / static_cast<double>(n_steps);
    if (dt < kMinTimeStep * (1 - 1e-12) || dt > kMaxTimeStep * (1 + 1e-12)) {
        std::ostringstream os;
        os << "time step " << dt << " a.u. outside the supported range [" << kMinTimeStep << ", " << kMaxTimeStep
           << "]";
        traj.warnings.push_back(os.str());
    }
    const double mol_norm = h_mol.frobenius_norm();
    KrylovOptions kopts;
    kopts.tolerance = opts.krylov_tolerance;

    StateVector psi = psi0.amplitudes();
    StateVector h_psi(psi.size()), m_psi(psi.size());
    std::vector<double> values;
    for (std::size_t k = 0; k <= n_steps; ++k) {
        if (k < n_steps) {
            values = family.combine(step_weights.subspan(k * n_dir, n_dir));
        }
        family.apply(values, psi, h_psi);
        h_mol.apply(psi, m_psi);
        const double e = inner(psi, h_psi).real();
        double var = 0.0;
        for (std::size_t i = 0; i < psi.size(); ++i) {
            var += std::norm(h_psi[i] - e * psi[i]);
        }
        traj.times.push_back(total_time * static_cast<double>(k) / static_cast<double>(n_steps));
        traj.e_drive.push_back(e);
        traj.e_mol.push_back(inner(psi, m_psi).real());
        traj.variance.push_back(var);
        traj.norm_ratio.push_back(HamiltonianFamily::frobenius(values) / mol_norm);
        if (opts.store_states) {
            traj.states.emplace_back(psi0.n_qubits(), psi);
        }
        if (k == n_steps) {
            break;
        }
        psi = expmv_hermitian([&](std::span<const cplx> x, std::span<cplx> y) { family.apply(values, x, y); }, dt,
                              psi, kopts);
        const double nrm = norm2(psi);
        if (std::abs(nrm - 1.0) > opts.norm_tolerance) {
            throw IntegrityError("propagate: norm drifted to " + std::to_string(nrm) + " at step " +
                                 std::to_string(k));
        }
    }
    traj.final_state = QuantumState(psi0.n_qubits(), psi);
    traj.final_molecular_energy = traj.e_mol.back();
    return traj;
}

/// Per-step weight table of a schedule under a control model.
inline std::vector<double> step_weights(const ControlModel &model, const ControlSchedule &s) {
    if (s.per_knot() != model.params_per_knot()) {
        throw DimensionError("step_weights: schedule layout does not match the control model");
    }
    const std::size_t n_dir = model.n_directions();
    std::vector<double> out(s.n_steps() * n_dir);
    for (std::size_t k = 0; k < s.n_steps(); ++k) {
        model.weights(s.knot(s.knot_of_step(k)), std::span<double>(out).subspan(k * n_dir, n_dir));
    }
    return out;
}

inline Trajectory propagate(const HamiltonianFamily &family, const SparseMatrix<double> &h_mol,
                            const ControlModel &model, const ControlSchedule &s, const QuantumState &psi0,
                            const PropagationOptions &opts = {}) {
    return propagate_weights(family, h_mol, step_weights(model, s), s.n_steps(), s.total_time(), psi0, opts);
}

/// Convenience form: builds the five-ingredient skeleton from the integrals.
inline Trajectory propagate(const SparseOperator &h_mol, const IntegralSet &ints, const ControlSchedule &s,
                            const QuantumState &psi0, const PropagationOptions &opts = {}) {
    const HamiltonianFamily family = build_five_ingredient_family(ints, h_mol);
    const FiveIngredientModel model(ints.n_nuclei());
    return propagate(family, family.base(), model, s, psi0, opts);
}

/// Mean driving norm and friends need per-step data; the CSV keeps one row per grid time.
inline void write_trajectory_csv(const Trajectory &traj, std::ostream &out) {
    out << "t,E_mol,E_drive,variance,norm_ratio\n";
    out << std::setprecision(17);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        out << traj.times[k] << ',' << traj.e_mol[k] << ',' << traj.e_drive[k] << ',' << traj.variance[k] << ','
            << traj.norm_ratio[k] << '\n';
    }
}

inline void write_trajectory_csv(const Trajectory &traj, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot write '" + path.string() + "'");
    }
    write_trajectory_csv(traj, out);
}

/// Statistics-only trajectory from a CSV written by write_trajectory_csv.
inline Trajectory read_trajectory_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open trajectory '" + path.string() + "'");
    }
    std::string line;
    std::getline(in, line);
    if (line != "t,E_mol,E_drive,variance,norm_ratio") {
        throw FormatError("trajectory CSV: unexpected header '" + line + "'");
    }
    Trajectory traj;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception &) {
                throw FormatError("trajectory CSV: bad number on line " + std::to_string(lineno));
            }
        }
        if (row.size() != 5) {
            throw FormatError("trajectory CSV: expected 5 columns on line " + std::to_string(lineno));
        }
        traj.times.push_back(row[0]);
        traj.e_mol.push_back(row[1]);
        traj.e_drive.push_back(row[2]);
        traj.variance.push_back(row[3]);
        traj.norm_ratio.push_back(row[4]);
    }
    if (!traj.e_mol.empty()) {
        traj.final_molecular_energy = traj.e_mol.back();
    }
    return traj;
}

} // namespace qsc
