#pragma once

// J[a] = <psi_a(T)|H_mol|psi_a(T)> and its gradient.
//
// The adjoint gradient back-propagates the costate lambda(T) = H_mol psi(T)
// through the slot propagators U_k = exp(-i tau H_k). For a slot weight w_j,
//
//   dJ/dw_kj = 2 Re <lambda_{k+1}| dU_k/dw_kj |psi_k>,
//
// and dU_k/dw psi_k is the upper block of
//
//   exp([[A, E], [0, A]]) [0; psi_k],   A = -i tau H_k,  E = -i tau O_j,
//
// evaluated with a Krylov (Arnoldi) exponential. Parameters reach the weights
// through the control model's pullback. Integration steps that share a knot
// share the Hamiltonian, so the lean path propagates one slot per knot.
//
// The spectral backend works in the (N, S_z) sector of the initial state with
// a dense eigendecomposition H_k = V diag(l) V^T per knot. There the upper
// block of the augmented exponential has the closed form
//
//   V (F o (V^T O_j V)) V^T,   F_ab = (e^{-i tau l_a} - e^{-i tau l_b}) / (l_a - l_b),
//
// which is exact and costs the same for every phase tau ||H_k||.

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "qsc/dynamics.hpp"
#include "qsc/error.hpp"
#include "qsc/krylov.hpp"
#include "qsc/sector.hpp"

namespace qsc {

enum class GradientMethod { adjoint, finite_diff };

/// How slot exponentials are evaluated inside the objective.
enum class PropagationBackend { krylov, spectral };

struct ObjectiveEvaluation {
    double value = 0.0;
    std::vector<double> gradient;
};

struct ObjectiveOptions {
    double krylov_tolerance = 1e-12;
    double fd_step = 1e-5;
    /// Relative tolerance used when cross-validating adjoint against finite differences.
    double cross_check_tolerance = 1e-5;
    /// Entries with |g| at or below this are excluded from the relative comparison.
    double cross_check_floor = 1e-8;
    PropagationBackend backend = PropagationBackend::krylov;
};

/// Worst per-entry relative discrepancy between two gradients over entries
/// whose reference magnitude exceeds `floor`. Returns {discrepancy, index}.
inline std::pair<double, std::size_t> relative_discrepancy(std::span<const double> g, std::span<const double> ref,
                                                           double floor) {
    double worst = 0.0;
    std::size_t at = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (std::abs(ref[i]) <= floor && std::abs(g[i]) <= floor) {
            continue;
        }
        const double d = std::abs(g[i] - ref[i]) / std::max(std::abs(ref[i]), std::abs(g[i]));
        if (d > worst) {
            worst = d;
            at = i;
        }
    }
    return {worst, at};
}

/// Everything needed to evaluate J for a schedule shape.
class EnergyObjective {
  public:
    EnergyObjective(const HamiltonianFamily &family, const SparseMatrix<double> &h_mol, const ControlModel &model,
                    std::size_t n_ctrl, std::size_t n_steps, double total_time, QuantumState psi0,
                    ObjectiveOptions opts = {})
        : family_(&family), h_mol_(&h_mol), model_(&model), n_ctrl_(n_ctrl), n_steps_(n_steps),
          total_time_(total_time), psi0_(std::move(psi0)), opts_(opts) {
        ControlSchedule::validate_shape(n_ctrl, n_steps, total_time);
        if (model.n_directions() != family.n_directions()) {
            throw DimensionError("EnergyObjective: control model and Hamiltonian family disagree");
        }
        if (opts_.backend == PropagationBackend::spectral) {
            spectral_ = std::make_shared<const SpectralData>(family, h_mol, psi0_);
        }
    }

    [[nodiscard]] std::size_t n_params() const noexcept { return n_ctrl_ * model_->params_per_knot(); }
    [[nodiscard]] std::size_t n_ctrl() const noexcept { return n_ctrl_; }
    [[nodiscard]] std::size_t n_steps() const noexcept { return n_steps_; }
    [[nodiscard]] double total_time() const noexcept { return total_time_; }
    [[nodiscard]] const ControlModel &model() const noexcept { return *model_; }
    [[nodiscard]] const HamiltonianFamily &family() const noexcept { return *family_; }
    [[nodiscard]] const SparseMatrix<double> &h_mol() const noexcept { return *h_mol_; }
    [[nodiscard]] const QuantumState &initial_state() const noexcept { return psi0_; }
    [[nodiscard]] const ObjectiveOptions &options() const noexcept { return opts_; }

    [[nodiscard]] ControlSchedule schedule(std::span<const double> params, std::size_t n_nuclei = 0) const {
        return {n_ctrl_, n_steps_, total_time_, n_nuclei, std::vector<double>(params.begin(), params.end()),
                model_->params_per_knot()};
    }

    /// Full trajectory for a parameter vector.
    [[nodiscard]] Trajectory trajectory(std::span<const double> params, PropagationOptions popts = {}) const {
        popts.krylov_tolerance = opts_.krylov_tolerance;
        return propagate(*family_, *h_mol_, *model_, schedule(params), psi0_, popts);
    }

    /// J only.
    [[nodiscard]] double value(std::span<const double> params) const {
        check_size(params);
        if (spectral_) {
            return spectral_value(params);
        }
        StateVector psi = psi0_.amplitudes();
        std::vector<double> w(model_->n_directions());
        for (std::size_t k = 0; k < n_ctrl_; ++k) {
            model_->weights(knot(params, k), w);
            const auto values = family_->combine(w);
            psi = step(values, psi, slot_time());
        }
        return energy(psi);
    }

    /// J and dJ/dparams by the adjoint method.
    [[nodiscard]] ObjectiveEvaluation evaluate_adjoint(std::span<const double> params) const {
        check_size(params);
        if (spectral_) {
            return spectral_adjoint(params);
        }
        const std::size_t n_dir = model_->n_directions();
        const std::size_t per = model_->params_per_knot();
        const double tau = slot_time();

        std::vector<std::vector<double>> weights(n_ctrl_, std::vector<double>(n_dir));
        std::vector<std::vector<double>> values(n_ctrl_);
        std::vector<StateVector> states;
        states.reserve(n_ctrl_ + 1);
        states.push_back(psi0_.amplitudes());
        for (std::size_t k = 0; k < n_ctrl_; ++k) {
            model_->weights(knot(params, k), weights[k]);
            values[k] = family_->combine(weights[k]);
            states.push_back(step(values[k], states.back(), tau));
        }
        ObjectiveEvaluation out;
        out.value = energy(states.back());
        out.gradient.assign(n_params(), 0.0);

        StateVector lambda(states.back().size());
        h_mol_->apply(states.back(), lambda);
        KrylovOptions kopts;
        kopts.tolerance = opts_.krylov_tolerance;
        std::vector<double> grad_w(n_dir);
        const std::size_t dim = family_->dim();
        StateVector tmp(dim);
        for (std::size_t kk = n_ctrl_; kk-- > 0;) {
            const auto &vals = values[kk];
            const auto &psi = states[kk];
            for (std::size_t j = 0; j < n_dir; ++j) {
                const auto &dir = family_->direction(j);
                // Block operator [[A, E], [0, A]] on stacked vectors [top; bottom].
                auto block = [&](std::span<const cplx> x, std::span<cplx> y) {
                    auto xt = x.first(dim), xb = x.subspan(dim, dim);
                    auto yt = y.first(dim), yb = y.subspan(dim, dim);
                    family_->apply(vals, xt, yt);
                    dir.apply(xb, tmp);
                    for (std::size_t i = 0; i < dim; ++i) {
                        yt[i] = cplx(0.0, -tau) * (yt[i] + tmp[i]);
                    }
                    family_->apply(vals, xb, yb);
                    for (std::size_t i = 0; i < dim; ++i) {
                        yb[i] *= cplx(0.0, -tau);
                    }
                };
                StateVector stacked(2 * dim);
                std::copy(psi.begin(), psi.end(), stacked.begin() + static_cast<std::ptrdiff_t>(dim));
                const StateVector res = expmv_general(block, stacked, kopts);
                grad_w[j] = 2.0 * inner(lambda, std::span<const cplx>(res).first(dim)).real();
            }
            model_->pullback(knot(params, kk), grad_w, std::span<double>(out.gradient).subspan(kk * per, per));
            // lambda_k = U_k^dagger lambda_{k+1}
            lambda = step(vals, lambda, -tau);
        }
        return out;
    }

    /// J and dJ/dparams by central differences.
    [[nodiscard]] ObjectiveEvaluation evaluate_finite_diff(std::span<const double> params) const {
        ObjectiveEvaluation out;
        out.value = value(params);
        out.gradient.resize(params.size());
        std::vector<double> x(params.begin(), params.end());
        const double h = opts_.fd_step;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double orig = x[i];
            x[i] = orig + h;
            const double fp = value(x);
            x[i] = orig - h;
            const double fm = value(x);
            x[i] = orig;
            out.gradient[i] = (fp - fm) / (2.0 * h);
        }
        return out;
    }

    [[nodiscard]] ObjectiveEvaluation evaluate(std::span<const double> params, GradientMethod method) const {
        return method == GradientMethod::adjoint ? evaluate_adjoint(params) : evaluate_finite_diff(params);
    }

  private:
    struct SpectralData {
        SectorBasis basis;
        Eigen::MatrixXd base;
        std::vector<Eigen::MatrixXd> directions;
        Eigen::MatrixXd h_mol;
        Eigen::VectorXcd psi0;

        SpectralData(const HamiltonianFamily &family, const SparseMatrix<double> &h, const QuantumState &psi)
            : basis(psi.n_qubits(), SectorBasis::sector_of(psi)) {
            base = basis.restrict(family.base());
            for (std::size_t j = 0; j < family.n_directions(); ++j) {
                directions.push_back(basis.restrict(family.direction(j)));
            }
            h_mol = basis.restrict(h);
            psi0 = basis.gather(psi.span());
        }
    };

    struct KnotSpectrum {
        Eigen::VectorXd energies;
        Eigen::MatrixXd vectors;
        Eigen::VectorXcd phases; // e^{-i tau l}
    };

    [[nodiscard]] KnotSpectrum knot_spectrum(std::span<const double> w, double tau) const {
        const auto &sd = *spectral_;
        Eigen::MatrixXd h = sd.base;
        for (std::size_t j = 0; j < w.size(); ++j) {
            if (w[j] != 0.0) {
                h.noalias() += w[j] * sd.directions[j];
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
        if (es.info() != Eigen::Success) {
            throw ConvergenceError("EnergyObjective: eigendecomposition failed", 0.0);
        }
        KnotSpectrum ks{es.eigenvalues(), es.eigenvectors(), {}};
        ks.phases = (ks.energies * cplx(0.0, -tau)).array().exp();
        return ks;
    }

    static Eigen::VectorXcd apply_spectrum(const KnotSpectrum &ks, const Eigen::VectorXcd &v, bool adjoint) {
        const Eigen::VectorXcd c = ks.vectors.transpose() * v;
        const Eigen::VectorXcd scaled =
            adjoint ? Eigen::VectorXcd(ks.phases.conjugate().cwiseProduct(c)) : Eigen::VectorXcd(ks.phases.cwiseProduct(c));
        return ks.vectors * scaled;
    }

    [[nodiscard]] double sector_energy(const Eigen::VectorXcd &psi) const {
        const double nrm = psi.norm();
        if (std::abs(nrm - 1.0) > 1e-8) {
            throw IntegrityError("EnergyObjective: norm drifted to " + std::to_string(nrm));
        }
        return psi.dot(spectral_->h_mol * psi).real();
    }

    [[nodiscard]] double spectral_value(std::span<const double> params) const {
        Eigen::VectorXcd psi = spectral_->psi0;
        std::vector<double> w(model_->n_directions());
        for (std::size_t k = 0; k < n_ctrl_; ++k) {
            model_->weights(knot(params, k), w);
            psi = apply_spectrum(knot_spectrum(w, slot_time()), psi, false);
        }
        return sector_energy(psi);
    }

    [[nodiscard]] ObjectiveEvaluation spectral_adjoint(std::span<const double> params) const {
        const auto &sd = *spectral_;
        const std::size_t n_dir = model_->n_directions();
        const std::size_t per = model_->params_per_knot();
        const double tau = slot_time();
        std::vector<KnotSpectrum> spectra;
        std::vector<Eigen::VectorXcd> states{sd.psi0};
        std::vector<double> w(n_dir);
        for (std::size_t k = 0; k < n_ctrl_; ++k) {
            model_->weights(knot(params, k), w);
            spectra.push_back(knot_spectrum(w, tau));
            states.push_back(apply_spectrum(spectra.back(), states.back(), false));
        }
        ObjectiveEvaluation out;
        out.value = sector_energy(states.back());
        out.gradient.assign(n_params(), 0.0);

        const auto n = static_cast<Eigen::Index>(sd.basis.dim());
        Eigen::VectorXcd lambda = sd.h_mol * states.back();
        Eigen::MatrixXd m_re(n, n);
        std::vector<double> grad_w(n_dir);
        for (std::size_t kk = n_ctrl_; kk-- > 0;) {
            const auto &ks = spectra[kk];
            const Eigen::VectorXcd l = ks.vectors.transpose() * lambda;
            const Eigen::VectorXcd p = ks.vectors.transpose() * states[kk];
            for (Eigen::Index b = 0; b < n; ++b) {
                for (Eigen::Index a = 0; a < n; ++a) {
                    // Divided difference of e^{-i tau x}, written to stay accurate as l_a -> l_b.
                    const double theta = -tau * (ks.energies(a) - ks.energies(b));
                    const double sinc = std::abs(theta) < 1e-8 ? 1.0 : std::sin(theta) / theta;
                    const double versin =
                        std::abs(theta) < 1e-8 ? 0.5 * theta : 2.0 * std::pow(std::sin(0.5 * theta), 2) / theta;
                    const cplx phi = cplx(0.0, -tau) * ks.phases(b) * cplx(sinc, versin);
                    m_re(a, b) = (std::conj(l(a)) * phi * p(b)).real();
                }
            }
            const Eigen::MatrixXd y = ks.vectors * m_re * ks.vectors.transpose();
            for (std::size_t j = 0; j < n_dir; ++j) {
                grad_w[j] = 2.0 * sd.directions[j].cwiseProduct(y).sum();
            }
            model_->pullback(knot(params, kk), grad_w, std::span<double>(out.gradient).subspan(kk * per, per));
            lambda = apply_spectrum(ks, lambda, true);
        }
        return out;
    }

    void check_size(std::span<const double> params) const {
        if (params.size() != n_params()) {
            throw DimensionError("EnergyObjective: expected " + std::to_string(n_params()) + " parameters, got " +
                                 std::to_string(params.size()));
        }
    }
    [[nodiscard]] std::span<const double> knot(std::span<const double> params, std::size_t k) const {
        const std::size_t per = model_->params_per_knot();
        return params.subspan(k * per, per);
    }
    [[nodiscard]] double slot_time() const { return total_time_ / static_cast<double>(n_ctrl_); }

    [[nodiscard]] StateVector step(const std::vector<double> &values, const StateVector &psi, double t) const {
        KrylovOptions kopts;
        kopts.tolerance = opts_.krylov_tolerance;
        return expmv_hermitian([&](std::span<const cplx> x, std::span<cplx> y) { family_->apply(values, x, y); }, t,
                               psi, kopts);
    }

    [[nodiscard]] double energy(const StateVector &psi) const {
        StateVector h_psi(psi.size());
        h_mol_->apply(psi, h_psi);
        const double nrm = norm2(psi);
        if (std::abs(nrm - 1.0) > 1e-8) {
            throw IntegrityError("EnergyObjective: norm drifted to " + std::to_string(nrm));
        }
        return inner(psi, h_psi).real();
    }

    const HamiltonianFamily *family_;
    const SparseMatrix<double> *h_mol_;
    const ControlModel *model_;
    std::size_t n_ctrl_;
    std::size_t n_steps_;
    double total_time_;
    QuantumState psi0_;
    ObjectiveOptions opts_;
    std::shared_ptr<const SpectralData> spectral_;
};

/// J for a schedule (the final molecular energy of the propagated trajectory).
inline double energy_objective(const EnergyObjective &obj, const ControlSchedule &s) {
    return obj.value(s.parameters());
}

/// Gradient in schedule layout order. With `cross_validate` both methods run
/// and a disagreement beyond the configured tolerance raises IntegrityError.
inline std::vector<double> gradient(const EnergyObjective &obj, const ControlSchedule &s, GradientMethod method,
                                    bool cross_validate = false) {
    auto primary = obj.evaluate(s.parameters(), method);
    if (cross_validate) {
        const auto other = obj.evaluate(s.parameters(), method == GradientMethod::adjoint
                                                           ? GradientMethod::finite_diff
                                                           : GradientMethod::adjoint);
        const auto &fd = method == GradientMethod::finite_diff ? primary.gradient : other.gradient;
        const auto &adj = method == GradientMethod::adjoint ? primary.gradient : other.gradient;
        const auto [worst, at] = relative_discrepancy(adj, fd, obj.options().cross_check_floor);
        if (worst > obj.options().cross_check_tolerance) {
            throw IntegrityError("gradient: adjoint and finite differences disagree at index " + std::to_string(at) +
                                 " (relative " + std::to_string(worst) + ")");
        }
    }
    return std::move(primary.gradient);
}

} // namespace qsc
