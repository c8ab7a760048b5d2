#pragma once

// Trajectory post-processing: speed-limit estimate, driving-norm diagnostic,
// and the measurement/circuit cost model.
//
// The speed-limit estimate is the time-dependent Bhattacharyya form
//
//   T_qsl = (pi/2) T / int_0^T sqrt(<psi(t)|(H(t) - E(t))^2|psi(t)>) dt,
//
// integrated with the trapezoid rule on the trajectory grid.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qsc/dynamics.hpp"
#include "qsc/error.hpp"

namespace qsc {

/// Which Hamiltonian defines the energy spread in the speed-limit integrand.
enum class SpreadHamiltonian { instantaneous, molecular };

struct QslReport {
    double t_qsl = 0.0;
    double t_evolution = 0.0;
    double integral = 0.0;
    std::vector<double> spread; // std-dev samples on the time grid
    std::string quadrature = "trapezoid";
    SpreadHamiltonian hamiltonian = SpreadHamiltonian::instantaneous;
};

/// Trapezoid quadrature of samples on a (possibly non-uniform) grid.
inline double trapezoid(std::span<const double> t, std::span<const double> y) {
    if (t.size() != y.size()) {
        throw DimensionError("trapezoid: grid and samples differ in length");
    }
    double acc = 0.0;
    for (std::size_t k = 1; k < t.size(); ++k) {
        acc += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
    }
    return acc;
}

/// Speed-limit estimate from precomputed variance samples.
inline QslReport qsl_from_variance(std::span<const double> times, std::span<const double> variance,
                                   SpreadHamiltonian which = SpreadHamiltonian::instantaneous) {
    if (times.size() < 2) {
        throw DataError("qsl_estimate: trajectory needs at least two time points");
    }
    QslReport rep;
    rep.hamiltonian = which;
    rep.spread.reserve(variance.size());
    for (double v : variance) {
        if (v < -1e-10) {
            throw IntegrityError("qsl_estimate: negative variance " + std::to_string(v));
        }
        rep.spread.push_back(std::sqrt(std::max(v, 0.0)));
    }
    rep.t_evolution = times.back() - times.front();
    rep.integral = trapezoid(times, rep.spread);
    if (!(rep.integral > 1e-14 * std::max(1.0, rep.t_evolution))) {
        throw DataError("stationary trajectory, QSL undefined");
    }
    rep.t_qsl = std::numbers::pi / 2.0 * rep.t_evolution / rep.integral;
    return rep;
}

/// Energy variance of every stored state under H_mol.
inline std::vector<double> molecular_variance(const Trajectory &traj, const SparseMatrix<double> &h_mol) {
    if (traj.states.size() != traj.times.size()) {
        throw DataError("qsl_estimate: molecular spread needs the stored states of every step");
    }
    std::vector<double> out;
    StateVector h_psi;
    for (const auto &psi : traj.states) {
        h_psi.assign(psi.dim(), cplx{});
        h_mol.apply(psi.span(), h_psi);
        const double e = inner(psi.span(), h_psi).real();
        const double n = norm2(h_psi);
        out.push_back(n * n - e * e);
    }
    return out;
}

/// Speed-limit estimate of a trajectory with the instantaneous Hamiltonian.
inline QslReport qsl_estimate(const Trajectory &traj) { return qsl_from_variance(traj.times, traj.variance); }

/// Speed-limit estimate with the spread taken under H_mol instead of H(t).
inline QslReport qsl_estimate(const Trajectory &traj, const SparseMatrix<double> &h_mol) {
    return qsl_from_variance(traj.times, molecular_variance(traj, h_mol), SpreadHamiltonian::molecular);
}

/// Mean over integration steps of ||H(t_k)||_F / ||H_mol||_F.
inline double mean_driving_norm(const Trajectory &traj) {
    const std::size_t n = traj.n_steps();
    if (n == 0 || traj.norm_ratio.size() < n) {
        throw DataError("mean_driving_norm: empty trajectory");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc += traj.norm_ratio[k];
    }
    return acc / static_cast<double>(n);
}

struct CostReport {
    std::uint64_t eta = 0;
    double epsilon = 0.0;
    std::uint64_t measurements = 0; // m per energy estimate
    std::uint64_t iterations = 0;
    std::uint64_t n_params = 0;
    std::uint64_t circuits = 0;
    std::string runtime_class = "O(G N^4 / eps^2)";
};

/// m = ceil(4 eta^2 / eps^2) and circuits = K params m.
inline CostReport cost_model(std::uint64_t iterations, std::uint64_t n_params, std::uint64_t eta, double epsilon) {
    if (iterations == 0 || n_params == 0 || eta == 0 || !(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw DataError("cost_model: iterations, params, eta and epsilon must be positive");
    }
    CostReport rep;
    rep.eta = eta;
    rep.epsilon = epsilon;
    rep.iterations = iterations;
    rep.n_params = n_params;
    const double raw = 4.0 * static_cast<double>(eta * eta) / (epsilon * epsilon);
    // Integers that only miss by rounding (eps = 0.1 and friends) stay put.
    const double nearest = std::round(raw);
    const double m = std::abs(raw - nearest) <= 1e-9 * std::max(1.0, nearest) ? nearest : std::ceil(raw);
    if (m > 1e18) {
        throw DataError("cost_model: measurement count overflows");
    }
    rep.measurements = static_cast<std::uint64_t>(m);
    rep.circuits = iterations * n_params * rep.measurements;
    return rep;
}

struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
};

/// Least-squares fit of y = c x^k in log-log space.
inline PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw DataError("fit_power_law: need at least two paired samples");
    }
    const auto n = static_cast<Eigen::Index>(x.size());
    Eigen::MatrixXd a(n, 2);
    Eigen::VectorXd b(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) {
            throw DataError("fit_power_law: samples must be positive");
        }
        a(i, 0) = 1.0;
        a(i, 1) = std::log(x[k]);
        b(i) = std::log(y[k]);
    }
    const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd res = a * c - b;
    const double mean = b.mean();
    const double ss_tot = (b.array() - mean).square().sum();
    PowerLawFit fit;
    fit.prefactor = std::exp(c(0));
    fit.exponent = c(1);
    fit.r_squared = ss_tot > 0.0 ? 1.0 - res.squaredNorm() / ss_tot : 1.0;
    return fit;
}

/// One row of a speed-limit summary table.
struct SummaryRow {
    std::string system;
    double t_qsl = 0.0;
    double t_oc = 0.0;
    std::size_t n_params = 0;
    double error = 0.0;
};

/// Aligned plain-text table: system, T_QSL, T_OC, #params, |E - E_FCI|.
inline std::string format_summary(std::span<const SummaryRow> rows) {
    std::ostringstream out;
    out << std::left << std::setw(18) << "system" << std::right << std::setw(12) << "T_QSL" << std::setw(10) << "T_OC"
        << std::setw(10) << "#params" << std::setw(14) << "error[Ha]" << "\n";
    for (const auto &r : rows) {
        out << std::left << std::setw(18) << r.system << std::right << std::setw(12) << std::setprecision(4)
            << r.t_qsl << std::setw(10) << r.t_oc << std::setw(10) << r.n_params << std::setw(14)
            << std::scientific << std::setprecision(3) << r.error << std::defaultfloat << "\n";
    }
    return out.str();
}

} // namespace qsc
