#pragma once

// Five-ingredient control of the molecular Hamiltonian.
//
// At every control knot the perturbation is
//
//   V = a0 [ sum_pq h~_pq a+_p a_q + 1/2 sum_pqrs g~_pqrs a+_p a+_r a_s a_q ]
//
// with, over spatial orbitals,
//
//   h~_pq = mu K_pq - sum_i Z~_i A^i_pq                            (p != q)
//   h~_pp = (b0 + mu) K_pp - sum_i (b0 Z_i + Z~_i) A^i_pp
//   g~_pqrs = (rho + b0) g   if p = r and q = s
//           = (rho - b0) g   else if p = s and q = r
//           =  rho g         otherwise
//
// where mu stands for 1/(2 m_e) and rho for the inverse screening 1/eps.
// The diagonal term is the b0 -> 0 continuation of b0 (Z_i + Z~_i / b0).

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "qsc/error.hpp"
#include "qsc/molham.hpp"

namespace qsc {

struct ControlPoint {
    double a0 = 0.0;
    double b0 = 0.0;
    double mu = 0.0;
    double rho = 0.0;
    std::vector<double> zeff;

    [[nodiscard]] bool is_finite() const {
        if (!std::isfinite(a0) || !std::isfinite(b0) || !std::isfinite(mu) || !std::isfinite(rho)) {
            return false;
        }
        for (double z : zeff) {
            if (!std::isfinite(z)) {
                return false;
            }
        }
        return true;
    }
};

/// Number of parameters per knot: a0, b0, mu, rho and one effective charge per nucleus.
inline constexpr std::size_t params_per_knot(std::size_t n_nuclei) { return 4 + n_nuclei; }

/// Names of the per-knot parameters in flattening order.
inline std::vector<std::string> knot_parameter_names(std::size_t n_nuclei) {
    std::vector<std::string> names{"a0", "b0", "mu", "rho"};
    for (std::size_t i = 0; i < n_nuclei; ++i) {
        names.push_back("zeff" + std::to_string(i));
    }
    return names;
}

/// Piecewise-constant control over [0, T], flattened knot-major.
class ControlSchedule {
  public:
    ControlSchedule() = default;
    ControlSchedule(std::size_t n_ctrl, std::size_t n_steps, double total_time, std::size_t n_nuclei,
                    std::vector<double> params, std::size_t per_knot = 0)
        : n_ctrl_(n_ctrl), n_steps_(n_steps), total_time_(total_time), n_nuclei_(n_nuclei),
          per_knot_(per_knot == 0 ? params_per_knot(n_nuclei) : per_knot), params_(std::move(params)) {
        validate_shape(n_ctrl, n_steps, total_time);
        if (params_.size() != n_ctrl_ * per_knot_) {
            throw DimensionError("ControlSchedule: parameter vector has length " + std::to_string(params_.size()) +
                                 ", expected n_ctrl*per_knot = " + std::to_string(n_ctrl_ * per_knot_));
        }
    }

    static void validate_shape(std::size_t n_ctrl, std::size_t n_steps, double total_time) {
        if (n_ctrl == 0 || n_steps == 0) {
            throw DataError("ControlSchedule: n_ctrl and n_steps must be positive");
        }
        if (n_steps % n_ctrl != 0) {
            throw DataError("ControlSchedule: n_steps (" + std::to_string(n_steps) +
                            ") must be divisible by n_ctrl (" + std::to_string(n_ctrl) + ")");
        }
        if (!(total_time > 0.0) || !std::isfinite(total_time)) {
            throw DataError("ControlSchedule: total time must be positive");
        }
    }

    [[nodiscard]] std::size_t n_ctrl() const noexcept { return n_ctrl_; }
    [[nodiscard]] std::size_t n_steps() const noexcept { return n_steps_; }
    [[nodiscard]] double total_time() const noexcept { return total_time_; }
    [[nodiscard]] double dt() const noexcept { return total_time_ / static_cast<double>(n_steps_); }
    [[nodiscard]] std::size_t n_nuclei() const noexcept { return n_nuclei_; }
    [[nodiscard]] std::size_t per_knot() const noexcept { return per_knot_; }
    [[nodiscard]] std::size_t steps_per_knot() const noexcept { return n_steps_ / n_ctrl_; }

    [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }
    std::span<double> parameters() noexcept { return params_; }
    [[nodiscard]] std::span<const double> knot(std::size_t k) const {
        return std::span<const double>(params_).subspan(k * per_knot_, per_knot_);
    }

    /// Knot that governs integration step k.
    [[nodiscard]] std::size_t knot_of_step(std::size_t k) const {
        if (k >= n_steps_) {
            throw DataError("ControlSchedule: step " + std::to_string(k) + " out of range [0, " +
                            std::to_string(n_steps_) + ")");
        }
        return k * n_ctrl_ / n_steps_;
    }

    /// Five-ingredient view of knot k.
    [[nodiscard]] ControlPoint point(std::size_t k) const {
        if (per_knot_ != params_per_knot(n_nuclei_)) {
            throw DataError("ControlSchedule: schedule does not use the five-ingredient layout");
        }
        auto v = knot(k);
        ControlPoint cp{v[0], v[1], v[2], v[3], {}};
        cp.zeff.assign(v.begin() + 4, v.end());
        return cp;
    }

    /// Same schedule with a different integration grid (n_ctrl must divide it).
    [[nodiscard]] ControlSchedule with_steps(std::size_t n_steps) const {
        return {n_ctrl_, n_steps, total_time_, n_nuclei_, params_, per_knot_};
    }

  private:
    std::size_t n_ctrl_ = 0;
    std::size_t n_steps_ = 0;
    double total_time_ = 0.0;
    std::size_t n_nuclei_ = 0;
    std::size_t per_knot_ = 0;
    std::vector<double> params_;
};

/// Piecewise-constant lookup: the control point active at integration step k.
inline ControlPoint control_at(const ControlSchedule &s, std::size_t k) { return s.point(s.knot_of_step(k)); }

/// Perturbation coefficients of one control point, spin-expanded.
inline FermionCoeffs assemble_perturbation(const IntegralSet &ints, const ControlPoint &cp) {
    if (cp.zeff.size() != ints.n_nuclei()) {
        throw DimensionError("assemble_perturbation: expected " + std::to_string(ints.n_nuclei()) +
                             " effective charges, got " + std::to_string(cp.zeff.size()));
    }
    if (!cp.is_finite()) {
        throw DataError("assemble_perturbation: non-finite control parameter");
    }
    const std::size_t n = ints.n_spatial;
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            double v = 0.0;
            if (p != q) {
                v = cp.mu * ints.kinetic(p, q);
                for (std::size_t i = 0; i < ints.n_nuclei(); ++i) {
                    v -= cp.zeff[i] * ints.attraction[i](p, q);
                }
            } else {
                v = (cp.b0 + cp.mu) * ints.kinetic(p, p);
                for (std::size_t i = 0; i < ints.n_nuclei(); ++i) {
                    v -= (cp.b0 * ints.nuclei[i].charge + cp.zeff[i]) * ints.attraction[i](p, p);
                }
            }
            h(p, q) = cp.a0 * v;
        }
    }
    EriTensor g(n);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t s = 0; s < n; ++s) {
                    double factor = cp.rho;
                    if (p == r && q == s) {
                        factor = cp.rho + cp.b0;
                    } else if (p == s && q == r) {
                        factor = cp.rho - cp.b0;
                    }
                    g(p, q, r, s) = cp.a0 * factor * ints.eri(p, q, r, s);
                }
            }
        }
    }
    FermionCoeffs fc(ints.n_spin_orbitals());
    fc.one_body = spin_expand_one_body(h);
    spin_expand_two_body(g, fc);
    return fc;
}

/// Shape of a run: knots, integration steps, duration, nuclei.
struct ScheduleConfig {
    std::size_t n_ctrl = 1;
    std::size_t n_steps = 1;
    double total_time = 1.0;
    std::size_t n_nuclei = 0;
};

/// Uniform [0,1) double from a 64-bit engine, independent of the standard library.
inline double uniform01(std::mt19937_64 &rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Initial guess: mu, rho, Z~ ~ U(0,1); a0 ramps 1 -> 0 and b0 ramps 0 -> 1,
/// sampled at the knot midpoints.
inline ControlSchedule init_parameters(const ScheduleConfig &cfg, std::uint64_t seed) {
    ControlSchedule::validate_shape(cfg.n_ctrl, cfg.n_steps, cfg.total_time);
    std::mt19937_64 rng(seed);
    const std::size_t per = params_per_knot(cfg.n_nuclei);
    std::vector<double> params(cfg.n_ctrl * per);
    for (std::size_t k = 0; k < cfg.n_ctrl; ++k) {
        const double frac = (static_cast<double>(k) + 0.5) / static_cast<double>(cfg.n_ctrl);
        double *v = params.data() + k * per;
        v[0] = 1.0 - frac;
        v[1] = frac;
        v[2] = uniform01(rng);
        v[3] = uniform01(rng);
        for (std::size_t i = 0; i < cfg.n_nuclei; ++i) {
            v[4 + i] = uniform01(rng);
        }
    }
    return {cfg.n_ctrl, cfg.n_steps, cfg.total_time, cfg.n_nuclei, std::move(params)};
}

} // namespace qsc
