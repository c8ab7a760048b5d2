#pragma once

// Restriction of number- and spin-conserving operators to one (N, S_z)
// sector of the register. Molecular Hamiltonians and every control direction
// conserve both, so a trajectory started in a sector never leaves it.

#include <bit>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "qsc/error.hpp"
#include "qsc/sparse.hpp"
#include "qsc/spectrum.hpp"

namespace qsc {

class SectorBasis {
  public:
    SectorBasis() = default;
    SectorBasis(std::size_t n_qubits, Sector sector) : n_qubits_(n_qubits), sector_(sector) {
        if (n_qubits > kMaxQubits) {
            throw DimensionError("SectorBasis: too many qubits");
        }
        const std::uint64_t full = std::uint64_t{1} << n_qubits;
        position_.assign(full, -1);
        for (std::uint64_t b = 0; b < full; ++b) {
            if (sector.contains(b)) {
                position_[b] = static_cast<std::int64_t>(states_.size());
                states_.push_back(b);
            }
        }
        if (states_.empty()) {
            throw DataError("SectorBasis: sector is empty");
        }
    }

    /// Sector holding every nonzero amplitude of psi; throws if there is none.
    static Sector sector_of(const QuantumState &psi, double tol = 1e-12) {
        std::optional<Sector> found;
        constexpr std::uint64_t even = 0x5555555555555555ULL;
        for (std::uint64_t b = 0; b < psi.dim(); ++b) {
            if (std::abs(psi[b]) <= tol) {
                continue;
            }
            const int na = std::popcount(b & even);
            const int nb = std::popcount(b & ~even);
            const Sector s{static_cast<std::size_t>(na + nb), na - nb};
            if (found && (found->n_particles != s.n_particles || found->two_sz != s.two_sz)) {
                throw DataError("SectorBasis: state spans several (N, Sz) sectors");
            }
            found = s;
        }
        if (!found) {
            throw DataError("SectorBasis: zero state");
        }
        return *found;
    }

    [[nodiscard]] std::size_t dim() const noexcept { return states_.size(); }
    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] Sector sector() const noexcept { return sector_; }
    [[nodiscard]] std::span<const std::uint64_t> states() const noexcept { return states_; }

    [[nodiscard]] Eigen::VectorXcd gather(std::span<const cplx> full, double leak_tol = 1e-10) const {
        if (full.size() != position_.size()) {
            throw DimensionError("SectorBasis: state dimension mismatch");
        }
        Eigen::VectorXcd out(static_cast<Eigen::Index>(dim()));
        double inside = 0.0, total = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) {
            out(static_cast<Eigen::Index>(i)) = full[states_[i]];
            inside += std::norm(full[states_[i]]);
        }
        for (const auto &a : full) {
            total += std::norm(a);
        }
        if (total - inside > leak_tol) {
            throw DataError("SectorBasis: state has weight outside the sector");
        }
        return out;
    }

    [[nodiscard]] StateVector scatter(const Eigen::VectorXcd &v) const {
        StateVector out(position_.size());
        for (std::size_t i = 0; i < dim(); ++i) {
            out[states_[i]] = v(static_cast<Eigen::Index>(i));
        }
        return out;
    }

    /// Dense block of a sparse operator on the sector; entries leaving the
    /// sector must vanish.
    template <class Scalar>
    [[nodiscard]] Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> restrict(const SparseMatrix<Scalar> &op,
                                                                               double leak_tol = 1e-12) const {
        if (op.dim != position_.size()) {
            throw DimensionError("SectorBasis: operator dimension mismatch");
        }
        const auto n = static_cast<Eigen::Index>(dim());
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out =
            Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(n, n);
        for (std::size_t i = 0; i < dim(); ++i) {
            const auto r = states_[i];
            for (std::size_t k = op.row_ptr[r]; k < op.row_ptr[r + 1]; ++k) {
                const auto pos = position_[op.cols[k]];
                if (pos < 0) {
                    if (std::abs(op.values[k]) > leak_tol) {
                        throw DataError("SectorBasis: operator does not conserve the sector");
                    }
                    continue;
                }
                out(static_cast<Eigen::Index>(i), pos) = op.values[k];
            }
        }
        return out;
    }

  private:
    std::size_t n_qubits_ = 0;
    Sector sector_;
    std::vector<std::uint64_t> states_;
    std::vector<std::int64_t> position_;
};

} // namespace qsc
