#pragma once

// Compressed-row operators on the 2^N computational basis and state vectors.

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "qsc/error.hpp"
#include "qsc/pauli.hpp"

namespace qsc {

using StateVector = std::vector<cplx>;

/// CSR matrix. Column indices of a row are sorted.
template <class Scalar>
struct SparseMatrix {
    std::size_t dim = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<std::uint32_t> cols;
    std::vector<Scalar> values;
    bool hermitian = false;

    [[nodiscard]] std::size_t nnz() const noexcept { return values.size(); }

    /// y = A x
    void apply(std::span<const cplx> x, std::span<cplx> y) const {
        for (std::size_t r = 0; r < dim; ++r) {
            cplx acc{};
            for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
                acc += values[k] * x[cols[k]];
            }
            y[r] = acc;
        }
    }

    [[nodiscard]] StateVector operator*(std::span<const cplx> x) const {
        StateVector y(dim);
        apply(x, y);
        return y;
    }

    [[nodiscard]] double frobenius_norm() const {
        double s = 0.0;
        for (const auto &v : values) {
            s += std::norm(v);
        }
        return std::sqrt(s);
    }

    [[nodiscard]] cplx at(std::size_t r, std::size_t c) const {
        const auto first = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[r]);
        const auto last = cols.begin() + static_cast<std::ptrdiff_t>(row_ptr[r + 1]);
        auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(c));
        if (it == last || *it != c) {
            return {};
        }
        return values[static_cast<std::size_t>(it - cols.begin())];
    }

    /// max |A - A^dagger| over stored entries (and their mirrors).
    [[nodiscard]] double hermiticity_defect() const {
        double worst = 0.0;
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
                const cplx mirror = at(cols[k], r);
                worst = std::max(worst, std::abs(cplx(values[k]) - std::conj(cplx(mirror))));
            }
        }
        return worst;
    }
};

using SparseOperator = SparseMatrix<cplx>;

/// Normalized state on n qubits.
class QuantumState {
  public:
    static constexpr double kNormTolerance = 1e-10;

    QuantumState() = default;
    QuantumState(std::size_t n_qubits, StateVector amplitudes)
        : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
        if (amps_.size() != (std::size_t{1} << n_qubits)) {
            throw DimensionError("QuantumState: amplitude count must be 2^n_qubits");
        }
        const double nrm = norm();
        if (std::abs(nrm - 1.0) > kNormTolerance) {
            throw IntegrityError("QuantumState: norm " + std::to_string(nrm) + " differs from 1");
        }
    }

    /// Computational basis state |index>.
    static QuantumState basis(std::size_t n_qubits, std::size_t index) {
        StateVector v(std::size_t{1} << n_qubits);
        v.at(index) = 1.0;
        return {n_qubits, std::move(v)};
    }

    /// Closed-shell Hartree-Fock determinant: the lowest n_electrons spin-orbitals occupied.
    static QuantumState hartree_fock(std::size_t n_qubits, std::size_t n_electrons) {
        return basis(n_qubits, (std::size_t{1} << n_electrons) - 1);
    }

    /// Normalize an arbitrary nonzero vector.
    static QuantumState normalized(std::size_t n_qubits, StateVector v) {
        double s = 0.0;
        for (const auto &a : v) {
            s += std::norm(a);
        }
        if (s == 0.0) {
            throw DataError("QuantumState: cannot normalize the zero vector");
        }
        const double inv = 1.0 / std::sqrt(s);
        for (auto &a : v) {
            a *= inv;
        }
        return {n_qubits, std::move(v)};
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] std::size_t dim() const noexcept { return amps_.size(); }
    [[nodiscard]] const StateVector &amplitudes() const noexcept { return amps_; }
    [[nodiscard]] std::span<const cplx> span() const noexcept { return amps_; }
    const cplx &operator[](std::size_t i) const { return amps_[i]; }

    [[nodiscard]] double norm() const {
        double s = 0.0;
        for (const auto &a : amps_) {
            s += std::norm(a);
        }
        return std::sqrt(s);
    }

  private:
    std::size_t n_qubits_ = 0;
    StateVector amps_;
};

inline cplx inner(std::span<const cplx> a, std::span<const cplx> b) {
    cplx s{};
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += std::conj(a[i]) * b[i];
    }
    return s;
}

inline double norm2(std::span<const cplx> a) {
    double s = 0.0;
    for (const auto &v : a) {
        s += std::norm(v);
    }
    return std::sqrt(s);
}

/// Entries with magnitude at or below this are not stored.
inline constexpr double kSparseDropTolerance = 1e-14;

/// Matrix of a Pauli sum in the computational basis (qubit j = bit j).
inline SparseOperator to_sparse_matrix(const PauliSum &ps, std::size_t n_qubits) {
    if (ps.n_qubits() != n_qubits) {
        throw DimensionError("to_sparse_matrix: PauliSum acts on " + std::to_string(ps.n_qubits()) +
                             " qubits, expected " + std::to_string(n_qubits));
    }
    const std::size_t dim = std::size_t{1} << n_qubits;

    // Group terms by flip mask; each group fills one entry per row.
    struct Group {
        std::uint64_t x;
        std::vector<std::pair<std::uint64_t, cplx>> zc; // (z mask, coeff * i^{n_y})
    };
    std::vector<Group> groups;
    for (const auto &t : ps.terms()) {
        if (groups.empty() || groups.back().x != t.string.x) {
            groups.push_back({t.string.x, {}});
        }
        groups.back().zc.emplace_back(t.string.z, t.coeff * i_pow(t.string.n_y()));
    }

    SparseOperator m;
    m.dim = dim;
    m.hermitian = ps.is_hermitian();
    m.row_ptr.assign(dim + 1, 0);
    std::vector<std::pair<std::uint32_t, cplx>> row;
    for (std::size_t r = 0; r < dim; ++r) {
        row.clear();
        for (const auto &g : groups) {
            const std::uint64_t col = r ^ g.x;
            cplx v{};
            for (const auto &[z, c] : g.zc) {
                v += (std::popcount(col & z) & 1) ? -c : c;
            }
            if (std::abs(v) > kSparseDropTolerance) {
                row.emplace_back(static_cast<std::uint32_t>(col), v);
            }
        }
        std::sort(row.begin(), row.end(), [](const auto &a, const auto &b) { return a.first < b.first; });
        for (const auto &[c, v] : row) {
            m.cols.push_back(c);
            m.values.push_back(v);
        }
        m.row_ptr[r + 1] = m.cols.size();
    }
    return m;
}

/// <psi|H|psi> for hermitian H. The imaginary residue is checked and discarded.
template <class Scalar>
double expectation(const SparseMatrix<Scalar> &op, const QuantumState &psi) {
    if (op.dim != psi.dim()) {
        throw DimensionError("expectation: operator and state dimensions differ");
    }
    if (!op.hermitian) {
        throw DataError("expectation: operator is not flagged hermitian");
    }
    const StateVector h_psi = op * psi.span();
    const cplx e = inner(psi.span(), h_psi);
    if (std::abs(e.imag()) > 1e-8) {
        throw IntegrityError("expectation: imaginary part " + std::to_string(e.imag()) + " exceeds 1e-8");
    }
    return e.real();
}

/// Real copy of a complex operator. Every imaginary part must be exactly zero.
inline SparseMatrix<double> to_real(const SparseOperator &op) {
    SparseMatrix<double> out;
    out.dim = op.dim;
    out.row_ptr = op.row_ptr;
    out.cols = op.cols;
    out.hermitian = op.hermitian;
    out.values.reserve(op.nnz());
    for (const auto &v : op.values) {
        if (v.imag() != 0.0) {
            throw DataError("to_real: operator has complex matrix elements");
        }
        out.values.push_back(v.real());
    }
    return out;
}

} // namespace qsc
