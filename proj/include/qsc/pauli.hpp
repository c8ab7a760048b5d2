#pragma once

// Pauli strings, weighted Pauli sums and the Jordan-Wigner mapping.
//
// Qubit j is bit j of a computational-basis index and corresponds to
// spin-orbital j. A string is stored as two bit masks: bit j of `x` set means
// the j-th factor contains X, bit j of `z` set means it contains Z; both set
// is Y. The coefficient attached to a (x, z) pair in a PauliSum multiplies the
// *standard* Pauli product (Y, not XZ).

#include <algorithm>
#include <bit>
#include <complex>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qsc/error.hpp"
#include "qsc/molham.hpp"

namespace qsc {

using cplx = std::complex<double>;

inline constexpr std::size_t kMaxQubits = 30;

struct PauliString {
    std::uint64_t x = 0;
    std::uint64_t z = 0;

    friend bool operator==(const PauliString &, const PauliString &) = default;
    friend auto operator<=>(const PauliString &a, const PauliString &b) {
        if (a.x != b.x) {
            return a.x <=> b.x;
        }
        return a.z <=> b.z;
    }

    [[nodiscard]] bool is_identity() const noexcept { return x == 0 && z == 0; }
    [[nodiscard]] int n_y() const noexcept { return std::popcount(x & z); }

    /// Parse "IXYZ"-style text, leftmost character is qubit 0.
    static PauliString from_string(const std::string &text) {
        PauliString p;
        for (std::size_t j = 0; j < text.size(); ++j) {
            const std::uint64_t bit = std::uint64_t{1} << j;
            switch (text[j]) {
            case 'I': break;
            case 'X': p.x |= bit; break;
            case 'Y': p.x |= bit; p.z |= bit; break;
            case 'Z': p.z |= bit; break;
            default: throw DataError(std::string("PauliString: invalid character '") + text[j] + "'");
            }
        }
        return p;
    }

    [[nodiscard]] std::string to_string(std::size_t n_qubits) const {
        std::string s(n_qubits, 'I');
        for (std::size_t j = 0; j < n_qubits; ++j) {
            const bool xb = (x >> j) & 1U;
            const bool zb = (z >> j) & 1U;
            s[j] = xb ? (zb ? 'Y' : 'X') : (zb ? 'Z' : 'I');
        }
        return s;
    }
};

struct PauliStringHash {
    std::size_t operator()(const PauliString &p) const noexcept {
        return std::hash<std::uint64_t>{}(p.x * 0x9e3779b97f4a7c15ULL ^ (p.z + 0x7f4a7c159e3779b9ULL));
    }
};

/// i^k for integer k.
inline cplx i_pow(int k) {
    switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
    }
}

struct PauliTerm {
    cplx coeff;
    PauliString string;
};

/// Weighted sum of Pauli strings on a fixed register, kept in canonical order
/// (sorted by (x, z), no duplicates, no zero coefficients).
class PauliSum {
  public:
    /// Coefficients smaller than this after merging are dropped.
    static constexpr double kDropTolerance = 1e-14;

    PauliSum() = default;
    explicit PauliSum(std::size_t n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits > kMaxQubits) {
            throw DimensionError("PauliSum: at most " + std::to_string(kMaxQubits) + " qubits supported");
        }
    }

    /// Build from arbitrary terms; duplicates are merged and the result canonicalized.
    PauliSum(std::size_t n_qubits, std::vector<PauliTerm> terms) : PauliSum(n_qubits) {
        const std::uint64_t mask = n_qubits == 64 ? ~0ULL : ((std::uint64_t{1} << n_qubits) - 1);
        std::unordered_map<PauliString, cplx, PauliStringHash> acc;
        for (const auto &t : terms) {
            if ((t.string.x | t.string.z) & ~mask) {
                throw DimensionError("PauliSum: string acts outside the " + std::to_string(n_qubits) +
                                     "-qubit register");
            }
            acc[t.string] += t.coeff;
        }
        assign_from_map(acc);
    }

    [[nodiscard]] std::size_t n_qubits() const noexcept { return n_qubits_; }
    [[nodiscard]] const std::vector<PauliTerm> &terms() const noexcept { return terms_; }
    [[nodiscard]] std::size_t size() const noexcept { return terms_.size(); }

    /// True when every coefficient is real to `tol` (the sum is then hermitian).
    [[nodiscard]] bool is_hermitian(double tol = 1e-12) const {
        return std::all_of(terms_.begin(), terms_.end(), [tol](const auto &t) { return std::abs(t.coeff.imag()) <= tol; });
    }

    /// Coefficient of a string, zero when absent.
    [[nodiscard]] cplx coefficient(const PauliString &p) const {
        auto it = std::lower_bound(terms_.begin(), terms_.end(), p,
                                   [](const PauliTerm &t, const PauliString &s) { return t.string < s; });
        return (it != terms_.end() && it->string == p) ? it->coeff : cplx{};
    }

    PauliSum &operator+=(const PauliSum &other) {
        if (other.n_qubits_ != n_qubits_) {
            throw DimensionError("PauliSum: register size mismatch");
        }
        std::unordered_map<PauliString, cplx, PauliStringHash> acc;
        for (const auto &t : terms_) {
            acc[t.string] += t.coeff;
        }
        for (const auto &t : other.terms_) {
            acc[t.string] += t.coeff;
        }
        assign_from_map(acc);
        return *this;
    }

    PauliSum &operator*=(cplx factor) {
        for (auto &t : terms_) {
            t.coeff *= factor;
        }
        return *this;
    }

    void assign_from_map(const std::unordered_map<PauliString, cplx, PauliStringHash> &acc) {
        terms_.clear();
        for (const auto &[s, c] : acc) {
            if (std::abs(c) > kDropTolerance) {
                terms_.push_back({c, s});
            }
        }
        std::sort(terms_.begin(), terms_.end(), [](const auto &a, const auto &b) { return a.string < b.string; });
    }

  private:
    std::size_t n_qubits_ = 0;
    std::vector<PauliTerm> terms_;
};

namespace detail {

// Products are accumulated in "XZ form", X^x Z^z without the i of Y, where
//   (X^a Z^b)(X^c Z^d) = (-1)^{|b & c|} X^{a^c} Z^{b^d}
// and converted at the end with X^x Z^z = (-i)^{|x & z|} P(x, z).
struct XzTerm {
    double coeff;
    PauliString string;
};

using XzProduct = std::vector<XzTerm>;

/// JW image of a (dagger=true) or a (dagger=false) on mode p, in XZ form.
inline XzProduct ladder_image(std::size_t p, bool dagger) {
    const std::uint64_t bit = std::uint64_t{1} << p;
    const std::uint64_t below = bit - 1;
    // a  = 1/2 Z_<p X_p (1 - Z_p),  a+ = 1/2 Z_<p X_p (1 + Z_p)
    return {{0.5, {bit, below}}, {dagger ? 0.5 : -0.5, {bit, below | bit}}};
}

inline XzProduct multiply(const XzProduct &lhs, const XzProduct &rhs) {
    XzProduct out;
    out.reserve(lhs.size() * rhs.size());
    for (const auto &a : lhs) {
        for (const auto &b : rhs) {
            const double sign = (std::popcount(a.string.z & b.string.x) & 1) ? -1.0 : 1.0;
            out.push_back({sign * a.coeff * b.coeff, {a.string.x ^ b.string.x, a.string.z ^ b.string.z}});
        }
    }
    return out;
}

inline void accumulate(std::unordered_map<PauliString, cplx, PauliStringHash> &acc, const XzProduct &prod,
                       double weight) {
    for (const auto &t : prod) {
        acc[t.string] += weight * t.coeff * i_pow(-t.string.n_y());
    }
}

} // namespace detail

/// Jordan-Wigner image of a single product of ladder operators, applied left to
/// right as written, e.g. {{p,true},{q,false}} is a+_p a_q.
inline PauliSum jordan_wigner_product(std::size_t n_qubits, const std::vector<std::pair<std::size_t, bool>> &ops,
                                      cplx coeff = 1.0) {
    detail::XzProduct prod{{1.0, {0, 0}}};
    for (const auto &[mode, dagger] : ops) {
        if (mode >= n_qubits) {
            throw DimensionError("jordan_wigner_product: mode index out of range");
        }
        prod = detail::multiply(prod, detail::ladder_image(mode, dagger));
    }
    std::vector<PauliTerm> terms;
    for (const auto &t : prod) {
        terms.push_back({coeff * t.coeff * i_pow(-t.string.n_y()), t.string});
    }
    return PauliSum(n_qubits, std::move(terms));
}

/// Jordan-Wigner mapping of a number-conserving fermionic operator
///   sum h_PQ a+_P a_Q + 1/2 sum g_PQRS a+_P a+_R a_S a_Q + constant.
inline PauliSum jordan_wigner(const FermionCoeffs &fc, double hermiticity_tol = 1e-12) {
    const std::size_t n = fc.n_spin_orbitals;
    if (n > kMaxQubits) {
        throw DimensionError("jordan_wigner: too many spin-orbitals");
    }
    if (static_cast<std::size_t>(fc.one_body.rows()) != n || static_cast<std::size_t>(fc.one_body.cols()) != n ||
        fc.two_body.size() != n * n * n * n) {
        throw DimensionError("jordan_wigner: coefficient tensor shapes disagree with n_spin_orbitals");
    }
    const double asym = (fc.one_body - fc.one_body.transpose()).cwiseAbs().maxCoeff();
    if (asym > hermiticity_tol) {
        throw DataError("jordan_wigner: one-body coefficients are not hermitian (max asymmetry " +
                        std::to_string(asym) + ")");
    }
    // The two-body operator is hermitian iff g_PQRS = g_QPSR (real case).
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t s = 0; s < n; ++s) {
                    if (std::abs(fc.g(p, q, r, s) - fc.g(q, p, s, r)) > hermiticity_tol) {
                        throw DataError("jordan_wigner: two-body coefficients are not hermitian at (" +
                                        std::to_string(p) + "," + std::to_string(q) + "," + std::to_string(r) +
                                        "," + std::to_string(s) + ")");
                    }
                }
            }
        }
    }

    std::vector<detail::XzProduct> creators(n), annihilators(n);
    for (std::size_t p = 0; p < n; ++p) {
        creators[p] = detail::ladder_image(p, true);
        annihilators[p] = detail::ladder_image(p, false);
    }

    std::unordered_map<PauliString, cplx, PauliStringHash> acc;
    if (fc.constant != 0.0) {
        acc[PauliString{}] += fc.constant;
    }
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            const double h = fc.one_body(p, q);
            if (h != 0.0) {
                detail::accumulate(acc, detail::multiply(creators[p], annihilators[q]), h);
            }
        }
    }
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t r = 0; r < n; ++r) {
            if (p == r) {
                continue; // a+_p a+_p = 0
            }
            const auto pr = detail::multiply(creators[p], creators[r]);
            for (std::size_t s = 0; s < n; ++s) {
                const auto prs = detail::multiply(pr, annihilators[s]);
                for (std::size_t q = 0; q < n; ++q) {
                    if (q == s) {
                        continue;
                    }
                    const double g = fc.g(p, q, r, s);
                    if (g != 0.0) {
                        detail::accumulate(acc, detail::multiply(prs, annihilators[q]), 0.5 * g);
                    }
                }
            }
        }
    }
    PauliSum out(n);
    out.assign_from_map(acc);
    return out;
}

} // namespace qsc
