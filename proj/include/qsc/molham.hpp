#pragma once

// Molecular integral data (MHX files) and the static molecular Hamiltonian
//
//   H_mol = sum_pq h_pq a+_p a_q + 1/2 sum_pqrs g_pqrs a+_p a+_r a_s a_q + E_nuc
//
// over spin-orbitals. Spin-orbitals are interleaved: 2p is alpha, 2p+1 is beta.
// All quantities are in Hartree atomic units.

#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "qsc/error.hpp"

namespace qsc {

struct Nucleus {
    std::string label;
    double charge = 0.0;
    std::array<double, 3> xyz{}; // bohr
};

/// Dense n^4 tensor of two-electron integrals in chemists' order (pq|rs).
class EriTensor {
  public:
    EriTensor() = default;
    explicit EriTensor(std::size_t n) : n_(n), data_(n * n * n * n, 0.0) {}

    [[nodiscard]] std::size_t size() const noexcept { return n_; }

    double &operator()(std::size_t p, std::size_t q, std::size_t r, std::size_t s) {
        return data_[((p * n_ + q) * n_ + r) * n_ + s];
    }
    double operator()(std::size_t p, std::size_t q, std::size_t r, std::size_t s) const {
        return data_[((p * n_ + q) * n_ + r) * n_ + s];
    }

    [[nodiscard]] const std::vector<double> &data() const noexcept { return data_; }

  private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Spatial-orbital integrals of a closed-shell molecule in an orthonormal MO basis.
///
/// `kinetic` stores K_pq = <p|nabla^2|q> without the -1/2 prefactor and
/// `attraction[i]` stores <p|1/r_i|q> for nucleus i (no charge factor).
struct IntegralSet {
    std::size_t n_spatial = 0;
    std::size_t n_electrons = 0;
    std::vector<Nucleus> nuclei;
    double e_nuc = 0.0;
    double hf_energy = 0.0;
    std::vector<double> orbital_energies;
    Eigen::MatrixXd kinetic;
    std::vector<Eigen::MatrixXd> attraction;
    EriTensor eri;

    [[nodiscard]] std::size_t n_nuclei() const noexcept { return nuclei.size(); }
    [[nodiscard]] std::size_t n_spin_orbitals() const noexcept { return 2 * n_spatial; }
    [[nodiscard]] std::size_t n_qubits() const noexcept { return 2 * n_spatial; }

    /// sum_i Z_i A^i.
    [[nodiscard]] Eigen::MatrixXd weighted_attraction() const {
        Eigen::MatrixXd total = Eigen::MatrixXd::Zero(n_spatial, n_spatial);
        for (std::size_t i = 0; i < nuclei.size(); ++i) {
            total += nuclei[i].charge * attraction[i];
        }
        return total;
    }
};

/// One- and two-body coefficients over spin-orbitals for
/// sum h_PQ a+_P a_Q + 1/2 sum g_PQRS a+_P a+_R a_S a_Q + constant.
struct FermionCoeffs {
    std::size_t n_spin_orbitals = 0;
    Eigen::MatrixXd one_body;
    std::vector<double> two_body; // n^4, index ((P*n+Q)*n+R)*n+S
    double constant = 0.0;

    FermionCoeffs() = default;
    explicit FermionCoeffs(std::size_t n)
        : n_spin_orbitals(n), one_body(Eigen::MatrixXd::Zero(n, n)), two_body(n * n * n * n, 0.0) {}

    double &g(std::size_t p, std::size_t q, std::size_t r, std::size_t s) {
        const auto n = n_spin_orbitals;
        return two_body[((p * n + q) * n + r) * n + s];
    }
    [[nodiscard]] double g(std::size_t p, std::size_t q, std::size_t r, std::size_t s) const {
        const auto n = n_spin_orbitals;
        return two_body[((p * n + q) * n + r) * n + s];
    }

    [[nodiscard]] bool is_zero() const {
        if (constant != 0.0 || !one_body.isZero(0.0)) {
            return false;
        }
        for (double v : two_body) {
            if (v != 0.0) {
                return false;
            }
        }
        return true;
    }

    FermionCoeffs &operator+=(const FermionCoeffs &other) {
        if (other.n_spin_orbitals != n_spin_orbitals) {
            throw DimensionError("FermionCoeffs: spin-orbital count mismatch");
        }
        one_body += other.one_body;
        for (std::size_t k = 0; k < two_body.size(); ++k) {
            two_body[k] += other.two_body[k];
        }
        constant += other.constant;
        return *this;
    }

    FermionCoeffs &operator*=(double factor) {
        one_body *= factor;
        for (double &v : two_body) {
            v *= factor;
        }
        constant *= factor;
        return *this;
    }
};

/// Spin-expand a spatial one-body matrix onto interleaved spin-orbitals.
inline Eigen::MatrixXd spin_expand_one_body(const Eigen::MatrixXd &spatial) {
    const auto n = static_cast<std::size_t>(spatial.rows());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            out(2 * p, 2 * q) = spatial(p, q);
            out(2 * p + 1, 2 * q + 1) = spatial(p, q);
        }
    }
    return out;
}

/// Spin-expand a spatial two-body tensor (pq|rs): g_PQRS = (pq|rs) d(sP,sQ) d(sR,sS).
inline void spin_expand_two_body(const EriTensor &spatial, FermionCoeffs &out) {
    const std::size_t n = spatial.size();
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t s = 0; s < n; ++s) {
                    const double v = spatial(p, q, r, s);
                    if (v == 0.0) {
                        continue;
                    }
                    for (std::size_t a = 0; a < 2; ++a) {
                        for (std::size_t b = 0; b < 2; ++b) {
                            out.g(2 * p + a, 2 * q + a, 2 * r + b, 2 * s + b) = v;
                        }
                    }
                }
            }
        }
    }
}

namespace detail {

inline const nlohmann::json &require(const nlohmann::json &doc, const char *key) {
    auto it = doc.find(key);
    if (it == doc.end()) {
        throw FormatError(std::string("MHX: missing field '") + key + "'");
    }
    return *it;
}

template <class T>
T get_as(const nlohmann::json &node, const std::string &what) {
    try {
        return node.get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw FormatError("MHX: field '" + what + "' has the wrong type: " + e.what());
    }
}

inline Eigen::MatrixXd read_square(const nlohmann::json &node, std::size_t n, const std::string &what) {
    auto rows = get_as<std::vector<std::vector<double>>>(node, what);
    if (rows.size() != n) {
        throw DimensionError("MHX: '" + what + "' has " + std::to_string(rows.size()) +
                             " rows, expected n_spatial=" + std::to_string(n));
    }
    Eigen::MatrixXd m(n, n);
    for (std::size_t p = 0; p < n; ++p) {
        if (rows[p].size() != n) {
            throw DimensionError("MHX: '" + what + "' row " + std::to_string(p) + " has " +
                                 std::to_string(rows[p].size()) + " columns, expected " + std::to_string(n));
        }
        for (std::size_t q = 0; q < n; ++q) {
            m(p, q) = rows[p][q];
        }
    }
    return m;
}

inline void check_symmetric(const Eigen::MatrixXd &m, const std::string &what, double tol) {
    double worst = 0.0;
    Eigen::Index wp = 0, wq = 0;
    for (Eigen::Index p = 0; p < m.rows(); ++p) {
        for (Eigen::Index q = p + 1; q < m.cols(); ++q) {
            const double d = std::abs(m(p, q) - m(q, p));
            if (d > worst) {
                worst = d;
                wp = p;
                wq = q;
            }
        }
    }
    if (worst > tol) {
        std::ostringstream os;
        os << "MHX: '" << what << "' is not symmetric at (" << wp << "," << wq << "), |diff|=" << worst;
        throw DataError(os.str());
    }
}

} // namespace detail

/// Tolerance used when validating symmetric tensors read from disk.
inline constexpr double kSymmetryTolerance = 1e-8;

/// Validate and fill an IntegralSet from a parsed MHX document.
inline IntegralSet integral_set_from_json(const nlohmann::json &doc) {
    using detail::get_as;
    using detail::require;
    if (!doc.is_object()) {
        throw FormatError("MHX: top level must be a JSON object");
    }
    // Report missing fields in file order before any semantic check.
    for (const char *key : {"version", "n_spatial", "n_electrons", "e_nuc", "hf_energy", "mo_basis", "nuclei",
                            "orbital_energies", "kinetic", "attraction", "eri"}) {
        require(doc, key);
    }
    if (get_as<std::string>(doc["version"], "version") != "1") {
        throw FormatError("MHX: unsupported version '" + doc["version"].get<std::string>() + "'");
    }
    if (!get_as<bool>(doc["mo_basis"], "mo_basis")) {
        throw DataError("MHX: integrals must be in an orthonormal MO basis (mo_basis=true)");
    }

    IntegralSet ints;
    const auto n_spatial = get_as<long long>(doc["n_spatial"], "n_spatial");
    const auto n_electrons = get_as<long long>(doc["n_electrons"], "n_electrons");
    if (n_spatial <= 0) {
        throw DataError("MHX: n_spatial must be positive");
    }
    if (n_electrons < 0 || n_electrons > 2 * n_spatial) {
        throw DataError("MHX: n_electrons must lie in [0, 2*n_spatial]");
    }
    if (n_electrons % 2 != 0) {
        throw DataError("MHX: only closed-shell references (even n_electrons) are supported");
    }
    ints.n_spatial = static_cast<std::size_t>(n_spatial);
    ints.n_electrons = static_cast<std::size_t>(n_electrons);
    ints.e_nuc = get_as<double>(doc["e_nuc"], "e_nuc");
    ints.hf_energy = get_as<double>(doc["hf_energy"], "hf_energy");
    const std::size_t n = ints.n_spatial;

    const auto &nuclei = doc["nuclei"];
    if (!nuclei.is_array() || nuclei.empty()) {
        throw FormatError("MHX: 'nuclei' must be a non-empty array");
    }
    for (std::size_t i = 0; i < nuclei.size(); ++i) {
        const auto &node = nuclei[i];
        const std::string where = "nuclei[" + std::to_string(i) + "]";
        Nucleus nuc;
        nuc.label = get_as<std::string>(require(node, "label"), where + ".label");
        nuc.charge = get_as<double>(require(node, "charge"), where + ".charge");
        auto xyz = get_as<std::vector<double>>(require(node, "xyz"), where + ".xyz");
        if (xyz.size() != 3) {
            throw DimensionError("MHX: " + where + ".xyz must have 3 components");
        }
        if (!(nuc.charge > 0.0)) {
            throw DataError("MHX: " + where + ".charge must be positive");
        }
        nuc.xyz = {xyz[0], xyz[1], xyz[2]};
        ints.nuclei.push_back(std::move(nuc));
    }

    ints.orbital_energies = get_as<std::vector<double>>(doc["orbital_energies"], "orbital_energies");
    if (ints.orbital_energies.size() != n) {
        throw DimensionError("MHX: 'orbital_energies' has " + std::to_string(ints.orbital_energies.size()) +
                             " entries, expected n_spatial=" + std::to_string(n));
    }

    ints.kinetic = detail::read_square(doc["kinetic"], n, "kinetic");
    detail::check_symmetric(ints.kinetic, "kinetic", kSymmetryTolerance);

    const auto &attraction = doc["attraction"];
    if (!attraction.is_array()) {
        throw FormatError("MHX: 'attraction' must be an array of matrices");
    }
    if (attraction.size() != ints.nuclei.size()) {
        throw DimensionError("MHX: 'attraction' has " + std::to_string(attraction.size()) +
                             " slabs, expected one per nucleus (" + std::to_string(ints.nuclei.size()) + ")");
    }
    for (std::size_t i = 0; i < attraction.size(); ++i) {
        const std::string what = "attraction[" + std::to_string(i) + "]";
        auto slab = detail::read_square(attraction[i], n, what);
        detail::check_symmetric(slab, what, kSymmetryTolerance);
        for (std::size_t p = 0; p < n; ++p) {
            if (!(slab(p, p) > 0.0)) {
                throw DataError("MHX: " + what + " diagonal entry (" + std::to_string(p) + "," +
                                std::to_string(p) + ") must be positive");
            }
        }
        ints.attraction.push_back(std::move(slab));
    }

    // ERI: unique entries expanded over the 8-fold permutation group. Two
    // entries that map to the same slot must agree.
    ints.eri = EriTensor(n);
    std::vector<char> seen(n * n * n * n, 0);
    const auto &eri = doc["eri"];
    if (!eri.is_array()) {
        throw FormatError("MHX: 'eri' must be an array of [p,q,r,s,value] entries");
    }
    for (std::size_t k = 0; k < eri.size(); ++k) {
        const auto &e = eri[k];
        if (!e.is_array() || e.size() != 5) {
            throw FormatError("MHX: eri[" + std::to_string(k) + "] must be [p,q,r,s,value]");
        }
        std::array<std::size_t, 4> idx{};
        for (std::size_t a = 0; a < 4; ++a) {
            const auto v = get_as<long long>(e[a], "eri[" + std::to_string(k) + "]");
            if (v < 0 || static_cast<std::size_t>(v) >= n) {
                throw DimensionError("MHX: eri[" + std::to_string(k) + "] index out of range for n_spatial=" +
                                     std::to_string(n));
            }
            idx[a] = static_cast<std::size_t>(v);
        }
        const double value = get_as<double>(e[4], "eri[" + std::to_string(k) + "]");
        const auto [p, q, r, s] = idx;
        const std::array<std::array<std::size_t, 4>, 8> perms{{{p, q, r, s},
                                                                 {q, p, r, s},
                                                                 {p, q, s, r},
                                                                 {q, p, s, r},
                                                                 {r, s, p, q},
                                                                 {s, r, p, q},
                                                                 {r, s, q, p},
                                                                 {s, r, q, p}}};
        for (const auto &t : perms) {
            const std::size_t flat = ((t[0] * n + t[1]) * n + t[2]) * n + t[3];
            double &slot = ints.eri(t[0], t[1], t[2], t[3]);
            if (seen[flat] && std::abs(slot - value) > kSymmetryTolerance) {
                std::ostringstream os;
                os << "MHX: eri violates permutation symmetry at (" << t[0] << "," << t[1] << "," << t[2] << ","
                   << t[3] << "), |diff|=" << std::abs(slot - value);
                throw DataError(os.str());
            }
            if (!seen[flat]) {
                slot = value;
                seen[flat] = 1;
            }
        }
    }
    return ints;
}

/// Read and validate an MHX file.
inline IntegralSet parse_integral_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("MHX: cannot open '" + path.string() + "'");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error &e) {
        throw FormatError("MHX: '" + path.string() + "' is not valid JSON: " + e.what());
    }
    return integral_set_from_json(doc);
}

/// Serialize to an MHX document. Tensor payloads round-trip bit-identically.
inline nlohmann::json to_json(const IntegralSet &ints) {
    const std::size_t n = ints.n_spatial;
    nlohmann::json doc;
    doc["version"] = "1";
    doc["n_spatial"] = n;
    doc["n_electrons"] = ints.n_electrons;
    doc["e_nuc"] = ints.e_nuc;
    doc["hf_energy"] = ints.hf_energy;
    doc["mo_basis"] = true;
    auto nuclei = nlohmann::json::array();
    for (const auto &nuc : ints.nuclei) {
        nuclei.push_back({{"label", nuc.label}, {"charge", nuc.charge}, {"xyz", nuc.xyz}});
    }
    doc["nuclei"] = nuclei;
    doc["orbital_energies"] = ints.orbital_energies;
    auto matrix = [n](const Eigen::MatrixXd &m) {
        auto rows = nlohmann::json::array();
        for (std::size_t p = 0; p < n; ++p) {
            auto row = nlohmann::json::array();
            for (std::size_t q = 0; q < n; ++q) {
                row.push_back(m(p, q));
            }
            rows.push_back(row);
        }
        return rows;
    };
    doc["kinetic"] = matrix(ints.kinetic);
    auto slabs = nlohmann::json::array();
    for (const auto &a : ints.attraction) {
        slabs.push_back(matrix(a));
    }
    doc["attraction"] = slabs;
    auto eri = nlohmann::json::array();
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q <= p; ++q) {
            for (std::size_t r = 0; r < n; ++r) {
                for (std::size_t s = 0; s <= r; ++s) {
                    if (p * (p + 1) / 2 + q < r * (r + 1) / 2 + s) {
                        continue;
                    }
                    eri.push_back({p, q, r, s, ints.eri(p, q, r, s)});
                }
            }
        }
    }
    doc["eri"] = eri;
    return doc;
}

inline void write_integral_file(const IntegralSet &ints, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("MHX: cannot write '" + path.string() + "'");
    }
    out << to_json(ints).dump(1) << '\n';
}

/// Static molecular Hamiltonian: h = -K/2 - sum_i Z_i A^i, g = (pq|rs), constant = E_nuc.
inline FermionCoeffs build_core_hamiltonian(const IntegralSet &ints) {
    FermionCoeffs fc(ints.n_spin_orbitals());
    const Eigen::MatrixXd h = -0.5 * ints.kinetic - ints.weighted_attraction();
    fc.one_body = spin_expand_one_body(h);
    spin_expand_two_body(ints.eri, fc);
    fc.constant = ints.e_nuc;
    return fc;
}

} // namespace qsc
