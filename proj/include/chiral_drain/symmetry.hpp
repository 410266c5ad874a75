#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chiral_drain/core.hpp"
#include "chiral_drain/lattice.hpp"
#include "chiral_drain/spectral.hpp"

namespace chiral_drain {

enum class SigmaProvenance {
    from_eigenmodes,
    bipartite,
    inversion,
    bipartite_inversion,
    hofstadter_z0,
    hofstadter_0z,
    hofstadter_zz,
};

inline std::string_view to_string(SigmaProvenance p) {
    switch (p) {
        case SigmaProvenance::from_eigenmodes: return "from_eigenmodes";
        case SigmaProvenance::bipartite: return "bipartite";
        case SigmaProvenance::inversion: return "inversion";
        case SigmaProvenance::bipartite_inversion: return "bipartite_inversion";
        case SigmaProvenance::hofstadter_z0: return "hofstadter_z0";
        case SigmaProvenance::hofstadter_0z: return "hofstadter_0z";
        case SigmaProvenance::hofstadter_zz: return "hofstadter_zz";
    }
    return "unknown";
}

/// Unitary symmetric matrix sigma with sigma^dag H sigma = -H^*. Its entries
/// are the steady-state anomalous correlations in units of the reservoir's
/// <zeta zeta>.
struct SymmetryMatrix {
    CMatrix sigma;
    SigmaProvenance provenance = SigmaProvenance::from_eigenmodes;
    std::optional<std::size_t> drain;

    std::size_t size() const { return static_cast<std::size_t>(sigma.rows()); }
};

/// diag((-1)^{s_n}). With a drain given, the global sign is chosen so that
/// sigma(n0, n0) = +1.
inline SymmetryMatrix sigma_bipartite(std::span<const int> labels, std::optional<std::size_t> drain = std::nullopt) {
    if (labels.empty()) throw std::invalid_argument("sigma_bipartite: missing sublattice labels");
    const auto n = static_cast<Eigen::Index>(labels.size());
    Real global = 1.0;
    if (drain) {
        if (*drain >= labels.size()) throw std::invalid_argument("sigma_bipartite: drain out of range");
        global = labels[*drain] == 0 ? 1.0 : -1.0;
    }
    CMatrix s = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label != 0 && label != 1) throw std::invalid_argument("sigma_bipartite: labels must be 0 or 1");
        s(i, i) = global * (label == 0 ? 1.0 : -1.0);
    }
    return {std::move(s), SigmaProvenance::bipartite, drain};
}

inline SymmetryMatrix sigma_bipartite(const Lattice& lattice, std::optional<std::size_t> drain = std::nullopt) {
    if (!lattice.has_sublattice()) throw std::invalid_argument("sigma_bipartite: lattice has no sublattice labels");
    const auto labels = lattice.sublattice_labels();
    return sigma_bipartite(labels, drain);
}

/// Site permutation n -> -n, optionally signed by (-1)^{s_n}. The drain
/// constraint refers to the origin, the fixed point of the inversion.
inline SymmetryMatrix sigma_inversion(const Lattice& lattice, bool signed_by_sublattice = false) {
    const auto n = static_cast<Eigen::Index>(lattice.n_sites());
    CMatrix s = CMatrix::Zero(n, n);
    std::optional<std::size_t> origin;
    for (const auto& site : lattice.sites()) {
        if (site.coord.empty()) throw std::invalid_argument("sigma_inversion: site coordinates required");
        std::vector<int> mirrored(site.coord.size());
        std::ranges::transform(site.coord, mirrored.begin(), [](int c) { return -c; });
        const auto partner = lattice.find(mirrored);
        if (!partner) throw std::invalid_argument("sigma_inversion: site set is not closed under inversion");
        if (*partner == site.index) origin = site.index;
        Real sign = 1.0;
        if (signed_by_sublattice) {
            if (!site.sublattice) throw std::invalid_argument("sigma_inversion: sublattice labels required");
            sign = *site.sublattice == 0 ? 1.0 : -1.0;
        }
        s(static_cast<Eigen::Index>(*partner), static_cast<Eigen::Index>(site.index)) = sign;
    }
    if (!origin) throw std::invalid_argument("sigma_inversion: inversion has no fixed site at the origin");
    if (signed_by_sublattice && *lattice.site(*origin).sublattice == 1) s = -s;
    return {std::move(s), signed_by_sublattice ? SigmaProvenance::bipartite_inversion : SigmaProvenance::inversion,
            origin};
}

enum class HofstadterVariant { z0, zero_z, zz };

inline HofstadterVariant parse_hofstadter_variant(std::string_view name) {
    if (name == "z0") return HofstadterVariant::z0;
    if (name == "0z") return HofstadterVariant::zero_z;
    if (name == "zz") return HofstadterVariant::zz;
    throw std::invalid_argument("sigma_hofstadter: unknown variant '" + std::string(name) + "' (expected z0, 0z, zz)");
}

/// Particle-hole symmetry matrices of the open Hofstadter square, keyed by
/// the family of drain sites they leave invariant:
///   z0: (x,y) -> (x,-y), 0z: (x,y) -> (-x,y), both with sign (-1)^{x+y};
///   zz: (x,y) -> (y,x) with phase (-1)^{x+y} e^{i flux x y}.
/// With a drain on a fixed site the global phase is chosen so that
/// sigma(n0,n0) = 1.
inline SymmetryMatrix sigma_hofstadter(HofstadterVariant variant, int half_size, Real flux,
                                       std::optional<std::size_t> drain = std::nullopt) {
    if (half_size < 1) throw std::invalid_argument("sigma_hofstadter: half_size must be >= 1");
    const int m = half_size;
    const auto n = static_cast<Eigen::Index>((2 * m + 1) * (2 * m + 1));
    CMatrix s = CMatrix::Zero(n, n);
    SigmaProvenance prov{};
    for (int y = -m; y <= m; ++y) {
        for (int x = -m; x <= m; ++x) {
            const Real sign = ((x + y) % 2 == 0) ? 1.0 : -1.0;
            const auto row = static_cast<Eigen::Index>(square_index(m, x, y));
            switch (variant) {
                case HofstadterVariant::z0:
                    s(row, static_cast<Eigen::Index>(square_index(m, x, -y))) = sign;
                    prov = SigmaProvenance::hofstadter_z0;
                    break;
                case HofstadterVariant::zero_z:
                    s(row, static_cast<Eigen::Index>(square_index(m, -x, y))) = sign;
                    prov = SigmaProvenance::hofstadter_0z;
                    break;
                case HofstadterVariant::zz:
                    s(row, static_cast<Eigen::Index>(square_index(m, y, x))) =
                        sign * std::polar(1.0, flux * static_cast<Real>(x * y));
                    prov = SigmaProvenance::hofstadter_zz;
                    break;
            }
        }
    }
    if (drain) {
        if (*drain >= static_cast<std::size_t>(n)) throw std::invalid_argument("sigma_hofstadter: drain out of range");
        const Complex fixed = s(static_cast<Eigen::Index>(*drain), static_cast<Eigen::Index>(*drain));
        if (std::abs(fixed) > 0.5) s *= std::conj(fixed);
    }
    return {std::move(s), prov, std::nullopt};
}

/// generalized: sigma^dag H sigma = -H^* (fixes the steady state).
/// sublattice:  sigma^dag H sigma = -H   (ordinary chiral symmetry).
/// The two coincide for real H.
enum class ChiralRelation { generalized, sublattice };

inline std::string_view to_string(ChiralRelation r) { return r == ChiralRelation::generalized ? "generalized" : "sublattice"; }

struct SymmetryReport {
    Real chiral_residual = 0.0;      // max |sigma^dag H sigma + H^*|
    Real sublattice_residual = 0.0;  // max |sigma^dag H sigma + H|
    ChiralRelation relation = ChiralRelation::generalized;
    Real unitarity_residual = 0.0;   // max |sigma sigma^dag - I|
    Real symmetry_residual = 0.0;    // max |sigma - sigma^T|
    std::optional<Real> drain_residual;  // max |sigma[:, n0] - e_{n0}|
    Real threshold = 0.0;
    bool pass = false;
    SigmaProvenance provenance = SigmaProvenance::from_eigenmodes;
};

inline SymmetryReport check_symmetry(const SymmetryMatrix& sym, const CMatrix& h,
                                     std::optional<std::size_t> drain = std::nullopt,
                                     ChiralRelation relation = ChiralRelation::generalized) {
    const auto n = h.rows();
    if (sym.sigma.rows() != n || sym.sigma.cols() != n) throw std::invalid_argument("check_symmetry: dimension mismatch");
    SymmetryReport rep;
    rep.provenance = sym.provenance;
    const CMatrix conj_h = sym.sigma.adjoint() * h * sym.sigma;
    rep.chiral_residual = max_abs(conj_h + h.conjugate());
    rep.sublattice_residual = max_abs(conj_h + h);
    rep.relation = relation;
    rep.unitarity_residual = max_abs(sym.sigma * sym.sigma.adjoint() - CMatrix::Identity(n, n));
    rep.symmetry_residual = max_abs(sym.sigma - sym.sigma.transpose());
    rep.threshold = 1e-9 * unit_scale(h);
    const Real used = relation == ChiralRelation::generalized ? rep.chiral_residual : rep.sublattice_residual;
    rep.pass = used < rep.threshold && rep.unitarity_residual < rep.threshold &&
               rep.symmetry_residual < rep.threshold;
    if (drain) {
        if (*drain >= static_cast<std::size_t>(n)) throw std::invalid_argument("check_symmetry: drain out of range");
        CVector unit = CVector::Zero(n);
        unit(static_cast<Eigen::Index>(*drain)) = 1.0;
        rep.drain_residual = max_abs(sym.sigma.col(static_cast<Eigen::Index>(*drain)) - unit);
        rep.pass = rep.pass && *rep.drain_residual < rep.threshold;
    }
    return rep;
}

inline SymmetryReport check_symmetry(const SymmetryMatrix& sym, const Lattice& lattice,
                                     std::optional<std::size_t> drain = std::nullopt,
                                     ChiralRelation relation = ChiralRelation::generalized) {
    return check_symmetry(sym, lattice.hamiltonian(), drain, relation);
}

/// Closed-form eigenbasis of the zero-flux open square lattice,
///   psi_{k,q}(x,y) = sin(k(x+M+1)) sin(q(y+M+1)) / (M+1),
///   eps_{k,q} = -2J (cos k + cos q), k,q in pi/(2(M+1)) * {1..2M+1},
/// in the same site ordering as build_hofstadter. Modes are sorted by energy.
struct AnalyticMode {
    int k_index = 0;
    int q_index = 0;
};

struct AnalyticEigenSystem {
    EigenSystem system;
    std::vector<AnalyticMode> labels;  // (k, q) grid index of each column
};

inline AnalyticEigenSystem phi_zero_eigenmodes(int half_size, Real hopping = 1.0) {
    if (half_size < 1) throw std::invalid_argument("phi_zero_eigenmodes: half_size must be >= 1");
    const int m = half_size;
    const int side = 2 * m + 1;
    const Real step = kPi / (2.0 * (m + 1));
    const auto n = static_cast<Eigen::Index>(side * side);

    std::vector<AnalyticMode> labels;
    for (int a = 1; a <= side; ++a)
        for (int b = 1; b <= side; ++b) labels.push_back({a, b});
    auto energy = [&](const AnalyticMode& mode) {
        return -2.0 * hopping * (std::cos(step * mode.k_index) + std::cos(step * mode.q_index));
    };
    std::ranges::stable_sort(labels, [&](const AnalyticMode& u, const AnalyticMode& v) { return energy(u) < energy(v); });

    AnalyticEigenSystem out;
    out.labels = labels;
    out.system.energies.resize(n);
    out.system.modes.resize(n, n);
    for (Eigen::Index col = 0; col < n; ++col) {
        const auto& mode = labels[static_cast<std::size_t>(col)];
        out.system.energies(col) = energy(mode);
        for (int y = -m; y <= m; ++y)
            for (int x = -m; x <= m; ++x)
                out.system.modes(static_cast<Eigen::Index>(square_index(m, x, y)), col) =
                    std::sin(step * mode.k_index * (x + m + 1)) * std::sin(step * mode.q_index * (y + m + 1)) / (m + 1);
    }
    out.system.scale = std::max(1.0, std::abs(hopping));
    out.system.shells = detail::energy_shells(out.system.energies, 1e-9 * out.system.scale);
    return out;
}

/// Largest max-norm difference between spectral projectors of matching
/// energy shells. Shells of `reference` are matched to modes of `other` whose
/// energies lie within `energy_tol`; a count mismatch yields +inf.
inline Real projector_mismatch(const EigenSystem& reference, const EigenSystem& other, Real energy_tol) {
    Real worst = 0.0;
    for (const auto& shell : reference.shells) {
        const Real e = reference.energies(static_cast<Eigen::Index>(shell.front()));
        std::vector<Eigen::Index> match;
        for (Eigen::Index i = 0; i < other.energies.size(); ++i)
            if (std::abs(other.energies(i) - e) <= energy_tol) match.push_back(i);
        if (match.size() != shell.size()) return std::numeric_limits<Real>::infinity();
        const auto n = reference.modes.rows();
        CMatrix p_ref = CMatrix::Zero(n, n), p_other = CMatrix::Zero(n, n);
        for (auto i : shell) {
            const auto& v = reference.modes.col(static_cast<Eigen::Index>(i));
            p_ref += v * v.adjoint();
        }
        for (auto i : match) p_other += other.modes.col(i) * other.modes.col(i).adjoint();
        worst = std::max(worst, max_abs(p_ref - p_other));
    }
    return worst;
}

}  // namespace chiral_drain
