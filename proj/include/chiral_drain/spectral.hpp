#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "chiral_drain/core.hpp"
#include "chiral_drain/lattice.hpp"

namespace chiral_drain {

/// Energy eigenbasis of a lattice Hamiltonian. Columns of `modes` are the
/// wavefunctions psi_i[n], sorted by ascending energy.
struct EigenSystem {
    RVector energies;
    CMatrix modes;
    Real reconstruction_residual = 0.0;  // max |H - Psi diag(eps) Psi^dagger|
    Real scale = 1.0;                    // max(1, max|H|)
    /// Runs of consecutive modes whose energy gap is below 1e-9 * scale.
    /// Singletons are included, so the shells partition 0..N-1.
    std::vector<std::vector<std::size_t>> shells;

    std::size_t size() const { return static_cast<std::size_t>(energies.size()); }
    bool has_degeneracy() const {
        return std::ranges::any_of(shells, [](const auto& s) { return s.size() > 1; });
    }
};

namespace detail {

inline std::vector<std::vector<std::size_t>> energy_shells(const RVector& energies, Real gap) {
    std::vector<std::vector<std::size_t>> shells;
    for (Eigen::Index i = 0; i < energies.size(); ++i) {
        if (i == 0 || energies(i) - energies(i - 1) >= gap)
            shells.emplace_back();
        shells.back().push_back(static_cast<std::size_t>(i));
    }
    return shells;
}

/// Rotates column `col` so that its first component of non-negligible
/// magnitude is real and positive.
inline void fix_leading_phase(CMatrix& modes, Eigen::Index col) {
    const Real cutoff = 1e-8 * max_abs(modes.col(col));
    for (Eigen::Index r = 0; r < modes.rows(); ++r) {
        const Complex z = modes(r, col);
        if (std::abs(z) > cutoff) {
            modes.col(col) *= std::conj(z) / std::abs(z);
            modes(r, col) = std::abs(z);
            return;
        }
    }
}

inline Real reconstruction_error(const CMatrix& h, const RVector& eps, const CMatrix& modes) {
    return max_abs(h - modes * eps.cast<Complex>().asDiagonal() * modes.adjoint());
}

}  // namespace detail

inline EigenSystem diagonalize(const CMatrix& h) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
    if (solver.info() != Eigen::Success)
        throw NumericalError("diagonalize: Hermitian eigensolver did not converge (N=" + std::to_string(h.rows()) +
                             ", max|H|=" + std::to_string(max_abs(h)) + ")");
    EigenSystem out;
    out.energies = solver.eigenvalues();
    out.modes = solver.eigenvectors();
    for (Eigen::Index c = 0; c < out.modes.cols(); ++c) detail::fix_leading_phase(out.modes, c);
    out.scale = unit_scale(h);
    out.reconstruction_residual = detail::reconstruction_error(h, out.energies, out.modes);
    out.shells = detail::energy_shells(out.energies, 1e-9 * out.scale);
    return out;
}

inline EigenSystem diagonalize(const Lattice& lattice) { return diagonalize(lattice.hamiltonian()); }

/// Mode couplings to a drain at site n0, in a drain-adapted basis.
///
/// Every degenerate shell is rotated so that a single mode carries the whole
/// drain amplitude of the shell and the others have an exact node at n0.
/// Bright modes are phase-fixed so psi_i[n0] is real and positive.
struct DrainCoupling {
    std::size_t drain = 0;
    Real gamma = 0.0;
    Real dark_tol = 1e-10;
    EigenSystem basis;           // drain-adapted eigenbasis
    RVector rates;               // Gamma_i = |psi_i[n0]|^2 Gamma; exactly 0 for dark modes
    RVector phases;              // arg psi_i[n0]; 0 (unused) for dark modes
    std::vector<bool> is_dark;
    std::vector<std::size_t> dark_modes;

    std::size_t size() const { return basis.size(); }
    std::vector<std::size_t> bright_modes() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < is_dark.size(); ++i)
            if (!is_dark[i]) out.push_back(i);
        return out;
    }
    Complex amplitude(std::size_t mode) const {
        return basis.modes(static_cast<Eigen::Index>(drain), static_cast<Eigen::Index>(mode));
    }
};

inline DrainCoupling drain_couplings(EigenSystem eig, std::size_t drain, Real gamma, Real dark_tol = 1e-10,
                                     bool fix_phases = true) {
    const auto n = static_cast<Eigen::Index>(eig.size());
    if (drain >= eig.size()) throw std::invalid_argument("drain_couplings: drain index out of range");
    if (!(gamma > 0.0)) throw std::invalid_argument("drain_couplings: Gamma must be positive");
    if (!(dark_tol >= 0.0)) throw std::invalid_argument("drain_couplings: dark_tol must be non-negative");
    const auto row = static_cast<Eigen::Index>(drain);

    for (const auto& shell : eig.shells) {
        if (shell.size() < 2) continue;
        const auto k = static_cast<Eigen::Index>(shell.size());
        CMatrix block(n, k);
        CVector amp(k);
        for (Eigen::Index j = 0; j < k; ++j) {
            block.col(j) = eig.modes.col(static_cast<Eigen::Index>(shell[static_cast<std::size_t>(j)]));
            amp(j) = block(row, j);
        }
        if (amp.norm() == 0.0) continue;
        // Householder basis whose first column is parallel to conj(amp): the
        // rotated first mode collects all drain weight, the rest are orthogonal.
        Eigen::HouseholderQR<CMatrix> qr(CMatrix(amp.conjugate()));
        const CMatrix q = qr.householderQ() * CMatrix::Identity(k, k);
        block = (block * q).eval();
        for (Eigen::Index j = 1; j < k; ++j) block(row, j) = 0.0;
        for (Eigen::Index j = 0; j < k; ++j)
            eig.modes.col(static_cast<Eigen::Index>(shell[static_cast<std::size_t>(j)])) = block.col(j);
    }

    DrainCoupling out;
    out.drain = drain;
    out.gamma = gamma;
    out.dark_tol = dark_tol;
    out.rates = RVector::Zero(n);
    out.phases = RVector::Zero(n);
    out.is_dark.assign(eig.size(), false);
    const Real threshold = dark_tol * gamma / static_cast<Real>(n);

    for (Eigen::Index i = 0; i < n; ++i) {
        const Complex z = eig.modes(row, i);
        const Real rate = std::norm(z) * gamma;
        if (rate < threshold) {
            out.is_dark[static_cast<std::size_t>(i)] = true;
            out.dark_modes.push_back(static_cast<std::size_t>(i));
            if (fix_phases) detail::fix_leading_phase(eig.modes, i);
            continue;
        }
        if (fix_phases) {
            eig.modes.col(i) *= std::conj(z) / std::abs(z);
            eig.modes(row, i) = std::abs(z);
        }
        out.rates(i) = rate;
        out.phases(i) = std::arg(eig.modes(row, i));
    }
    out.basis = std::move(eig);
    return out;
}

inline DrainCoupling drain_couplings(const Lattice& lattice, std::size_t drain, Real gamma, Real dark_tol = 1e-10) {
    return drain_couplings(diagonalize(lattice), drain, gamma, dark_tol);
}

/// Pairing of modes i <-> -i with opposite energies.
struct ChiralPairing {
    std::vector<std::size_t> partner;
    Real energy_defect = 0.0;     // max |eps_i + eps_partner(i)|, +inf when modes are unpaired
    Real amplitude_defect = 0.0;  // max | |psi_i[n0]| - |psi_partner(i)[n0]| |
    std::vector<std::size_t> zero_modes;
    std::vector<std::size_t> unpaired;

    bool holds(Real tol) const { return unpaired.empty() && energy_defect <= tol && amplitude_defect <= tol; }
};

/// Matches shells at energy eps with shells at -eps (within `tol`). Modes in
/// near-zero shells are their own partners. Inside a matched pair of shells,
/// partners are assigned in order of decreasing drain amplitude.
inline ChiralPairing chiral_pairing(const DrainCoupling& coupling, Real tol) {
    const EigenSystem& eig = coupling.basis;
    const std::size_t n = eig.size();
    ChiralPairing out;
    out.partner.resize(n);
    std::iota(out.partner.begin(), out.partner.end(), std::size_t{0});

    auto shell_energy = [&](const std::vector<std::size_t>& s) {
        Real acc = 0.0;
        for (auto i : s) acc += eig.energies(static_cast<Eigen::Index>(i));
        return acc / static_cast<Real>(s.size());
    };
    auto by_amplitude = [&](std::vector<std::size_t> s) {
        std::ranges::stable_sort(s, [&](std::size_t a, std::size_t b) {
            return std::abs(coupling.amplitude(a)) > std::abs(coupling.amplitude(b));
        });
        return s;
    };

    std::vector<const std::vector<std::size_t>*> nonzero;
    for (const auto& s : eig.shells) {
        if (std::abs(shell_energy(s)) < tol) {
            for (auto i : s) out.zero_modes.push_back(i);
        } else {
            nonzero.push_back(&s);
        }
    }

    auto mark_unpaired = [&](const std::vector<std::size_t>& s) {
        for (auto i : s) out.unpaired.push_back(i);
    };

    std::size_t lo = 0, hi = nonzero.size();
    while (lo + 1 < hi) {
        const auto& a = *nonzero[lo];
        const auto& b = *nonzero[hi - 1];
        const Real sum = shell_energy(a) + shell_energy(b);
        if (std::abs(sum) <= tol) {
            const auto sa = by_amplitude(a);
            const auto sb = by_amplitude(b);
            const std::size_t k = std::min(sa.size(), sb.size());
            for (std::size_t j = 0; j < k; ++j) {
                out.partner[sa[j]] = sb[j];
                out.partner[sb[j]] = sa[j];
            }
            for (std::size_t j = k; j < sa.size(); ++j) out.unpaired.push_back(sa[j]);
            for (std::size_t j = k; j < sb.size(); ++j) out.unpaired.push_back(sb[j]);
            ++lo;
            --hi;
        } else if (sum < 0.0) {
            mark_unpaired(a);
            ++lo;
        } else {
            mark_unpaired(b);
            --hi;
        }
    }
    if (lo + 1 == hi) mark_unpaired(*nonzero[lo]);
    std::ranges::sort(out.unpaired);

    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t p = out.partner[i];
        const auto ii = static_cast<Eigen::Index>(i), pp = static_cast<Eigen::Index>(p);
        out.energy_defect = std::max(out.energy_defect, std::abs(eig.energies(ii) + eig.energies(pp)));
        out.amplitude_defect =
            std::max(out.amplitude_defect, std::abs(std::abs(coupling.amplitude(i)) - std::abs(coupling.amplitude(p))));
    }
    if (!out.unpaired.empty()) out.energy_defect = std::numeric_limits<Real>::infinity();
    return out;
}

/// A_ij = delta_ij eps_i - (i/2) e^{i(phi_j - phi_i)} sqrt(Gamma_i Gamma_j)
inline CMatrix dynamical_matrix(const DrainCoupling& coupling) {
    const auto n = static_cast<Eigen::Index>(coupling.size());
    CMatrix a(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            a(i, j) = -0.5 * kI * std::polar(std::sqrt(coupling.rates(i) * coupling.rates(j)),
                                             coupling.phases(j) - coupling.phases(i));
    for (Eigen::Index i = 0; i < n; ++i) a(i, i) += coupling.basis.energies(i);
    return a;
}

/// Eigenvalues lambda = nu - i gamma/2 of the dynamical matrix.
struct DynamicalSpectrum {
    CVector eigenvalues;
    std::vector<bool> dark;        // eigenvalue belongs to a decoupled dark mode
    std::vector<std::size_t> mode; // for dark eigenvalues, the eigenmode index; otherwise npos
    RVector residuals;             // |sum_j (Gamma_j/2)/(gamma/2 + i(nu - eps_j)) - 1|, 0 for dark
    CMatrix left;                  // row k: u_{k,j}, left eigenvector in the mode basis
    CVector drive;                 // g_k = sum_j u_{k,j} e^{-i phi_j} sqrt(Gamma_j)
    Real min_bright_gamma = std::numeric_limits<Real>::infinity();

    Real nu(std::size_t k) const { return eigenvalues(static_cast<Eigen::Index>(k)).real(); }
    Real gamma(std::size_t k) const { return -2.0 * eigenvalues(static_cast<Eigen::Index>(k)).imag(); }
    std::size_t dark_count() const { return static_cast<std::size_t>(std::ranges::count(dark, true)); }
    Real max_residual() const { return residuals.size() ? residuals.maxCoeff() : 0.0; }
};

/// Residual of the self-consistency condition for a candidate eigenvalue.
inline Real consistency_residual(Complex lambda, const DrainCoupling& coupling) {
    Complex acc = 0.0;
    const Real half_gamma = -lambda.imag();
    for (Eigen::Index j = 0; j < coupling.rates.size(); ++j) {
        if (coupling.is_dark[static_cast<std::size_t>(j)]) continue;
        acc += 0.5 * coupling.rates(j) / Complex(half_gamma, lambda.real() - coupling.basis.energies(j));
    }
    return std::abs(acc - 1.0);
}

inline DynamicalSpectrum dynamical_spectrum(const CMatrix& a, const DrainCoupling& coupling) {
    const auto n = static_cast<Eigen::Index>(coupling.size());
    if (a.rows() != n || a.cols() != n) throw std::invalid_argument("dynamical_spectrum: dimension mismatch");
    const auto bright = coupling.bright_modes();
    const auto nb = static_cast<Eigen::Index>(bright.size());

    CMatrix block(nb, nb);
    for (Eigen::Index j = 0; j < nb; ++j)
        for (Eigen::Index i = 0; i < nb; ++i)
            block(i, j) = a(static_cast<Eigen::Index>(bright[static_cast<std::size_t>(i)]),
                            static_cast<Eigen::Index>(bright[static_cast<std::size_t>(j)]));

    // Near-dark bright modes have gamma ~ 1e-7 J on desk-size lattices, so the
    // eigenproblem is solved in extended precision.
    using Wide = Eigen::Matrix<std::complex<long double>, Eigen::Dynamic, Eigen::Dynamic>;
    CVector lam_b(nb);
    CMatrix left_b(nb, nb);
    if (nb > 0) {
        Eigen::ComplexEigenSolver<Wide> solver(block.cast<std::complex<long double>>());
        if (solver.info() != Eigen::Success) throw NumericalError("dynamical_spectrum: eigensolver did not converge");
        lam_b = solver.eigenvalues().cast<Complex>();
        Eigen::PartialPivLU<Wide> lu(solver.eigenvectors());
        left_b = lu.inverse().cast<Complex>();
    }

    struct Entry {
        Complex lambda;
        bool dark;
        std::size_t mode;
        Eigen::Index row;
    };
    std::vector<Entry> entries;
    for (Eigen::Index k = 0; k < nb; ++k) entries.push_back({lam_b(k), false, std::size_t(-1), k});
    for (auto d : coupling.dark_modes)
        entries.push_back({Complex(coupling.basis.energies(static_cast<Eigen::Index>(d)), 0.0), true, d, -1});
    std::ranges::stable_sort(entries, [](const Entry& x, const Entry& y) { return x.lambda.real() < y.lambda.real(); });

    DynamicalSpectrum out;
    out.eigenvalues.resize(n);
    out.residuals = RVector::Zero(n);
    out.left = CMatrix::Zero(n, n);
    out.drive = CVector::Zero(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Entry& e = entries[static_cast<std::size_t>(k)];
        out.eigenvalues(k) = e.lambda;
        out.dark.push_back(e.dark);
        out.mode.push_back(e.mode);
        if (e.dark) {
            out.left(k, static_cast<Eigen::Index>(e.mode)) = 1.0;
            continue;
        }
        for (Eigen::Index j = 0; j < nb; ++j) {
            const auto col = static_cast<Eigen::Index>(bright[static_cast<std::size_t>(j)]);
            out.left(k, col) = left_b(e.row, j);
            out.drive(k) += left_b(e.row, j) * std::polar(std::sqrt(coupling.rates(col)), -coupling.phases(col));
        }
        out.residuals(k) = consistency_residual(e.lambda, coupling);
        out.min_bright_gamma = std::min(out.min_bright_gamma, -2.0 * e.lambda.imag());
    }
    return out;
}

inline DynamicalSpectrum dynamical_spectrum(const DrainCoupling& coupling) {
    return dynamical_spectrum(dynamical_matrix(coupling), coupling);
}

}  // namespace chiral_drain
