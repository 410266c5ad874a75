#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "chiral_drain/core.hpp"
#include "chiral_drain/gaussian.hpp"
#include "chiral_drain/lattice.hpp"
#include "chiral_drain/lyapunov.hpp"
#include "chiral_drain/spectral.hpp"
#include "chiral_drain/symmetry.hpp"

namespace chiral_drain {

/// Single squeezed reservoir at `drain` plus optional uniform internal loss
/// into vacuum on every site.
struct DrainSpec {
    std::size_t drain = 0;
    Real gamma = 1.0;
    NoiseParams noise;
    Real loss = 0.0;

    void check(std::size_t n_sites) const {
        if (drain >= n_sites) throw std::invalid_argument("drain site out of range");
        if (!(gamma > 0.0)) throw std::invalid_argument("drain coupling Gamma must be positive");
        if (!(loss >= 0.0)) throw std::invalid_argument("internal loss rate must be non-negative");
        if (!(noise.r >= 0.0)) throw std::invalid_argument("squeezing parameter r must be non-negative");
    }
};

/// Drift of da/dt = D a + noise: D = -iH - (Gamma/2) P_{n0} - (loss/2) I.
inline CMatrix drift_matrix(const CMatrix& h, const DrainSpec& spec) {
    const auto n = h.rows();
    CMatrix d = -kI * h;
    d.diagonal().array() -= 0.5 * spec.loss;
    d(static_cast<Eigen::Index>(spec.drain), static_cast<Eigen::Index>(spec.drain)) -= 0.5 * spec.gamma;
    (void)n;
    return d;
}

namespace detail {

/// Drain-site diffusion terms for the normal (Gamma N) and anomalous (Gamma M) moments.
inline std::pair<CMatrix, CMatrix> diffusion(std::size_t n, const DrainSpec& spec) {
    const auto k = static_cast<Eigen::Index>(n);
    CMatrix cn = CMatrix::Zero(k, k), cm = CMatrix::Zero(k, k);
    const auto d = static_cast<Eigen::Index>(spec.drain);
    cn(d, d) = spec.gamma * spec.noise.occupation();
    cm(d, d) = spec.gamma * spec.noise.anomalous();
    return {cn, cm};
}

}  // namespace detail

/// Exact steady second moments of the linear Langevin system. Solves
///   D M + M D^T + Gamma calM e e^T = 0,   D^* N + N D^T + Gamma calN e e^T = 0
/// in extended precision. Without internal loss the drift is singular when
/// dark modes exist; those are reported through DarkModeError.
template <typename T = long double>
CovarianceState steady_state(const Lattice& lattice, const DrainSpec& spec) {
    spec.check(lattice.n_sites());
    if (spec.loss == 0.0) {
        const auto coupling = drain_couplings(lattice, spec.drain, spec.gamma);
        if (!coupling.dark_modes.empty())
            throw DarkModeError("steady_state: " + std::to_string(coupling.dark_modes.size()) +
                                    " dark mode(s) make the steady state non-unique (modes " +
                                    join_indices(coupling.dark_modes) +
                                    "); move the drain or add internal loss",
                                coupling.dark_modes);
    }
    const CMatrix d = drift_matrix(lattice.hamiltonian(), spec);
    const auto [cn, cm] = detail::diffusion(lattice.n_sites(), spec);

    const CMatrixT<T> dt = d.cast<std::complex<T>>();
    const CMatrixT<T> dt_tr = dt.transpose();
    const CMatrixT<T> dt_conj = dt.conjugate();
    const CMatrixT<T> cm_t = cm.cast<std::complex<T>>();
    const CMatrixT<T> cn_t = cn.cast<std::complex<T>>();

    const auto sol_m = solve_sylvester<T>(dt, dt_tr, cm_t);
    const auto sol_n = solve_sylvester<T>(dt_conj, dt_tr, cn_t);

    CovarianceState out;
    const CMatrixT<T> m_sym = (sol_m.x + sol_m.x.transpose()) / T(2);
    const CMatrixT<T> n_sym = (sol_n.x + sol_n.x.adjoint()) / T(2);
    out.anomalous = m_sym.template cast<Complex>();
    out.normal = n_sym.template cast<Complex>();
    out.solver_residual = static_cast<Real>(
        std::max(sylvester_residual<T>(dt, dt_tr, cm_t, m_sym), sylvester_residual<T>(dt_conj, dt_tr, cn_t, n_sym)));
    if (!std::isfinite(out.solver_residual) || out.solver_residual > 1e-9 * spec.gamma)
        throw NumericalError("steady_state: Lyapunov residual " + std::to_string(out.solver_residual) +
                             " exceeds 1e-9 Gamma");
    return out;
}

inline std::string describe_pairing(const ChiralPairing& p) {
    std::ostringstream os;
    os << "energy defect " << p.energy_defect << ", amplitude defect " << p.amplitude_defect << ", "
       << p.unpaired.size() << " unpaired mode(s)";
    return os.str();
}

/// sigma_{m,n} = sum_j e^{-i(phi_j + phi_{-j})} psi_j[n] psi_{-j}[m]
inline SymmetryMatrix extract_sigma(const DrainCoupling& coupling, const ChiralPairing& pairing) {
    if (!coupling.dark_modes.empty())
        throw std::invalid_argument("extract_sigma: dark modes present (" + join_indices(coupling.dark_modes) + ")");
    if (!pairing.unpaired.empty()) throw std::invalid_argument("extract_sigma: invalid pairing, " + describe_pairing(pairing));
    const CMatrix& psi = coupling.basis.modes;
    const auto n = psi.cols();
    CMatrix partner_modes(psi.rows(), n);
    CVector weight(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const auto p = static_cast<Eigen::Index>(pairing.partner[static_cast<std::size_t>(j)]);
        partner_modes.col(j) = psi.col(p);
        weight(j) = std::polar(1.0, -(coupling.phases(j) + coupling.phases(p)));
    }
    SymmetryMatrix out;
    out.sigma = partner_modes * weight.asDiagonal() * psi.transpose();
    out.provenance = SigmaProvenance::from_eigenmodes;
    out.drain = coupling.drain;
    return out;
}

/// Steady state implied by chiral pairing: N = calN I, M = calM sigma.
inline CovarianceState analytic_chiral_state(const DrainCoupling& coupling, const ChiralPairing& pairing,
                                             const NoiseParams& noise, Real tol = 1e-8) {
    if (!pairing.holds(tol))
        throw std::invalid_argument("analytic_chiral_state: spectrum is not chiral at tolerance " + std::to_string(tol) +
                                    ": " + describe_pairing(pairing));
    const auto sym = extract_sigma(coupling, pairing);
    const auto n = static_cast<Eigen::Index>(coupling.size());
    CovarianceState out;
    out.normal = noise.occupation() * CMatrix::Identity(n, n);
    out.anomalous = noise.anomalous() * sym.sigma;
    return out;
}

/// Largest second moments left in the Bogoliubov modes
///   beta_i = cosh r b_i - e^{i(phi - phi_i - phi_{-i})} sinh r b_{-i}^dag.
/// Both vanish when the state is their joint vacuum.
struct BetaReport {
    Real max_normal = 0.0;     // max |<beta_i^dag beta_j>|
    Real max_anomalous = 0.0;  // max |<beta_i beta_j>|
};

inline BetaReport beta_occupations(const CovarianceState& state, const DrainCoupling& coupling,
                                   const ChiralPairing& pairing, const NoiseParams& noise) {
    const CMatrix& psi = coupling.basis.modes;
    const auto n = psi.cols();
    if (static_cast<std::size_t>(n) != state.size()) throw std::invalid_argument("beta_occupations: dimension mismatch");
    // Mode-basis moments: <b_i^dag b_j> = (Psi^T N Psi^*)_{ij}, <b_i b_j> = (Psi^dag M Psi^*)_{ij}
    const CMatrix nb = psi.transpose() * state.normal * psi.conjugate();
    const CMatrix mb = psi.adjoint() * state.anomalous * psi.conjugate();

    const Real c = std::cosh(noise.r);
    CVector s(n);
    std::vector<Eigen::Index> p(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        p[static_cast<std::size_t>(i)] = static_cast<Eigen::Index>(pairing.partner[static_cast<std::size_t>(i)]);
        s(i) = std::polar(std::sinh(noise.r),
                          noise.phi - coupling.phases(i) - coupling.phases(p[static_cast<std::size_t>(i)]));
    }

    BetaReport rep;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::Index pj = p[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index pi = p[static_cast<std::size_t>(i)];
            const Complex comm_ij = (i == pj) ? 1.0 : 0.0;  // [b_i, b_pj^dag]
            const Complex comm_pi_pj = (pi == pj) ? 1.0 : 0.0;
            const Complex normal = c * c * nb(i, j) - c * s(j) * std::conj(mb(i, pj)) -
                                   c * std::conj(s(i)) * mb(pi, j) +
                                   std::conj(s(i)) * s(j) * (nb(pj, pi) + comm_pi_pj);
            const Complex anomalous = c * c * mb(i, j) - c * s(j) * (nb(pj, i) + comm_ij) -
                                      c * s(i) * nb(pi, j) + s(i) * s(j) * std::conj(mb(pi, pj));
            rep.max_normal = std::max(rep.max_normal, std::abs(normal));
            rep.max_anomalous = std::max(rep.max_anomalous, std::abs(anomalous));
        }
    }
    return rep;
}

struct Trajectory {
    std::vector<Real> times;
    std::vector<CovarianceState> states;
};

/// Integrates the second-moment equations with classical fourth-order
/// Runge-Kutta at fixed step `dt`, recording the state at each requested
/// sample time (sorted, within [0, t_final]) and at t_final.
inline Trajectory evolve(const Lattice& lattice, const DrainSpec& spec, const CovarianceState& initial, Real t_final,
                         Real dt, std::vector<Real> sample_times = {}) {
    spec.check(lattice.n_sites());
    if (initial.size() != lattice.n_sites()) throw std::invalid_argument("evolve: initial state dimension mismatch");
    if (!(dt > 0.0) || !(t_final >= 0.0)) throw std::invalid_argument("evolve: dt must be positive and t_final >= 0");

    const CMatrix d = drift_matrix(lattice.hamiltonian(), spec);
    {
        Eigen::ComplexEigenSolver<CMatrix> es(d, false);
        const Real spectral_radius = es.eigenvalues().cwiseAbs().maxCoeff();
        if (dt * spectral_radius >= 0.1)
            throw std::invalid_argument("evolve: step too large (dt * max|eig D| = " +
                                        std::to_string(dt * spectral_radius) + ", need < 0.1)");
    }
    const CMatrix d_tr = d.transpose();
    const CMatrix d_conj = d.conjugate();
    const auto [cn, cm] = detail::diffusion(lattice.n_sites(), spec);

    auto rhs_n = [&](const CMatrix& x) -> CMatrix { return d_conj * x + x * d_tr + cn; };
    auto rhs_m = [&](const CMatrix& x) -> CMatrix { return d * x + x * d_tr + cm; };

    std::ranges::sort(sample_times);
    std::erase_if(sample_times, [&](Real t) { return t < 0.0 || t > t_final; });
    if (sample_times.empty() || sample_times.back() < t_final) sample_times.push_back(t_final);

    const Real blowup = 1e6 * (1.0 + max_abs(initial.normal) + max_abs(initial.anomalous) +
                               std::cosh(2.0 * spec.noise.r));
    Trajectory out;
    CMatrix n = initial.normal, m = initial.anomalous;
    Real t = 0.0;
    for (Real target : sample_times) {
        while (t < target - 1e-12 * std::max(1.0, target)) {
            const Real h = std::min(dt, target - t);
            const CMatrix kn1 = rhs_n(n), km1 = rhs_m(m);
            const CMatrix kn2 = rhs_n(n + 0.5 * h * kn1), km2 = rhs_m(m + 0.5 * h * km1);
            const CMatrix kn3 = rhs_n(n + 0.5 * h * kn2), km3 = rhs_m(m + 0.5 * h * km2);
            const CMatrix kn4 = rhs_n(n + h * kn3), km4 = rhs_m(m + h * km3);
            n += (h / 6.0) * (kn1 + 2.0 * kn2 + 2.0 * kn3 + kn4);
            m += (h / 6.0) * (km1 + 2.0 * km2 + 2.0 * km3 + km4);
            t += h;
            const Real size = std::max(max_abs(n), max_abs(m));
            if (!std::isfinite(size) || size > blowup)
                throw NumericalError("evolve: integration became unstable at t=" + std::to_string(t) +
                                     "; reduce dt");
        }
        t = target;
        out.times.push_back(t);
        out.states.push_back({n, m, 0.0});
    }
    return out;
}

}  // namespace chiral_drain
