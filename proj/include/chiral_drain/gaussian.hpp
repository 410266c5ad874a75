#pragma once

#include <cmath>

#include <Eigen/Eigenvalues>

#include "chiral_drain/core.hpp"

namespace chiral_drain {

/// Squeezed-vacuum reservoir: <zeta^dag zeta> = sinh^2 r, <zeta zeta> = e^{i phi} cosh r sinh r.
struct NoiseParams {
    Real r = 0.0;
    Real phi = 0.0;

    Real occupation() const { return std::sinh(r) * std::sinh(r); }
    Complex anomalous() const { return std::polar(std::cosh(r) * std::sinh(r), phi); }
};

/// Zero-mean Gaussian state in terms of normal <a_m^dag a_n> and anomalous
/// <a_m a_n> second moments.
struct CovarianceState {
    CMatrix normal;
    CMatrix anomalous;
    Real solver_residual = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(normal.rows()); }

    static CovarianceState vacuum(std::size_t n) {
        const auto k = static_cast<Eigen::Index>(n);
        return {CMatrix::Zero(k, k), CMatrix::Zero(k, k), 0.0};
    }
};

inline Real distance(const CovarianceState& a, const CovarianceState& b) {
    return std::max(max_abs(a.normal - b.normal), max_abs(a.anomalous - b.anomalous));
}

/// Symmetrized quadrature covariance with x = (a + a^dag)/sqrt2,
/// p = (a - a^dag)/(i sqrt2), ordered (x_0, p_0, x_1, p_1, ...). Vacuum is I/2.
inline RMatrix quadrature_covariance(const CovarianceState& s) {
    const auto n = s.normal.rows();
    RMatrix c(2 * n, 2 * n);
    for (Eigen::Index m = 0; m < n; ++m) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const Complex nn = s.normal(m, k);
            const Complex mm = s.anomalous(m, k);
            const Real delta = m == k ? 0.5 : 0.0;
            c(2 * m, 2 * k) = mm.real() + nn.real() + delta;
            c(2 * m + 1, 2 * k + 1) = nn.real() - mm.real() + delta;
            c(2 * m, 2 * k + 1) = mm.imag() + nn.imag();
            c(2 * k + 1, 2 * m) = mm.imag() + nn.imag();
        }
    }
    return c;
}

/// Block-diagonal symplectic form for interleaved (x, p) ordering.
inline RMatrix symplectic_form(Eigen::Index modes) {
    RMatrix omega = RMatrix::Zero(2 * modes, 2 * modes);
    for (Eigen::Index k = 0; k < modes; ++k) {
        omega(2 * k, 2 * k + 1) = 1.0;
        omega(2 * k + 1, 2 * k) = -1.0;
    }
    return omega;
}

/// Smallest eigenvalue of C + (i/2) Omega; non-negative for physical states.
inline Real physicality(const RMatrix& cov) {
    const CMatrix m = cov.cast<Complex>() + 0.5 * kI * symplectic_form(cov.rows() / 2).cast<Complex>();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline Real physicality(const CovarianceState& s) { return physicality(quadrature_covariance(s)); }

/// mu = 2^{-N} / sqrt(det C) = 1 / sqrt(det 2C).
inline Real purity(const RMatrix& cov) {
    const RMatrix twice = 2.0 * cov;
    Eigen::SelfAdjointEigenSolver<RMatrix> es(twice, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("purity: eigensolver did not converge");
    Real log_det = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        Real lam = es.eigenvalues()(i);
        if (lam < -1e-12) throw NumericalError("purity: covariance is not positive definite");
        lam = std::max(lam, 1e-12);
        log_det += std::log(lam);
    }
    const Real mu = std::exp(-0.5 * log_det);
    if (!(mu > 0.0) || mu > 1.0 + 1e-8) throw NumericalError("purity: unphysical covariance (mu=" + std::to_string(mu) + ")");
    return std::min(mu, 1.0);
}

inline Real purity(const CovarianceState& s) { return purity(quadrature_covariance(s)); }

}  // namespace chiral_drain
