#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "chiral_drain/core.hpp"
#include "chiral_drain/gaussian.hpp"
#include "chiral_drain/lattice.hpp"
#include "chiral_drain/symmetry.hpp"

namespace chiral_drain {

/// 4x4 quadrature covariance of sites (m, n), ordered (x_m, p_m, x_n, p_n).
struct TwoModeCovariance {
    Eigen::Matrix4d cov;
    std::size_t m = 0;
    std::size_t n = 0;
};

inline TwoModeCovariance reduced_covariance(const CovarianceState& state, std::size_t m, std::size_t n) {
    if (m >= state.size() || n >= state.size()) throw std::invalid_argument("reduced_covariance: index out of range");
    if (m == n) throw std::invalid_argument("reduced_covariance: sites must differ");
    const Eigen::Index idx[2] = {static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)};
    CovarianceState pair{CMatrix(2, 2), CMatrix(2, 2), 0.0};
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            pair.normal(a, b) = state.normal(idx[a], idx[b]);
            pair.anomalous(a, b) = state.anomalous(idx[a], idx[b]);
        }
    return {quadrature_covariance(pair), m, n};
}

/// Symplectic eigenvalues (ascending, one per mode) from the moduli of the
/// eigenvalues of Omega C.
inline RVector symplectic_eigenvalues(const RMatrix& cov) {
    const RMatrix w = symplectic_form(cov.rows() / 2) * cov;
    Eigen::EigenSolver<RMatrix> es(w, false);
    if (es.info() != Eigen::Success) throw NumericalError("symplectic_eigenvalues: eigensolver did not converge");
    std::vector<Real> mods;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) mods.push_back(std::abs(es.eigenvalues()(i)));
    std::ranges::sort(mods);
    RVector out(cov.rows() / 2);
    for (Eigen::Index k = 0; k < out.size(); ++k)
        out(k) = 0.5 * (mods[static_cast<std::size_t>(2 * k)] + mods[static_cast<std::size_t>(2 * k + 1)]);
    return out;
}

/// E_N = max(0, -ln(2 nu_-)) with nu_- the smallest symplectic eigenvalue of
/// the partial transpose (p_n -> -p_n).
inline Real log_negativity(const TwoModeCovariance& two) {
    Eigen::Matrix4d flipped = two.cov;
    flipped.row(3) *= -1.0;
    flipped.col(3) *= -1.0;
    const Real nu_min = symplectic_eigenvalues(flipped).minCoeff();
    if (!(nu_min > 0.0)) throw NumericalError("log_negativity: unphysical two-mode reduction");
    return std::max(0.0, -std::log(2.0 * nu_min));
}

inline Real log_negativity(const CovarianceState& state, std::size_t m, std::size_t n) {
    if (m > n) std::swap(m, n);
    return log_negativity(reduced_covariance(state, m, n));
}

namespace detail {

struct SquareGeometry {
    int half_size = 0;
    std::vector<std::size_t> index;  // index[(y+M)*side + (x+M)] -> lattice site
};

inline SquareGeometry square_geometry(const Lattice& lattice) {
    const std::size_t n = lattice.n_sites();
    const auto side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (side * side != static_cast<int>(n) || side % 2 == 0)
        throw std::invalid_argument("mirrored_pair_average: lattice is not a (2M+1)x(2M+1) square");
    SquareGeometry g;
    g.half_size = side / 2;
    g.index.assign(n, n);
    for (const auto& s : lattice.sites()) {
        if (s.coord.size() != 2) throw std::invalid_argument("mirrored_pair_average: 2D coordinates required");
        const int x = s.coord[0], y = s.coord[1];
        if (std::abs(x) > g.half_size || std::abs(y) > g.half_size)
            throw std::invalid_argument("mirrored_pair_average: coordinates outside [-M, M]");
        g.index[static_cast<std::size_t>((y + g.half_size) * side + (x + g.half_size))] = s.index;
    }
    if (std::ranges::find(g.index, n) != g.index.end())
        throw std::invalid_argument("mirrored_pair_average: coordinate grid is incomplete");
    return g;
}

}  // namespace detail

/// E_N[(x,y),(y,x)] for every ordered coordinate pair with x != y.
struct MirroredPair {
    int x = 0;
    int y = 0;
    Real log_negativity = 0.0;
};

inline std::vector<MirroredPair> mirrored_pairs(const CovarianceState& state, const Lattice& lattice) {
    const auto g = detail::square_geometry(lattice);
    const int m = g.half_size, side = 2 * m + 1;
    auto at = [&](int x, int y) { return g.index[static_cast<std::size_t>((y + m) * side + (x + m))]; };
    std::vector<MirroredPair> out;
    for (int y = -m; y <= m; ++y)
        for (int x = -m; x <= m; ++x)
            if (x != y) out.push_back({x, y, log_negativity(state, at(x, y), at(y, x))});
    return out;
}

/// (ln sqrt2 / (N - sqrt N)) * sum_{x != y} E_N[(x,y),(y,x)], summed over
/// ordered pairs so each unordered pair contributes twice.
inline Real mirrored_pair_average(const CovarianceState& state, const Lattice& lattice) {
    const auto pairs = mirrored_pairs(state, lattice);
    const Real n = static_cast<Real>(lattice.n_sites());
    Real sum = 0.0;
    for (const auto& p : pairs) sum += p.log_negativity;
    return std::log(std::sqrt(2.0)) / (n - std::sqrt(n)) * sum;
}

struct NullifierMatrix {
    RMatrix a;
    Real r = 0.0;
    Real phi = 0.0;
};

/// A = (I + tanh r Re[e^{i phi} sigma]) (tanh r Im[e^{i phi} sigma]), evaluated as written.
inline NullifierMatrix nullifier_matrix(const SymmetryMatrix& sym, const NoiseParams& noise) {
    const auto n = sym.sigma.rows();
    const Real t = std::tanh(noise.r);
    const CMatrix rotated = std::polar(1.0, noise.phi) * sym.sigma;
    const RMatrix first = RMatrix::Identity(n, n) + t * rotated.real();
    const RMatrix second = t * rotated.imag();
    return {first * second, noise.r, noise.phi};
}

/// Var(p_m - sum_n A_mn x_n) for each site m.
inline RVector nullifier_variances(const CovarianceState& state, const NullifierMatrix& nm) {
    const auto n = static_cast<Eigen::Index>(state.size());
    if (nm.a.rows() != n || nm.a.cols() != n) throw std::invalid_argument("nullifier_variances: dimension mismatch");
    const RMatrix cov = quadrature_covariance(state);
    RMatrix k = RMatrix::Zero(n, 2 * n);
    for (Eigen::Index m = 0; m < n; ++m) {
        k(m, 2 * m + 1) = 1.0;
        for (Eigen::Index j = 0; j < n; ++j) k(m, 2 * j) -= nm.a(m, j);
    }
    return (k * cov * k.transpose()).diagonal();
}

}  // namespace chiral_drain
