#pragma once

#include <complex>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "chiral_drain/core.hpp"

namespace chiral_drain {

template <typename T>
using CMatrixT = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;

enum class SylvesterMethod { eigen_diagonal, schur };

template <typename T>
struct SylvesterSolution {
    CMatrixT<T> x;
    SylvesterMethod method = SylvesterMethod::eigen_diagonal;
    T condition = 0;  // max eigenvector-basis condition estimate (1-norm)
};

namespace detail {

template <typename T>
T norm1(const CMatrixT<T>& m) {
    return m.cwiseAbs().colwise().sum().maxCoeff();
}

template <typename T>
SylvesterSolution<T> sylvester_schur(const CMatrixT<T>& a, const CMatrixT<T>& b, const CMatrixT<T>& c) {
    using C = std::complex<T>;
    Eigen::ComplexSchur<CMatrixT<T>> sa(a), sb(b);
    if (sa.info() != Eigen::Success || sb.info() != Eigen::Success)
        throw NumericalError("sylvester: Schur decomposition did not converge");
    const CMatrixT<T>& ta = sa.matrixT();
    const CMatrixT<T>& tb = sb.matrixT();
    const CMatrixT<T>& ua = sa.matrixU();
    const CMatrixT<T>& ub = sb.matrixU();
    const Eigen::Index n = a.rows(), m = b.rows();
    CMatrixT<T> f = -(ua.adjoint() * c * ub);
    CMatrixT<T> y = CMatrixT<T>::Zero(n, m);
    // Column sweep over the upper-triangular tb.
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::Matrix<C, Eigen::Dynamic, 1> rhs = f.col(j);
        for (Eigen::Index k = 0; k < j; ++k) rhs -= tb(k, j) * y.col(k);
        CMatrixT<T> shifted = ta;
        shifted.diagonal().array() += tb(j, j);
        for (Eigen::Index i = 0; i < n; ++i)
            if (shifted(i, i) == C(0)) throw NumericalError("sylvester: singular operator (lambda_i + mu_j = 0)");
        y.col(j) = shifted.template triangularView<Eigen::Upper>().solve(rhs);
    }
    SylvesterSolution<T> out;
    out.x = ua * y * ub.adjoint();
    out.method = SylvesterMethod::schur;
    return out;
}

}  // namespace detail

/// Solves A X + X B + C = 0.
///
/// Fast path diagonalizes A and B and divides element-wise by
/// (lambda_i + mu_j) in the eigenbasis. When either eigenvector basis has
/// 1-norm condition above `max_condition`, falls back to a complex Schur
/// (Bartels-Stewart) solve.
template <typename T>
SylvesterSolution<T> solve_sylvester(const CMatrixT<T>& a, const CMatrixT<T>& b, const CMatrixT<T>& c,
                                     T max_condition = T(1e8)) {
    using C = std::complex<T>;
    if (a.rows() != a.cols() || b.rows() != b.cols() || c.rows() != a.rows() || c.cols() != b.rows())
        throw std::invalid_argument("sylvester: dimension mismatch");

    Eigen::ComplexEigenSolver<CMatrixT<T>> ea(a), eb(b);
    if (ea.info() != Eigen::Success || eb.info() != Eigen::Success) return detail::sylvester_schur(a, b, c);

    const CMatrixT<T>& va = ea.eigenvectors();
    const CMatrixT<T>& vb = eb.eigenvectors();
    Eigen::PartialPivLU<CMatrixT<T>> lua(va), lub(vb);
    const CMatrixT<T> va_inv = lua.inverse();
    const CMatrixT<T> vb_inv = lub.inverse();
    const T cond = std::max(detail::norm1(va) * detail::norm1(va_inv), detail::norm1(vb) * detail::norm1(vb_inv));
    if (!(cond <= max_condition)) {
        auto out = detail::sylvester_schur(a, b, c);
        out.condition = cond;
        return out;
    }

    CMatrixT<T> y = -(va_inv * c * vb);
    for (Eigen::Index j = 0; j < y.cols(); ++j)
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            const C denom = ea.eigenvalues()(i) + eb.eigenvalues()(j);
            if (denom == C(0)) throw NumericalError("sylvester: singular operator (lambda_i + mu_j = 0)");
            y(i, j) /= denom;
        }
    SylvesterSolution<T> out;
    out.x = va * y * vb_inv;
    out.condition = cond;
    out.method = SylvesterMethod::eigen_diagonal;
    return out;
}

template <typename T>
T sylvester_residual(const CMatrixT<T>& a, const CMatrixT<T>& b, const CMatrixT<T>& c, const CMatrixT<T>& x) {
    return (a * x + x * b + c).cwiseAbs().maxCoeff();
}

}  // namespace chiral_drain
