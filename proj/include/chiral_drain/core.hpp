#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chiral_drain {

using Real = double;
using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};
inline constexpr Real kPi = 3.14159265358979323846;

/// Thrown when a numerical procedure cannot produce a trustworthy result
/// (singular drift, eigensolver failure, unstable integration).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Steady state is not unique because some eigenmodes never see the drain.
class DarkModeError : public NumericalError {
public:
    DarkModeError(const std::string& what, std::vector<std::size_t> dark)
        : NumericalError(what), dark_modes(std::move(dark)) {}
    std::vector<std::size_t> dark_modes;
};

template <typename Derived>
Real max_abs(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) return 0.0;
    return static_cast<Real>(m.cwiseAbs().maxCoeff());
}

/// Largest entry magnitude, floored at 1. Used as the scale for relative tolerances.
template <typename Derived>
Real unit_scale(const Eigen::MatrixBase<Derived>& m) {
    return std::max<Real>(1.0, max_abs(m));
}

inline std::string join_indices(const std::vector<std::size_t>& idx, std::size_t limit = 32) {
    std::string out;
    for (std::size_t k = 0; k < idx.size() && k < limit; ++k) {
        if (k) out += ",";
        out += std::to_string(idx[k]);
    }
    if (idx.size() > limit) out += ",...";
    return out;
}

}  // namespace chiral_drain
