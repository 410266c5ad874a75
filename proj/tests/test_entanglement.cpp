#include <cmath>

#include <gtest/gtest.h>

#include "chiral_drain/entanglement.hpp"
#include "chiral_drain/steady.hpp"
#include "oracles.hpp"

using namespace chiral_drain;

namespace {

CovarianceState hofstadter_state(std::pair<int, int> drain, Real r = 1.0, Real phi = 0.0) {
    const Lattice lat = build_hofstadter(4, 1.0, kPi / 2);
    return steady_state(lat, {lat.at_coord({drain.first, drain.second}), 3.0, {r, phi}, 0.0});
}

}  // namespace

TEST(SymplecticEigenvalues, VacuumAndThermal) {
    const RMatrix vac = 0.5 * RMatrix::Identity(4, 4);
    const RVector nu = symplectic_eigenvalues(vac);
    EXPECT_NEAR(nu(0), 0.5, 1e-14);
    EXPECT_NEAR(nu(1), 0.5, 1e-14);

    RMatrix thermal = RMatrix::Identity(4, 4);
    thermal.block(0, 0, 2, 2) *= 0.5 + 0.3;
    thermal.block(2, 2, 2, 2) *= 0.5 + 2.0;
    const RVector nt = symplectic_eigenvalues(thermal);
    EXPECT_NEAR(nt(0), 0.8, 1e-14);
    EXPECT_NEAR(nt(1), 2.5, 1e-14);
}

TEST(LogNegativity, TwoModeSqueezedCalibration) {
    for (Real r : {0.1, 0.5, 1.0, 2.0}) {
        const TwoModeCovariance two{oracle::two_mode_squeezed(r), 0, 1};
        EXPECT_NEAR(log_negativity(two), 2 * r, 1e-8) << r;
    }
    EXPECT_EQ(log_negativity(TwoModeCovariance{oracle::two_mode_squeezed(0.0), 0, 1}), 0.0);
}

TEST(LogNegativity, ReducedFromMoments) {
    // TMS in moment form: <a1 a2> = cosh r sinh r, <a_i^dag a_i> = sinh^2 r.
    const Real r = 0.7;
    CovarianceState s = CovarianceState::vacuum(3);
    s.normal(0, 0) = s.normal(2, 2) = std::sinh(r) * std::sinh(r);
    s.anomalous(0, 2) = s.anomalous(2, 0) = std::cosh(r) * std::sinh(r);
    EXPECT_NEAR(log_negativity(s, 0, 2), 2 * r, 1e-12);
    EXPECT_NEAR(log_negativity(s, 2, 0), 2 * r, 1e-12);
    EXPECT_EQ(log_negativity(s, 0, 1), 0.0);
    const auto two = reduced_covariance(s, 0, 2);
    EXPECT_LT((two.cov - oracle::two_mode_squeezed(r)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(reduced_covariance(s, 1, 1), std::invalid_argument);
}

TEST(LogNegativity, PhaseDoesNotMatter) {
    const Real r = 0.9;
    for (Real phi : {0.0, 0.8, kPi / 2, 2.5}) {
        CovarianceState s = CovarianceState::vacuum(2);
        s.normal(0, 0) = s.normal(1, 1) = std::sinh(r) * std::sinh(r);
        s.anomalous(0, 1) = s.anomalous(1, 0) = std::polar(std::cosh(r) * std::sinh(r), phi);
        EXPECT_NEAR(log_negativity(s, 0, 1), 2 * r, 1e-12) << phi;
    }
}

TEST(LogNegativity, SymmetricInSiteOrder) {
    const auto s = hofstadter_state({2, 4});
    for (std::size_t m = 0; m < 81; m += 7)
        for (std::size_t n = m + 1; n < 81; n += 5) EXPECT_EQ(log_negativity(s, m, n), log_negativity(s, n, m));
}

TEST(MirroredPairs, CleanLatticeCalibration) {
    const Lattice lat = build_hofstadter(4, 1.0, kPi / 2);
    for (Real r : {0.5, 1.0}) {
        const auto s = hofstadter_state({2, 2}, r);
        const auto pairs = mirrored_pairs(s, lat);
        EXPECT_EQ(pairs.size(), 72u);
        Real lo = 1e9, hi = -1e9;
        for (const auto& p : pairs) {
            lo = std::min(lo, p.log_negativity);
            hi = std::max(hi, p.log_negativity);
        }
        EXPECT_NEAR(lo, 2 * r, 1e-8);
        EXPECT_LT(hi - lo, 1e-8);
        EXPECT_NEAR(mirrored_pair_average(s, lat), std::log(std::sqrt(2.0)) * 2 * r, 1e-8);
    }
}

TEST(MirroredPairs, DrainSiteIsUnentangled) {
    const Lattice lat = build_hofstadter(4, 1.0, kPi / 2);
    const auto s = hofstadter_state({2, 2});
    const std::size_t d = lat.at_coord({2, 2});
    for (std::size_t k = 0; k < 81; ++k)
        if (k != d) EXPECT_LT(log_negativity(s, d, k), 1e-8);
}

TEST(MirroredPairs, RequiresSquareLattice) {
    const Lattice chain = build_chain(9);
    EXPECT_THROW(mirrored_pair_average(CovarianceState::vacuum(9), chain), std::invalid_argument);
}

TEST(Nullifier, RealSigmaAtZeroPhaseGivesZeroMatrix) {
    const auto sig = sigma_hofstadter(HofstadterVariant::z0, 4, kPi / 2);
    const auto nm = nullifier_matrix(sig, {1.0, 0.0});
    EXPECT_EQ(nm.a.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Nullifier, PrintedFormulaDoesNotCertifyEverySite) {
    // Evaluated as written, the nullifier matrix leaves many variances above
    // the vacuum value 1/2. At phi = 0 some sites still come out squeezed; at
    // phi = 0.7 none do.
    const Real r = 1.0;
    const auto nm0 = nullifier_matrix(sigma_hofstadter(HofstadterVariant::zz, 4, kPi / 2), {r, 0.0});
    const RVector var0 = nullifier_variances(hofstadter_state({2, 2}, r, 0.0), nm0);
    EXPECT_GT(var0.maxCoeff(), 0.5);
    EXPECT_LT(var0.minCoeff(), 0.5);
    const auto nm7 = nullifier_matrix(sigma_hofstadter(HofstadterVariant::zz, 4, kPi / 2), {r, 0.7});
    const RVector var7 = nullifier_variances(hofstadter_state({2, 2}, r, 0.7), nm7);
    EXPECT_GT(var7.minCoeff(), 0.5);
    // with A = 0 the drain-site "nullifier" is just p, squeezed to e^{-2r}/2
    const Lattice lat = build_hofstadter(4, 1.0, kPi / 2);
    const auto s0 = hofstadter_state({2, 0}, r, 0.0);
    const auto v0 = nullifier_variances(s0, nullifier_matrix(sigma_hofstadter(HofstadterVariant::z0, 4, kPi / 2), {r, 0.0}));
    EXPECT_NEAR(v0(static_cast<Eigen::Index>(lat.at_coord({2, 0}))), 0.5 * std::exp(-2 * r), 1e-9);
}
