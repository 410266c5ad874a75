#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "chiral_drain/lattice.hpp"
#include "chiral_drain/spectral.hpp"
#include "oracles.hpp"

using namespace chiral_drain;

namespace {

std::vector<Complex> random_real_hoppings(std::size_t bonds, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Real> d(0.3, 1.7);
    std::vector<Complex> t(bonds);
    for (auto& x : t) x = -d(rng);
    return t;
}

// Eigenvalues of H - i(Gamma/2) P_{n0}, sorted by real part.
std::vector<Complex> effective_eigenvalues(const CMatrix& h, std::size_t drain, Real gamma) {
    CMatrix heff = h;
    heff(static_cast<Eigen::Index>(drain), static_cast<Eigen::Index>(drain)) -= Complex(0.0, 0.5 * gamma);
    Eigen::ComplexEigenSolver<CMatrix> es(heff);
    std::vector<Complex> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::ranges::sort(out, [](Complex a, Complex b) { return a.real() < b.real(); });
    return out;
}

}  // namespace

TEST(Diagonalize, ReconstructsAndFixesPhase) {
    const Lattice lat = build_hofstadter(2, 1.0, 0.7);
    const auto eig = diagonalize(lat);
    EXPECT_LT(eig.reconstruction_residual, 1e-12);
    const CMatrix rebuilt = eig.modes * eig.energies.asDiagonal() * eig.modes.adjoint();
    EXPECT_LT(max_abs(rebuilt - lat.hamiltonian()), 1e-12);
    EXPECT_LT(max_abs(eig.modes.adjoint() * eig.modes - CMatrix::Identity(25, 25)), 1e-12);
}

TEST(DrainCouplings, ThreeSiteChainEndDrain) {
    const auto c = drain_couplings(build_chain(3), 0, 2.0);
    EXPECT_TRUE(c.dark_modes.empty());
    EXPECT_NEAR(c.rates(0), 0.5, 1e-12);
    EXPECT_NEAR(c.rates(1), 1.0, 1e-12);
    EXPECT_NEAR(c.rates(2), 0.5, 1e-12);
    for (Eigen::Index i = 0; i < 3; ++i) {
        EXPECT_NEAR(c.phases(i), 0.0, 1e-14);
        EXPECT_GT(c.amplitude(static_cast<std::size_t>(i)).real(), 0.0);
    }
}

TEST(DrainCouplings, ThreeSiteChainCenterDrainHasOneDarkMode) {
    const auto c = drain_couplings(build_chain(3), 1, 1.0);
    ASSERT_EQ(c.dark_modes.size(), 1u);
    EXPECT_EQ(c.dark_modes[0], 1u);
    EXPECT_EQ(c.rates(1), 0.0);
    EXPECT_NEAR(c.rates(0) + c.rates(2), 1.0, 1e-12);
}

TEST(DrainCouplings, RatesSumToGammaAndShellsConcentrate) {
    // Phi = 0 square lattice is highly degenerate.
    const Lattice lat = build_hofstadter(2, 1.0, 0.0);
    for (std::size_t drain : {0u, 7u, 12u, 3u}) {
        const auto c = drain_couplings(lat, drain, 3.0);
        EXPECT_NEAR(c.rates.sum(), 3.0, 1e-10);
        for (const auto& shell : c.basis.shells) {
            std::size_t carrying = 0;
            for (auto i : shell)
                if (!c.is_dark[i]) ++carrying;
            EXPECT_LE(carrying, 1u);
        }
        for (auto d : c.dark_modes) EXPECT_LT(std::abs(c.amplitude(d)), 1e-12);
        const CMatrix rebuilt = c.basis.modes * c.basis.energies.asDiagonal() * c.basis.modes.adjoint();
        EXPECT_LT(max_abs(rebuilt - lat.hamiltonian()), 1e-11);
    }
}

TEST(DrainCouplings, DarkCountMatchesKrylovOracle) {
    std::vector<std::pair<Lattice, std::size_t>> cases;
    cases.emplace_back(build_chain(3), 1);
    cases.emplace_back(build_chain(5), 2);
    cases.emplace_back(build_chain(7), 1);
    cases.emplace_back(build_hofstadter(1, 1.0, 0.0), 4);
    cases.emplace_back(build_hofstadter(2, 1.0, 0.0), 12);
    cases.emplace_back(build_hofstadter(2, 1.0, 0.0), 6);
    cases.emplace_back(build_hofstadter(2, 1.0, kPi / 2), 12);
    cases.emplace_back(build_hofstadter(3, 1.0, 2 * kPi / 5), 24);
    for (const auto& [lat, drain] : cases) {
        const auto c = drain_couplings(lat, drain, 1.0);
        const std::size_t bright = oracle::krylov_dimension(lat.hamiltonian(), drain);
        EXPECT_EQ(c.dark_modes.size(), lat.n_sites() - bright) << lat.model().name << " drain " << drain;
    }
}

TEST(DrainCouplings, HofstadterCensusFixture) {
    std::ifstream in(FIXTURE_DIR "/dark_census.json");
    ASSERT_TRUE(in.good());
    const auto doc = nlohmann::json::parse(in);
    const Lattice lat = build_hofstadter(doc["half_size"].get<int>(), 1.0, doc["flux_over_pi"].get<Real>() * kPi);
    for (const auto& d : doc["drains"]) {
        const auto coord = d["coord"].get<std::vector<int>>();
        const std::size_t drain = lat.at_coord({coord[0], coord[1]});
        const auto c = drain_couplings(lat, drain, 3.0);
        EXPECT_EQ(c.dark_modes.size(), d["dark_modes"].get<std::size_t>()) << coord[0] << "," << coord[1];
    }
}

TEST(ChiralPairing, HoldsOnBipartiteFixtures) {
    const Lattice chain = build_chain(6, random_real_hoppings(5, 3));
    const auto c = drain_couplings(chain, 2, 1.0);
    const auto p = chiral_pairing(c, 1e-9);
    EXPECT_TRUE(p.holds(1e-9));
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(p.partner[p.partner[i]], i);
        EXPECT_NEAR(c.basis.energies(static_cast<Eigen::Index>(i)) +
                        c.basis.energies(static_cast<Eigen::Index>(p.partner[i])), 0.0, 1e-10);
    }

    const Lattice hof = build_hofstadter(4, 1.0, kPi / 2);
    const auto ch = drain_couplings(hof, hof.at_coord({2, 2}), 3.0);
    const auto ph = chiral_pairing(ch, 1e-8);
    EXPECT_TRUE(ph.holds(1e-8)) << ph.energy_defect << " " << ph.amplitude_defect;
    EXPECT_EQ(ph.zero_modes.size(), 1u);
}

TEST(ChiralPairing, UniformPotentialBreaksIt) {
    const std::vector<Real> v(4, 0.3);
    const Lattice lat = build_chain(4, Complex(-1.0), v);
    const auto p = chiral_pairing(drain_couplings(lat, 0, 1.0), 1e-9);
    EXPECT_FALSE(p.holds(1e-9));
    EXPECT_FALSE(p.unpaired.empty());
    EXPECT_TRUE(std::isinf(p.energy_defect));
}

TEST(DynamicalSpectrum, MatchesEffectiveHamiltonian) {
    struct Case {
        Lattice lat;
        std::size_t drain;
        Real gamma;
    };
    std::vector<Case> cases = {{build_chain(2), 0, 1.0},
                               {build_chain(5, random_real_hoppings(4, 9)), 0, 2.0},
                               {build_hofstadter(2, 1.0, kPi / 2), 2, 3.0}};
    for (const auto& c : cases) {
        const auto coupling = drain_couplings(c.lat, c.drain, c.gamma);
        ASSERT_TRUE(coupling.dark_modes.empty());
        const auto spec = dynamical_spectrum(coupling);
        const auto ref = effective_eigenvalues(c.lat.hamiltonian(), c.drain, c.gamma);
        for (std::size_t k = 0; k < ref.size(); ++k) {
            EXPECT_NEAR(spec.eigenvalues(static_cast<Eigen::Index>(k)).real(), ref[k].real(), 1e-9);
            EXPECT_NEAR(spec.eigenvalues(static_cast<Eigen::Index>(k)).imag(), ref[k].imag(), 1e-9);
            EXPECT_LT(spec.eigenvalues(static_cast<Eigen::Index>(k)).imag(), 0.0);
        }
        EXPECT_LT(spec.max_residual(), 1e-8);
        EXPECT_NEAR(spec.eigenvalues.imag().sum(), -0.5 * c.gamma, 1e-9);  // trace
    }
}

TEST(DynamicalSpectrum, TwoSiteClosedForm) {
    // H = -J(a1+a2 + h.c.), drain on site 0: lambda = -i Gamma/4 +- sqrt(J^2 - Gamma^2/16)
    const Real j = 1.0, gamma = 1.0;
    const auto spec = dynamical_spectrum(drain_couplings(build_chain(2, Complex(-j)), 0, gamma));
    const Complex root = std::sqrt(Complex(j * j - gamma * gamma / 16.0));
    EXPECT_NEAR(std::abs(spec.eigenvalues(0) - (Complex(0, -gamma / 4) - root)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(spec.eigenvalues(1) - (Complex(0, -gamma / 4) + root)), 0.0, 1e-12);
    EXPECT_NEAR(spec.min_bright_gamma, gamma / 2, 1e-12);
}

TEST(DynamicalSpectrum, DarkModesAreReportedNotDamped) {
    const auto c = drain_couplings(build_chain(3), 1, 1.0);
    const auto spec = dynamical_spectrum(c);
    EXPECT_EQ(spec.dark_count(), 1u);
    for (std::size_t k = 0; k < 3; ++k) {
        if (spec.dark[k]) {
            EXPECT_EQ(spec.gamma(k), 0.0);
            EXPECT_EQ(spec.mode[k], 1u);
        } else {
            EXPECT_GT(spec.gamma(k), 0.0);
        }
    }
}

TEST(DynamicalSpectrum, LeftVectorsDiagonalizeA) {
    const auto c = drain_couplings(build_hofstadter(2, 1.0, kPi / 2), 3, 3.0);
    const CMatrix a = dynamical_matrix(c);
    const auto spec = dynamical_spectrum(a, c);
    const CMatrix lhs = spec.left * a;
    const CMatrix rhs = spec.eigenvalues.asDiagonal() * spec.left;
    EXPECT_LT(max_abs(lhs - rhs), 1e-9);
}
