// Prints who is correlated with whom on the 9x9 Hofstadter lattice for a few
// drain positions, plus purity and mirrored-pair entanglement.

#include <cstdio>

#include "chiral_drain/chiral_drain.hpp"

using namespace chiral_drain;

int main() {
    const Lattice lat = build_hofstadter(4, 1.0, kPi / 2);
    const NoiseParams noise{1.0, 0.0};
    const Real scale = std::abs(noise.anomalous());

    for (auto [x, y] : {std::pair{2, 2}, {0, 2}, {2, 0}, {2, 4}}) {
        const DrainSpec spec{lat.at_coord({x, y}), 3.0, noise, 0.0};
        const CovarianceState s = steady_state(lat, spec);

        // partners per site above 1e-8 |calM|
        std::size_t max_partners = 0;
        for (Eigen::Index m = 0; m < s.anomalous.rows(); ++m) {
            std::size_t k = 0;
            for (Eigen::Index n = 0; n < s.anomalous.cols(); ++n)
                if (std::abs(s.anomalous(m, n)) > 1e-8 * scale) ++k;
            max_partners = std::max(max_partners, k);
        }
        std::printf("drain (%d,%d): purity %.10f  max partners/site %zu  E_N avg %.6f\n", x, y, purity(s),
                    max_partners, mirrored_pair_average(s, lat));
    }

    const std::size_t center = lat.at_coord({0, 0});
    const auto coupling = drain_couplings(lat, center, 3.0);
    std::printf("drain (0,0): %zu dark modes\n", coupling.dark_modes.size());
}
