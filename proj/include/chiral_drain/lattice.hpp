#pragma once

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "chiral_drain/core.hpp"

namespace chiral_drain {

struct Site {
    std::size_t index = 0;
    std::vector<int> coord;
    std::optional<int> sublattice;  // 0 = A, 1 = B

    bool operator==(const Site&) const = default;
};

struct ModelInfo {
    std::string name = "custom";
    std::map<std::string, double> params;

    bool operator==(const ModelInfo&) const = default;
};

/// Hermitian tight-binding Hamiltonian with per-site metadata.
///
/// H(m, n) is the coefficient of a_m^dagger a_n. Diagonal entries are on-site
/// potentials, off-diagonal entries hoppings. Instances are immutable; every
/// transformation returns a new lattice.
class Lattice {
public:
    Lattice(CMatrix hamiltonian, std::vector<Site> sites, ModelInfo model = {})
        : h_(std::move(hamiltonian)), sites_(std::move(sites)), model_(std::move(model)) {
        if (h_.rows() != h_.cols()) throw std::invalid_argument("lattice: Hamiltonian must be square");
        if (static_cast<std::size_t>(h_.rows()) != sites_.size())
            throw std::invalid_argument("lattice: site list size does not match Hamiltonian");
        if (sites_.empty()) throw std::invalid_argument("lattice: at least one site required");
        bool any_label = false, all_label = true;
        for (std::size_t k = 0; k < sites_.size(); ++k) {
            if (sites_[k].index != k) throw std::invalid_argument("lattice: site indices must be contiguous 0..N-1");
            if (sites_[k].sublattice) {
                any_label = true;
                if (*sites_[k].sublattice != 0 && *sites_[k].sublattice != 1)
                    throw std::invalid_argument("lattice: sublattice label must be 0 or 1");
            } else {
                all_label = false;
            }
        }
        if (any_label && !all_label) throw std::invalid_argument("lattice: sublattice labels must cover every site");
        const Real residual = max_abs(h_ - h_.adjoint());
        if (residual > 1e-12 * unit_scale(h_))
            throw std::invalid_argument("lattice: Hamiltonian is not Hermitian (residual " + std::to_string(residual) + ")");
    }

    std::size_t n_sites() const { return sites_.size(); }
    const CMatrix& hamiltonian() const { return h_; }
    const std::vector<Site>& sites() const { return sites_; }
    const Site& site(std::size_t i) const { return sites_.at(i); }
    const ModelInfo& model() const { return model_; }

    bool has_sublattice() const { return sites_.front().sublattice.has_value(); }
    std::vector<int> sublattice_labels() const {
        std::vector<int> out;
        out.reserve(sites_.size());
        for (const auto& s : sites_) {
            if (!s.sublattice) throw std::invalid_argument("lattice: sublattice labels missing");
            out.push_back(*s.sublattice);
        }
        return out;
    }

    /// Site whose coordinate equals `coord`, if any.
    std::optional<std::size_t> find(std::span<const int> coord) const {
        for (const auto& s : sites_)
            if (std::ranges::equal(s.coord, coord)) return s.index;
        return std::nullopt;
    }
    std::size_t at_coord(std::initializer_list<int> coord) const {
        std::vector<int> c(coord);
        auto idx = find(c);
        if (!idx) throw std::invalid_argument("lattice: no site at requested coordinate");
        return *idx;
    }

    std::string site_label(std::size_t i) const {
        const auto& c = sites_.at(i).coord;
        if (c.empty()) return std::to_string(i);
        std::string out = "(";
        for (std::size_t k = 0; k < c.size(); ++k) {
            if (k) out += ",";
            out += std::to_string(c[k]);
        }
        return out + ")";
    }

    Real norm() const { return max_abs(h_); }

private:
    CMatrix h_;
    std::vector<Site> sites_;
    ModelInfo model_;
};

// ---------------------------------------------------------------------------
// Builders

/// Open chain with H(i+1, i) = hopping[i]. Coordinates are centred so that
/// odd chains have a site at the origin; sublattice labels alternate 0,1,0,...
inline Lattice build_chain(std::size_t n_sites, std::span<const Complex> hopping,
                           std::span<const Real> potentials = {}) {
    if (n_sites < 1) throw std::invalid_argument("build_chain: n_sites must be >= 1");
    if (hopping.size() != 1 && hopping.size() != n_sites - 1 && !(n_sites == 1 && hopping.empty()))
        throw std::invalid_argument("build_chain: hopping list must be uniform (1 value) or have n_sites-1 entries");
    if (!potentials.empty() && potentials.size() != n_sites)
        throw std::invalid_argument("build_chain: potential list must have n_sites entries");

    const auto n = static_cast<Eigen::Index>(n_sites);
    CMatrix h = CMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const Complex t = hopping.size() == 1 ? hopping[0] : hopping[static_cast<std::size_t>(i)];
        h(i + 1, i) = t;
        h(i, i + 1) = std::conj(t);
    }
    for (Eigen::Index i = 0; i < n && !potentials.empty(); ++i) h(i, i) = potentials[static_cast<std::size_t>(i)];

    std::vector<Site> sites(n_sites);
    const int offset = static_cast<int>((n_sites - 1) / 2);
    for (std::size_t i = 0; i < n_sites; ++i)
        sites[i] = Site{i, {static_cast<int>(i) - offset}, static_cast<int>(i % 2)};

    ModelInfo model{"chain", {{"sites", static_cast<double>(n_sites)}}};
    if (hopping.size() == 1) {
        model.params["hopping_re"] = hopping[0].real();
        model.params["hopping_im"] = hopping[0].imag();
    }
    return Lattice(std::move(h), std::move(sites), std::move(model));
}

inline Lattice build_chain(std::size_t n_sites, Complex hopping = -1.0, std::span<const Real> potentials = {}) {
    const Complex hop[1] = {hopping};
    return build_chain(n_sites, std::span<const Complex>(hop), potentials);
}

/// Row-major index (x fastest) of site (x, y) in a (2M+1)x(2M+1) square.
inline std::size_t square_index(int half_size, int x, int y) {
    const int side = 2 * half_size + 1;
    return static_cast<std::size_t>((y + half_size) * side + (x + half_size));
}

/// Open-boundary Hofstadter square lattice, x,y in [-M, M]:
///   H = -J sum (a+_{x+1,y} a_{x,y} + e^{i flux x} a+_{x,y+1} a_{x,y} + h.c.)
inline Lattice build_hofstadter(int half_size, Real hopping, Real flux) {
    if (half_size < 1) throw std::invalid_argument("build_hofstadter: half_size must be >= 1");
    const int m = half_size;
    const int side = 2 * m + 1;
    const auto n = static_cast<Eigen::Index>(side * side);
    CMatrix h = CMatrix::Zero(n, n);
    std::vector<Site> sites(static_cast<std::size_t>(n));

    for (int y = -m; y <= m; ++y) {
        for (int x = -m; x <= m; ++x) {
            const auto here = static_cast<Eigen::Index>(square_index(m, x, y));
            sites[static_cast<std::size_t>(here)] = Site{static_cast<std::size_t>(here), {x, y}, ((x + y) % 2 + 2) % 2};
            if (x < m) {
                const auto right = static_cast<Eigen::Index>(square_index(m, x + 1, y));
                h(right, here) += -hopping;
                h(here, right) += -hopping;
            }
            if (y < m) {
                const auto up = static_cast<Eigen::Index>(square_index(m, x, y + 1));
                const Complex t = -hopping * std::polar(1.0, flux * x);
                h(up, here) += t;
                h(here, up) += std::conj(t);
            }
        }
    }
    ModelInfo model{"hofstadter", {{"half_size", m}, {"hopping", hopping}, {"flux", flux}}};
    return Lattice(std::move(h), std::move(sites), std::move(model));
}

namespace detail {
inline void require_both_sublattices(std::span<const int> labels) {
    const bool has_a = std::ranges::count(labels, 0) > 0;
    const bool has_b = std::ranges::count(labels, 1) > 0;
    if (!has_a || !has_b) throw std::invalid_argument("build_bipartite_random: both sublattices must be non-empty");
    for (int s : labels)
        if (s != 0 && s != 1) throw std::invalid_argument("build_bipartite_random: labels must be 0 or 1");
}
}  // namespace detail

/// Random real hoppings on the A-B bonds of `graph` (bonds are the nonzero
/// off-diagonal entries). Same-sublattice bonds and potentials are dropped.
inline Lattice build_bipartite_random(const Lattice& graph, std::uint64_t seed, Real amplitude) {
    const auto labels = graph.sublattice_labels();
    detail::require_both_sublattices(labels);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Real> dist(-amplitude, amplitude);

    const CMatrix& g = graph.hamiltonian();
    const auto n = g.rows();
    CMatrix h = CMatrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j + 1; i < n; ++i)
            if (std::abs(g(i, j)) > 0.0 && labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) {
                const Real t = dist(rng);
                h(i, j) = t;
                h(j, i) = t;
            }
    ModelInfo model = graph.model();
    model.name = "bipartite_random:" + model.name;
    model.params["seed"] = static_cast<double>(seed);
    model.params["amplitude"] = amplitude;
    return Lattice(std::move(h), graph.sites(), std::move(model));
}

/// Complete bipartite graph over the given labels with random real hoppings.
inline Lattice build_bipartite_random(std::span<const int> labels, std::uint64_t seed, Real amplitude) {
    detail::require_both_sublattices(labels);
    const auto n = static_cast<Eigen::Index>(labels.size());
    std::vector<Site> sites(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) sites[i] = Site{i, {static_cast<int>(i)}, labels[i]};
    CMatrix complete = CMatrix::Ones(n, n) - CMatrix::Identity(n, n);
    Lattice graph(std::move(complete), std::move(sites), ModelInfo{"complete_bipartite", {}});
    return build_bipartite_random(graph, seed, amplitude);
}

/// Adds i.i.d. uniform on-site potentials with zero mean and the given
/// variance, drawn from [-sqrt(3 var), sqrt(3 var)]. Excluded sites keep their
/// original potential. One draw is consumed per site, excluded or not.
inline Lattice add_disorder(const Lattice& lattice, Real variance, std::uint64_t seed,
                            const std::set<std::size_t>& exclude = {}) {
    if (!(variance >= 0.0)) throw std::invalid_argument("add_disorder: variance must be non-negative");
    CMatrix h = lattice.hamiltonian();
    const Real half_width = std::sqrt(3.0 * variance);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Real> dist(-1.0, 1.0);
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        const Real v = half_width * dist(rng);
        if (!exclude.contains(static_cast<std::size_t>(i))) h(i, i) += v;
    }
    ModelInfo model = lattice.model();
    model.params["disorder_variance"] = variance;
    model.params["disorder_seed"] = static_cast<double>(seed);
    return Lattice(std::move(h), lattice.sites(), std::move(model));
}

/// Adds a fixed potential profile to the diagonal.
inline Lattice add_potential(const Lattice& lattice, std::span<const Real> potentials) {
    if (potentials.size() != lattice.n_sites()) throw std::invalid_argument("add_potential: size mismatch");
    CMatrix h = lattice.hamiltonian();
    for (Eigen::Index i = 0; i < h.rows(); ++i) h(i, i) += potentials[static_cast<std::size_t>(i)];
    return Lattice(std::move(h), lattice.sites(), lattice.model());
}

// ---------------------------------------------------------------------------
// Diagnostics

struct LatticeDiagnostics {
    Real hermiticity_residual = 0.0;  // max |H - H^dagger|
    bool connected = true;
    std::size_t components = 1;
    std::size_t matrix_bandwidth = 0;  // max |m - n| over nonzero entries
    Real spectral_width = 0.0;         // eps_max - eps_min of the Hermitian part
};

inline LatticeDiagnostics validate(const CMatrix& h) {
    LatticeDiagnostics out;
    if (h.rows() != h.cols()) throw std::invalid_argument("validate: Hamiltonian must be square");
    const auto n = h.rows();
    out.hermiticity_residual = max_abs(h - h.adjoint());

    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    int n_comp = 0;
    for (Eigen::Index s = 0; s < n; ++s) {
        if (comp[static_cast<std::size_t>(s)] >= 0) continue;
        std::queue<Eigen::Index> q;
        q.push(s);
        comp[static_cast<std::size_t>(s)] = n_comp;
        while (!q.empty()) {
            const auto u = q.front();
            q.pop();
            for (Eigen::Index v = 0; v < n; ++v) {
                if (v == u || comp[static_cast<std::size_t>(v)] >= 0) continue;
                if (std::abs(h(u, v)) > 0.0 || std::abs(h(v, u)) > 0.0) {
                    comp[static_cast<std::size_t>(v)] = n_comp;
                    q.push(v);
                }
            }
        }
        ++n_comp;
    }
    out.components = static_cast<std::size_t>(n_comp);
    out.connected = n_comp <= 1;

    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::abs(h(i, j)) > 0.0)
                out.matrix_bandwidth = std::max(out.matrix_bandwidth, static_cast<std::size_t>(std::abs(i - j)));

    const CMatrix herm = 0.5 * (h + h.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(herm, Eigen::EigenvaluesOnly);
    if (es.info() == Eigen::Success && n > 0)
        out.spectral_width = es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff();
    return out;
}

inline LatticeDiagnostics validate(const Lattice& lattice) { return validate(lattice.hamiltonian()); }

}  // namespace chiral_drain
