#pragma once

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "chiral_drain/core.hpp"
#include "chiral_drain/gaussian.hpp"
#include "chiral_drain/lattice.hpp"
#include "chiral_drain/spectral.hpp"
#include "chiral_drain/symmetry.hpp"

namespace chiral_drain {

using json = nlohmann::json;

/// Malformed input document or configuration.
class SchemaError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline const json& require(const json& j, const char* key, const char* where) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string(where) + ": missing field '" + key + "'");
    return j.at(key);
}

inline json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw SchemaError("complex value must be [re, im]");
    return {j[0].get<Real>(), j[1].get<Real>()};
}

inline json matrix_json(const CMatrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_json(m(i, k)));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline CMatrix matrix_from(const json& j, Eigen::Index n) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n) throw SchemaError("matrix must have n_sites rows");
    CMatrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw SchemaError("matrix row has wrong length");
        for (Eigen::Index k = 0; k < n; ++k) m(i, k) = complex_from(row[static_cast<std::size_t>(k)]);
    }
    return m;
}

/// Fixed count of significant digits, for CSV output.
inline std::string sig(Real v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Lattice document

inline json lattice_to_json(const Lattice& lattice) {
    json sites = json::array();
    for (const auto& s : lattice.sites()) {
        json entry = {{"index", s.index}, {"coord", s.coord}};
        if (s.sublattice) entry["sublattice"] = *s.sublattice;
        sites.push_back(std::move(entry));
    }
    const CMatrix& h = lattice.hamiltonian();
    json hops = json::array();
    for (Eigen::Index m = 0; m < h.rows(); ++m)
        for (Eigen::Index n = 0; n < h.cols(); ++n)
            if (m != n && h(m, n) != Complex(0.0))
                hops.push_back(json::array({m, n, h(m, n).real(), h(m, n).imag()}));
    json pots = json::array();
    for (Eigen::Index i = 0; i < h.rows(); ++i) pots.push_back(h(i, i).real());
    json model = {{"name", lattice.model().name}};
    for (const auto& [k, v] : lattice.model().params) model[k] = v;
    return {{"n_sites", lattice.n_sites()}, {"sites", sites}, {"hoppings", hops}, {"potentials", pots}, {"model", model}};
}

inline Lattice lattice_from_json(const json& doc) {
    const char* where = "lattice";
    const json& jn = detail::require(doc, "n_sites", where);
    if (!jn.is_number_integer() || jn.get<long long>() < 1) throw SchemaError("lattice: n_sites must be a positive integer");
    const auto n = static_cast<Eigen::Index>(jn.get<long long>());

    std::vector<Site> sites(static_cast<std::size_t>(n));
    const json& js = detail::require(doc, "sites", where);
    if (!js.is_array() || static_cast<Eigen::Index>(js.size()) != n) throw SchemaError("lattice: sites must list n_sites entries");
    for (const json& e : js) {
        const json& ji = detail::require(e, "index", "site");
        if (!ji.is_number_integer() || ji.get<long long>() < 0 || ji.get<long long>() >= n)
            throw SchemaError("lattice: site index out of range");
        Site s;
        s.index = ji.get<std::size_t>();
        if (e.contains("coord")) {
            if (!e["coord"].is_array()) throw SchemaError("lattice: coord must be an integer array");
            for (const json& c : e["coord"]) {
                if (!c.is_number_integer()) throw SchemaError("lattice: coord must be an integer array");
                s.coord.push_back(c.get<int>());
            }
        }
        if (e.contains("sublattice")) {
            if (!e["sublattice"].is_number_integer()) throw SchemaError("lattice: sublattice must be 0 or 1");
            s.sublattice = e["sublattice"].get<int>();
        }
        sites[s.index] = std::move(s);
    }

    CMatrix h = CMatrix::Zero(n, n);
    for (const json& hop : detail::require(doc, "hoppings", where)) {
        if (!hop.is_array() || hop.size() != 4 || !hop[0].is_number_integer() || !hop[1].is_number_integer())
            throw SchemaError("lattice: hopping entries must be [m, n, re, im]");
        const auto m = hop[0].get<long long>(), k = hop[1].get<long long>();
        if (m < 0 || k < 0 || m >= n || k >= n || m == k) throw SchemaError("lattice: hopping index out of range");
        h(m, k) = Complex(hop[2].get<Real>(), hop[3].get<Real>());
    }
    const json& jp = detail::require(doc, "potentials", where);
    if (!jp.is_array() || static_cast<Eigen::Index>(jp.size()) != n) throw SchemaError("lattice: potentials must have n_sites entries");
    for (Eigen::Index i = 0; i < n; ++i) h(i, i) = jp[static_cast<std::size_t>(i)].get<Real>();

    ModelInfo model;
    if (doc.contains("model") && doc["model"].is_object()) {
        for (const auto& [k, v] : doc["model"].items()) {
            if (k == "name" && v.is_string()) model.name = v.get<std::string>();
            else if (v.is_number()) model.params[k] = v.get<double>();
        }
    }
    try {
        return Lattice(std::move(h), std::move(sites), std::move(model));
    } catch (const SchemaError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
}

// ---------------------------------------------------------------------------
// Exports

inline json state_to_json(const CovarianceState& state, const Lattice& lattice) {
    json labels = json::array();
    for (std::size_t i = 0; i < lattice.n_sites(); ++i) labels.push_back(lattice.site_label(i));
    return {{"n_sites", state.size()},
            {"labels", labels},
            {"normal", detail::matrix_json(state.normal)},
            {"anomalous", detail::matrix_json(state.anomalous)},
            {"solver_residual", state.solver_residual}};
}

inline CovarianceState state_from_json(const json& doc) {
    const auto n = static_cast<Eigen::Index>(detail::require(doc, "n_sites", "state").get<long long>());
    CovarianceState s;
    s.normal = detail::matrix_from(detail::require(doc, "normal", "state"), n);
    s.anomalous = detail::matrix_from(detail::require(doc, "anomalous", "state"), n);
    s.solver_residual = doc.value("solver_residual", 0.0);
    return s;
}

/// |<a_m a_n>| / (cosh r sinh r) as CSV with site labels on the header row and
/// first column. With r = 0 the raw magnitudes (all zero) are written.
inline void write_heatmap_csv(std::ostream& os, const CovarianceState& state, const Lattice& lattice,
                              const NoiseParams& noise) {
    const Real norm = std::abs(noise.anomalous());
    const Real scale = norm > 0.0 ? 1.0 / norm : 1.0;
    const auto n = static_cast<Eigen::Index>(state.size());
    os << "site";
    for (Eigen::Index k = 0; k < n; ++k) os << ",\"" << lattice.site_label(static_cast<std::size_t>(k)) << "\"";
    os << "\n";
    for (Eigen::Index m = 0; m < n; ++m) {
        os << "\"" << lattice.site_label(static_cast<std::size_t>(m)) << "\"";
        for (Eigen::Index k = 0; k < n; ++k) os << "," << detail::sig(std::abs(state.anomalous(m, k)) * scale, 9);
        os << "\n";
    }
}

/// Correlations of one reference site with every site, one row per site.
inline void write_slice_csv(std::ostream& os, const CovarianceState& state, const Lattice& lattice,
                            const NoiseParams& noise, std::size_t reference) {
    const Real norm = std::abs(noise.anomalous());
    const Real scale = norm > 0.0 ? 1.0 / norm : 1.0;
    os << "site,label";
    const std::size_t dims = lattice.site(0).coord.size();
    static constexpr const char* axes[] = {"x", "y", "z"};
    for (std::size_t d = 0; d < dims && d < 3; ++d) os << "," << axes[d];
    os << ",value\n";
    for (std::size_t k = 0; k < state.size(); ++k) {
        os << k << ",\"" << lattice.site_label(k) << "\"";
        for (std::size_t d = 0; d < dims && d < 3; ++d) os << "," << lattice.site(k).coord[d];
        os << "," << detail::sig(std::abs(state.anomalous(static_cast<Eigen::Index>(reference),
                                                          static_cast<Eigen::Index>(k))) * scale, 9)
           << "\n";
    }
}

inline json spectrum_to_json(const DrainCoupling& coupling, const DynamicalSpectrum& spec) {
    json energies = json::array(), rates = json::array(), eig = json::array(), res = json::array();
    for (Eigen::Index i = 0; i < coupling.basis.energies.size(); ++i) {
        energies.push_back(coupling.basis.energies(i));
        rates.push_back(coupling.rates(i));
    }
    for (Eigen::Index k = 0; k < spec.eigenvalues.size(); ++k) {
        eig.push_back(json::array({spec.nu(static_cast<std::size_t>(k)), spec.gamma(static_cast<std::size_t>(k))}));
        res.push_back(spec.residuals(k));
    }
    json out = {{"drain", coupling.drain},
                {"gamma", coupling.gamma},
                {"energies", energies},
                {"drain_rates", rates},
                {"dark_modes", coupling.dark_modes},
                {"dynamical_eigenvalues", eig},
                {"consistency_residuals", res},
                {"max_consistency_residual", spec.max_residual()}};
    out["min_relaxation_rate"] = std::isfinite(spec.min_bright_gamma) ? json(spec.min_bright_gamma) : json(nullptr);
    return out;
}

inline json symmetry_report_to_json(const SymmetryReport& rep) {
    json out = {{"provenance", std::string(to_string(rep.provenance))},
                {"relation", std::string(to_string(rep.relation))},
                {"chiral_residual", rep.chiral_residual},
                {"sublattice_residual", rep.sublattice_residual},
                {"unitarity_residual", rep.unitarity_residual},
                {"symmetry_residual", rep.symmetry_residual},
                {"threshold", rep.threshold},
                {"pass", rep.pass}};
    out["drain_residual"] = rep.drain_residual ? json(*rep.drain_residual) : json(nullptr);
    return out;
}

}  // namespace chiral_drain
