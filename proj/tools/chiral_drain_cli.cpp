// chiral_drain: build lattices, solve squeezed-drain steady states, certify
// chiral symmetry and sweep disorder / loss from the command line.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chiral_drain/chiral_drain.hpp"

namespace fs = std::filesystem;
using namespace chiral_drain;

namespace {

enum Exit { ok = 0, cert_fail = 1, usage = 2, numerical = 3 };

// ---------------------------------------------------------------------------
// configuration

const std::vector<std::string> kKeys = {"model",  "lattice", "half_size", "flux",    "hopping",      "sites",
                                        "potential", "drain", "gamma",    "r",       "phi",          "loss",
                                        "reference", "sigma", "relation", "axis",     "values",  "realizations", "seed",
                                        "jobs",   "format",  "out"};

json defaults() {
    unsigned jobs = 1;
    if (const char* env = std::getenv("CHIRAL_DRAIN_JOBS")) {
        try {
            jobs = static_cast<unsigned>(std::max(1L, std::stol(env)));
        } catch (...) {
            throw SchemaError("CHIRAL_DRAIN_JOBS must be a positive integer");
        }
    }
    return {{"model", "hofstadter"}, {"half_size", 4},    {"flux", "0.5pi"},  {"hopping", 1.0},
            {"sites", 3},            {"potential", 0.0},  {"gamma", 3.0},     {"r", 1.0},
            {"phi", 0.0},            {"loss", 0.0},       {"sigma", "bipartite"}, {"relation", "generalized"},
            {"axis", "disorder"},    {"values", json::array({0.0, 0.01, 0.1, 1.0})},
            {"realizations", 20},    {"seed", 0},         {"jobs", jobs},     {"format", "json"},
            {"out", "."}};
}

/// Radians, or a multiple of pi written as "0.5pi" / "pi".
Real parse_flux(const json& v) {
    if (v.is_number()) return v.get<Real>();
    if (!v.is_string()) throw SchemaError("flux must be a number (radians) or a string like '0.5pi'");
    const std::string s = v.get<std::string>();
    static const std::regex re(R"(^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*(pi)?\s*$)");
    std::smatch m;
    if (s.empty() || !std::regex_match(s, m, re) || (!m[1].matched && !m[2].matched))
        throw SchemaError("malformed flux '" + s + "' (expected radians or a multiple of pi such as '0.5pi')");
    const Real coeff = m[1].matched ? std::stod(m[1].str()) : 1.0;
    return m[2].matched ? coeff * kPi : coeff;
}

Real number(const json& cfg, const char* key) {
    const json& v = cfg.at(key);
    if (v.is_number()) return v.get<Real>();
    if (v.is_string()) {
        try {
            std::size_t used = 0;
            const Real x = std::stod(v.get<std::string>(), &used);
            if (used == v.get<std::string>().size()) return x;
        } catch (...) {
        }
    }
    throw SchemaError(std::string("'") + key + "' must be a number");
}

long long integer(const json& cfg, const char* key) {
    const Real x = number(cfg, key);
    if (x != std::floor(x)) throw SchemaError(std::string("'") + key + "' must be an integer");
    return static_cast<long long>(x);
}

std::uint64_t parse_seed(const std::string& s) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
        throw SchemaError("seed must be an unsigned 64-bit integer");
    try {
        return std::stoull(s);
    } catch (const std::out_of_range&) {
        throw SchemaError("seed must be an unsigned 64-bit integer");
    }
}

std::uint64_t seed_of(const json& cfg) {
    const json& v = cfg.at("seed");
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::uint64_t>();
    if (v.is_string()) return parse_seed(v.get<std::string>());
    throw SchemaError("seed must be an unsigned 64-bit integer");
}

std::vector<Real> number_list(const json& v) {
    std::vector<Real> out;
    if (v.is_array()) {
        for (const auto& e : v) {
            if (!e.is_number()) throw SchemaError("'values' must be a list of numbers");
            out.push_back(e.get<Real>());
        }
        return out;
    }
    if (!v.is_string()) throw SchemaError("'values' must be a list of numbers");
    std::stringstream ss(v.get<std::string>());
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        json wrapped = {{"v", tok}};
        out.push_back(number(wrapped, "v"));
    }
    return out;
}

/// Merges a JSON config file into `cfg`, rejecting unknown keys.
void merge_file(json& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open config file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw SchemaError("config file '" + path + "': " + e.what());
    }
    if (!doc.is_object()) throw SchemaError("config file must hold a JSON object");
    for (const auto& [k, v] : doc.items()) {
        if (k == "command") continue;
        if (std::ranges::find(kKeys, k) == kKeys.end()) throw SchemaError("config file: unknown key '" + k + "'");
        cfg[k] = v;
    }
}

// ---------------------------------------------------------------------------
// resolution

Lattice make_lattice(const json& cfg) {
    if (cfg.contains("lattice") && !cfg["lattice"].is_null()) {
        const std::string path = cfg["lattice"].get<std::string>();
        std::ifstream in(path);
        if (!in) throw SchemaError("cannot open lattice file '" + path + "'");
        try {
            return lattice_from_json(json::parse(in));
        } catch (const json::parse_error& e) {
            throw SchemaError("lattice file '" + path + "': " + e.what());
        }
    }
    const std::string model = cfg.at("model").get<std::string>();
    const Real hopping = number(cfg, "hopping");
    const Real potential = number(cfg, "potential");
    Lattice lat = [&] {
        if (model == "hofstadter") {
            const auto m = integer(cfg, "half_size");
            if (m < 0) throw SchemaError("half_size must be non-negative");
            return build_hofstadter(static_cast<int>(m), hopping, parse_flux(cfg.at("flux")));
        }
        if (model == "chain") {
            const auto n = integer(cfg, "sites");
            if (n < 1) throw SchemaError("sites must be positive");
            return build_chain(static_cast<std::size_t>(n), Complex(-hopping));
        }
        throw SchemaError("unknown model '" + model + "' (hofstadter | chain)");
    }();
    if (potential != 0.0) {
        const std::vector<Real> v(lat.n_sites(), potential);
        lat = add_potential(lat, v);
    }
    return lat;
}

/// Drain given as a site index, "x,y" coordinates, or an integer array.
std::size_t resolve_drain(const json& cfg, const Lattice& lat) {
    json d = cfg.contains("drain") ? cfg["drain"] : json(nullptr);
    if (d.is_null()) d = lat.site(0).coord.size() == 2 ? json("2,2") : json(0);
    std::vector<int> coord;
    if (d.is_number_integer()) {
        const auto i = d.get<long long>();
        if (i < 0 || static_cast<std::size_t>(i) >= lat.n_sites()) throw SchemaError("drain index out of range");
        return static_cast<std::size_t>(i);
    }
    if (d.is_array()) {
        for (const auto& c : d) {
            if (!c.is_number_integer()) throw SchemaError("drain coordinates must be integers");
            coord.push_back(c.get<int>());
        }
    } else if (d.is_string()) {
        std::string s = d.get<std::string>();
        std::erase_if(s, [](char c) { return c == '(' || c == ')' || c == ' '; });
        if (s.find(',') == std::string::npos) {
            json wrapped = {{"drain", s}};
            const auto i = integer(wrapped, "drain");
            if (i < 0 || static_cast<std::size_t>(i) >= lat.n_sites()) throw SchemaError("drain index out of range");
            return static_cast<std::size_t>(i);
        }
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            json wrapped = {{"c", tok}};
            coord.push_back(static_cast<int>(integer(wrapped, "c")));
        }
    } else {
        throw SchemaError("drain must be an index or coordinates");
    }
    const auto idx = lat.find(coord);
    if (!idx) throw SchemaError("drain coordinates are not a lattice site");
    return *idx;
}

DrainSpec make_spec(const json& cfg, const Lattice& lat) {
    DrainSpec spec;
    spec.drain = resolve_drain(cfg, lat);
    spec.gamma = number(cfg, "gamma");
    spec.noise = {number(cfg, "r"), number(cfg, "phi")};
    spec.loss = number(cfg, "loss");
    try {
        spec.check(lat.n_sites());
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
    return spec;
}

// ---------------------------------------------------------------------------
// output

struct Output {
    fs::path dir;
    std::string format;

    void write_json(const std::string& name, const json& doc) const {
        std::ofstream f(dir / name);
        f << doc.dump(2) << "\n";
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    }
    template <typename F>
    void write_text(const std::string& name, F&& fill) const {
        std::ofstream f(dir / name);
        fill(f);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    }
    void summary(const json& s) const {
        if (format == "csv") {
            std::cout << "key,value\n";
            for (const auto& [k, v] : s.items()) std::cout << k << "," << (v.is_string() ? v.get<std::string>() : v.dump()) << "\n";
        } else {
            std::cout << s.dump(2) << "\n";
        }
    }
};

Output prepare_output(const json& cfg, const std::string& command, const json& resolved_extra = json::object()) {
    Output out{cfg.at("out").get<std::string>(), cfg.at("format").get<std::string>()};
    if (out.format != "json" && out.format != "csv") throw SchemaError("format must be json or csv");
    fs::create_directories(out.dir);
    json resolved = cfg;
    resolved["command"] = command;
    resolved.update(resolved_extra);
    out.write_json("config.json", resolved);
    return out;
}

json diagnostics_json(const LatticeDiagnostics& d) {
    return {{"hermiticity_residual", d.hermiticity_residual}, {"connected", d.connected},
            {"components", d.components}, {"matrix_bandwidth", d.matrix_bandwidth},
            {"spectral_width", d.spectral_width}};
}

SymmetryMatrix make_sigma(const json& cfg, const Lattice& lat, const DrainCoupling& coupling) {
    const std::string name = cfg.at("sigma").get<std::string>();
    if (name == "bipartite") return sigma_bipartite(lat, coupling.drain);
    if (name == "inversion") return sigma_inversion(lat, false);
    if (name == "inversion-signed") return sigma_inversion(lat, true);
    if (name == "eigenmodes") return extract_sigma(coupling, chiral_pairing(coupling, 1e-8));
    if (name == "z0" || name == "0z" || name == "zz") {
        if (lat.model().name != "hofstadter") throw SchemaError("named sigma '" + name + "' needs a hofstadter lattice");
        return sigma_hofstadter(parse_hofstadter_variant(name), static_cast<int>(lat.model().params.at("half_size")),
                                lat.model().params.at("flux"), coupling.drain);
    }
    throw SchemaError("unknown sigma '" + name + "' (bipartite | inversion | inversion-signed | eigenmodes | z0 | 0z | zz)");
}

// ---------------------------------------------------------------------------
// commands

int cmd_build(const json& cfg) {
    const Lattice lat = make_lattice(cfg);
    const Output out = prepare_output(cfg, "build");
    out.write_json("lattice.json", lattice_to_json(lat));
    json s = {{"n_sites", lat.n_sites()}, {"model", lat.model().name}, {"lattice_file", (out.dir / "lattice.json").string()}};
    s["diagnostics"] = diagnostics_json(validate(lat));
    out.summary(s);
    return ok;
}

int cmd_steady(const json& cfg) {
    const Lattice lat = make_lattice(cfg);
    const DrainSpec spec = make_spec(cfg, lat);
    const auto coupling = drain_couplings(lat, spec.drain, spec.gamma);
    const CovarianceState state = steady_state(lat, spec);
    const DynamicalSpectrum dyn = dynamical_spectrum(coupling);

    std::size_t reference = spec.drain;
    if (cfg.contains("reference") && !cfg["reference"].is_null()) {
        json tmp = {{"drain", cfg["reference"]}};
        reference = resolve_drain(tmp, lat);
    }

    const Output out = prepare_output(cfg, "steady", {{"drain_index", spec.drain}});
    json labels = json::array();
    for (std::size_t i = 0; i < lat.n_sites(); ++i) labels.push_back(lat.site_label(i));
    out.write_json("Nmat.json", {{"labels", labels}, {"matrix", detail::matrix_json(state.normal)}});
    out.write_json("Mmat.json", {{"labels", labels}, {"matrix", detail::matrix_json(state.anomalous)}});
    out.write_text("heatmap.csv", [&](std::ostream& os) { write_heatmap_csv(os, state, lat, spec.noise); });
    out.write_text("slice.csv", [&](std::ostream& os) { write_slice_csv(os, state, lat, spec.noise, reference); });

    json s = {{"drain", lat.site_label(spec.drain)},
              {"reference", lat.site_label(reference)},
              {"purity", purity(state)},
              {"dark_modes", coupling.dark_modes.size()},
              {"solver_residual", state.solver_residual}};
    s["min_relaxation_rate"] = std::isfinite(dyn.min_bright_gamma) ? json(dyn.min_bright_gamma) : json(nullptr);
    out.summary(s);
    return ok;
}

int cmd_spectrum(const json& cfg) {
    const Lattice lat = make_lattice(cfg);
    const DrainSpec spec = make_spec(cfg, lat);
    const auto coupling = drain_couplings(lat, spec.drain, spec.gamma);
    const DynamicalSpectrum dyn = dynamical_spectrum(coupling);
    const Output out = prepare_output(cfg, "spectrum", {{"drain_index", spec.drain}});
    out.write_json("spectrum.json", spectrum_to_json(coupling, dyn));
    json s = {{"n_modes", coupling.size()},
              {"dark_modes", coupling.dark_modes.size()},
              {"max_consistency_residual", dyn.max_residual()}};
    s["min_relaxation_rate"] = std::isfinite(dyn.min_bright_gamma) ? json(dyn.min_bright_gamma) : json(nullptr);
    out.summary(s);
    return ok;
}

int cmd_check(const json& cfg) {
    const Lattice lat = make_lattice(cfg);
    const DrainSpec spec = make_spec(cfg, lat);
    const auto coupling = drain_couplings(lat, spec.drain, spec.gamma);
    const Real tol = 1e-8 * unit_scale(lat.hamiltonian());
    const ChiralPairing pairing = chiral_pairing(coupling, tol);
    const DynamicalSpectrum dyn = dynamical_spectrum(coupling);

    json report;
    bool pass = true;
    try {
        const std::string rel = cfg.at("relation").get<std::string>();
        if (rel != "generalized" && rel != "sublattice") throw SchemaError("relation must be generalized or sublattice");
        const auto relation = rel == "generalized" ? ChiralRelation::generalized : ChiralRelation::sublattice;
        const SymmetryReport rep = check_symmetry(make_sigma(cfg, lat, coupling), lat, spec.drain, relation);
        report["symmetry"] = symmetry_report_to_json(rep);
        pass = pass && rep.pass;
    } catch (const std::invalid_argument& e) {
        if (dynamic_cast<const SchemaError*>(&e)) throw;
        report["symmetry"] = {{"pass", false}, {"error", e.what()}};
        pass = false;
    }
    const bool pairing_ok = pairing.holds(tol);
    report["pairing"] = {{"energy_defect", std::isfinite(pairing.energy_defect) ? json(pairing.energy_defect) : json("inf")},
                         {"amplitude_defect", pairing.amplitude_defect},
                         {"unpaired", pairing.unpaired},
                         {"tolerance", tol},
                         {"pass", pairing_ok}};
    report["dark_modes"] = {{"count", coupling.dark_modes.size()},
                            {"modes", coupling.dark_modes},
                            {"pass", coupling.dark_modes.empty()}};
    const bool dyn_ok = dyn.max_residual() < 1e-8;
    report["dynamical"] = {{"max_consistency_residual", dyn.max_residual()}, {"threshold", 1e-8}, {"pass", dyn_ok}};
    pass = pass && pairing_ok && coupling.dark_modes.empty() && dyn_ok;
    report["pass"] = pass;

    const Output out = prepare_output(cfg, "check", {{"drain_index", spec.drain}});
    out.write_json("check.json", report);
    std::cout << report.dump(2) << "\n";
    if (!pass) std::cerr << "check: FAIL\n";
    return pass ? ok : cert_fail;
}

int cmd_sweep(const json& cfg) {
    const Lattice lat = make_lattice(cfg);
    const DrainSpec spec = make_spec(cfg, lat);
    SweepConfig sc;
    const std::string axis = cfg.at("axis").get<std::string>();
    if (axis == "disorder") sc.axis = SweepAxis::disorder;
    else if (axis == "loss") sc.axis = SweepAxis::loss;
    else throw SchemaError("axis must be disorder or loss");
    sc.values = number_list(cfg.at("values"));
    for (Real v : sc.values)
        if (!(v >= 0.0)) throw SchemaError("sweep values must be non-negative");
    const auto reps = integer(cfg, "realizations");
    const auto jobs = integer(cfg, "jobs");
    if (reps < 1 || jobs < 1) throw SchemaError("realizations and jobs must be positive");
    sc.realizations = static_cast<std::size_t>(reps);
    sc.jobs = static_cast<unsigned>(jobs);
    sc.seed = seed_of(cfg);

    const SweepResult res = run_sweep(lat, spec, sc);
    const Output out = prepare_output(cfg, "sweep", {{"drain_index", spec.drain}});
    out.write_text("sweep.csv", [&](std::ostream& os) {
        os << to_string(sc.axis) << ",realization,seed,en_bar,purity\n";
        for (const auto& r : res.rows)
            os << detail::sig(r.value, 9) << "," << r.realization << "," << r.seed << "," << detail::sig(r.en_bar, 9)
               << "," << detail::sig(r.purity, 9) << "\n";
    });
    json agg = json::array();
    for (const auto& a : res.aggregates)
        agg.push_back({{"value", a.value}, {"count", a.count}, {"mean", a.mean}, {"stderr", a.stderr_mean},
                       {"mean_purity", a.mean_purity}});
    out.write_json("sweep_aggregate.json", {{"axis", std::string(to_string(sc.axis))}, {"aggregates", agg}});
    out.summary({{"rows", res.rows.size()}, {"aggregates", agg}});
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Squeezed-drain steady states on chiral lattices"};
    app.require_subcommand(1);
    app.fallthrough();

    std::map<std::string, std::string> flags;
    std::string config_path;
    app.add_option("--config", config_path, "JSON file with run settings");
    auto global = [&](const char* name, const char* key, const char* help) {
        app.add_option(name, flags[key], help);
    };
    global("--out", "out", "Output directory");
    global("--seed", "seed", "Run seed (u64)");
    global("--format", "format", "Summary format: json | csv");
    global("--jobs", "jobs", "Worker threads (default $CHIRAL_DRAIN_JOBS or 1)");

    auto model_opts = [&](CLI::App* sub) {
        sub->add_option("--model", flags["model"], "hofstadter | chain");
        sub->add_option("--lattice", flags["lattice"], "Lattice JSON file (overrides --model)");
        sub->add_option("--half-size", flags["half_size"], "Hofstadter half size M (side 2M+1)");
        sub->add_option("--flux", flags["flux"], "Flux per plaquette, radians or e.g. 0.5pi");
        sub->add_option("--hopping", flags["hopping"], "Hopping J");
        sub->add_option("--sites", flags["sites"], "Chain length");
        sub->add_option("--potential", flags["potential"], "Uniform on-site potential");
    };
    auto drain_opts = [&](CLI::App* sub) {
        sub->add_option("--drain", flags["drain"], "Drain site: index or x,y");
        sub->add_option("--gamma", flags["gamma"], "Drain coupling Gamma");
        sub->add_option("--r", flags["r"], "Squeezing parameter r");
        sub->add_option("--phi", flags["phi"], "Squeezing phase");
        sub->add_option("--loss", flags["loss"], "Internal loss rate on every site");
    };

    auto* build = app.add_subcommand("build", "Write a lattice file");
    model_opts(build);
    auto* steady = app.add_subcommand("steady", "Steady-state correlations");
    model_opts(steady);
    drain_opts(steady);
    steady->add_option("--reference", flags["reference"], "Reference site for the slice export");
    auto* spectrum = app.add_subcommand("spectrum", "Drain couplings and dynamical spectrum");
    model_opts(spectrum);
    drain_opts(spectrum);
    auto* check = app.add_subcommand("check", "Certify chiral symmetry");
    model_opts(check);
    drain_opts(check);
    check->add_option("--sigma", flags["sigma"], "bipartite | inversion | inversion-signed | eigenmodes | z0 | 0z | zz");
    check->add_option("--relation", flags["relation"], "generalized (sigma^dag H sigma = -H^*) | sublattice (= -H)");
    auto* sweep = app.add_subcommand("sweep", "Disorder or loss sweep");
    model_opts(sweep);
    drain_opts(sweep);
    sweep->add_option("--axis", flags["axis"], "disorder | loss");
    sweep->add_option("--values", flags["values"], "Comma-separated axis values");
    sweep->add_option("--realizations", flags["realizations"], "Disorder realizations per value");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        json cfg = defaults();
        if (!config_path.empty()) merge_file(cfg, config_path);
        for (const auto& [key, value] : flags) {
            if (value.empty()) continue;
            if (key == "flux" || key == "drain" || key == "reference" || key == "values") cfg[key] = value;
            else if (key == "model" || key == "lattice" || key == "sigma" || key == "relation" || key == "axis" || key == "format" || key == "out")
                cfg[key] = value;
            else if (key == "seed") cfg[key] = parse_seed(value);
            else cfg[key] = number(json{{"v", value}}, "v");
        }
        const std::string name = app.get_subcommands().front()->get_name();
        if (name == "build") return cmd_build(cfg);
        if (name == "steady") return cmd_steady(cfg);
        if (name == "spectrum") return cmd_spectrum(cfg);
        if (name == "check") return cmd_check(cfg);
        return cmd_sweep(cfg);
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const DarkModeError& e) {
        std::cerr << "error: " << e.what() << "\n"
                  << "dark modes: " << join_indices(e.dark_modes, 1000) << "\n";
        return numerical;
    } catch (const NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return numerical;
    }
}
