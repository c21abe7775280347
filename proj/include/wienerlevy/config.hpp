// config.hpp
//
// Job description for the command-line front end: JSON parsing with strict
// key checking, serialization back to JSON, and the job runner that writes
// measures, reports and residual tables to an output directory.

#ifndef WIENERLEVY_CONFIG_HPP
#define WIENERLEVY_CONFIG_HPP

#include <cmath>
#include <cstdio>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "wienerlevy/analytic.hpp"
#include "wienerlevy/errors.hpp"
#include "wienerlevy/measures.hpp"
#include "wienerlevy/measures_io.hpp"
#include "wienerlevy/oracle.hpp"
#include "wienerlevy/synthesis.hpp"
#include "wienerlevy/torus_coeffs.hpp"

namespace wienerlevy {

using nlohmann::json;

enum class ExitCode : int { ok = 0, validation = 2, budget_exceeded = 3, infeasible = 4 };

struct AtomSpec {
    LatticeIndex k;
    cplx coef;
    friend bool operator==(const AtomSpec&, const AtomSpec&) = default;
};

struct DensitySpec {
    double x0 = 0.0;
    double dx = 1.0;
    std::vector<cplx> samples;
    friend bool operator==(const DensitySpec&, const DensitySpec&) = default;
};

struct MeasureSpec {
    int dim = 1;
    std::vector<std::vector<double>> basis;
    std::vector<AtomSpec> atoms;
    std::optional<DensitySpec> density;
    std::optional<std::string> file;  // measures JSON-lines, read relative to the config
    friend bool operator==(const MeasureSpec&, const MeasureSpec&) = default;
};

struct PowerSeriesSpec {
    cplx center;
    double radius = 1.0;
    std::vector<std::vector<cplx>> coeffs;
    friend bool operator==(const PowerSeriesSpec&, const PowerSeriesSpec&) = default;
};

struct FunctionSpec {
    std::string name;  // registry entry, or "power_series"
    std::vector<double> params;
    std::optional<PowerSeriesSpec> series;
    friend bool operator==(const FunctionSpec&, const FunctionSpec&) = default;
};

struct SetSpec {
    std::string type;  // disc | annulus | polygon | union
    cplx center;
    double radius = 0.0;
    double r_in = 0.0;
    double r_out = 0.0;
    std::vector<cplx> vertices;
    std::vector<SetSpec> parts;
    friend bool operator==(const SetSpec&, const SetSpec&) = default;
};

struct ParamsSpec {
    std::optional<double> eps, domain_margin, atom_budget, lowpass_budget;
    std::optional<std::size_t> p_max, k_max, m_theta, m_tau, max_atoms, y_samples, quad_n, memory_budget_mb;
    std::optional<double> neumann_tol, prune_threshold;
    friend bool operator==(const ParamsSpec&, const ParamsSpec&) = default;
};

struct JobConfig {
    std::string command;  // synthesize | verify | invert | lemma-check
    MeasureSpec measure;
    std::optional<FunctionSpec> function;
    std::optional<SetSpec> compact_set;
    ParamsSpec params;
    std::optional<double> eps_inv;
    std::uint64_t seed = 0;
    std::string output = "out";
    std::filesystem::path base_dir;  // directory of the config file; not serialized

    friend bool operator==(const JobConfig& a, const JobConfig& b) {
        return a.command == b.command && a.measure == b.measure && a.function == b.function &&
               a.compact_set == b.compact_set && a.params == b.params && a.eps_inv == b.eps_inv && a.seed == b.seed &&
               a.output == b.output;
    }
};

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace config_detail {

inline void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
            throw ValidationError(where + ": unknown key '" + it.key() + "' (expected one of: " + list + ")");
        }
}

inline double number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ValidationError(where + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ValidationError(where + ": must be finite");
    return v;
}

inline double positive(const json& j, const std::string& where) {
    const double v = number(j, where);
    if (!(v > 0.0)) throw ValidationError(where + ": must be positive, got " + std::to_string(v));
    return v;
}

inline std::size_t count(const json& j, const std::string& where) {
    if (!j.is_number_integer() || j.get<long long>() < 0)
        throw ValidationError(where + ": expected a non-negative integer");
    return j.get<std::size_t>();
}

/// [re, im] pair or a bare real number.
inline cplx complex_value(const json& j, const std::string& where) {
    if (j.is_number()) return {number(j, where), 0.0};
    if (!j.is_array() || j.size() != 2) throw ValidationError(where + ": expected [re, im]");
    return {number(j[0], where + "[0]"), number(j[1], where + "[1]")};
}

inline json complex_json(cplx c) { return json::array({c.real(), c.imag()}); }

inline std::vector<cplx> complex_list(const json& j, const std::string& where) {
    if (!j.is_array()) throw ValidationError(where + ": expected an array");
    std::vector<cplx> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(complex_value(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline MeasureSpec parse_measure(const json& j) {
    check_keys(j, "measure", {"dim", "basis", "atoms", "density", "file"});
    MeasureSpec m;
    if (j.contains("dim")) {
        m.dim = static_cast<int>(count(j["dim"], "measure.dim"));
        if (m.dim < 1) throw ValidationError("measure.dim: must be at least 1");
    }
    if (j.contains("basis")) {
        if (!j["basis"].is_array()) throw ValidationError("measure.basis: expected an array of frequency vectors");
        for (std::size_t i = 0; i < j["basis"].size(); ++i) {
            const auto& g = j["basis"][i];
            const std::string w = "measure.basis[" + std::to_string(i) + "]";
            std::vector<double> v;
            if (g.is_number()) {
                v.push_back(number(g, w));
            } else if (g.is_array()) {
                for (std::size_t c = 0; c < g.size(); ++c) v.push_back(number(g[c], w));
            } else {
                throw ValidationError(w + ": expected a number or an array");
            }
            if (v.size() != static_cast<std::size_t>(m.dim))
                throw ValidationError(w + ": length " + std::to_string(v.size()) + " does not match dim " +
                                      std::to_string(m.dim));
            m.basis.push_back(std::move(v));
        }
    }
    if (j.contains("atoms")) {
        if (!j["atoms"].is_array()) throw ValidationError("measure.atoms: expected an array");
        for (std::size_t i = 0; i < j["atoms"].size(); ++i) {
            const auto& a = j["atoms"][i];
            const std::string w = "measure.atoms[" + std::to_string(i) + "]";
            check_keys(a, w, {"k", "coef"});
            if (!a.contains("k") || !a.contains("coef")) throw ValidationError(w + ": needs 'k' and 'coef'");
            AtomSpec at;
            if (!a["k"].is_array()) throw ValidationError(w + ".k: expected an integer array");
            for (const auto& e : a["k"]) {
                if (!e.is_number_integer()) throw ValidationError(w + ".k: expected integers");
                at.k.push_back(e.get<int>());
            }
            if (at.k.size() != m.basis.size())
                throw ValidationError(w + ".k: length " + std::to_string(at.k.size()) + " does not match the " +
                                      std::to_string(m.basis.size()) + " basis frequencies");
            at.coef = complex_value(a["coef"], w + ".coef");
            m.atoms.push_back(std::move(at));
        }
    }
    if (j.contains("density")) {
        const auto& d = j["density"];
        check_keys(d, "measure.density", {"x0", "dx", "samples"});
        if (!d.contains("dx") || !d.contains("samples") || !d.contains("x0"))
            throw ValidationError("measure.density: needs 'x0', 'dx' and 'samples'");
        DensitySpec ds;
        ds.x0 = number(d["x0"], "measure.density.x0");
        ds.dx = positive(d["dx"], "measure.density.dx");
        ds.samples = complex_list(d["samples"], "measure.density.samples");
        if (ds.samples.empty()) throw ValidationError("measure.density.samples: empty");
        if (m.dim != 1) throw ValidationError("measure.density: densities require dim = 1");
        m.density = std::move(ds);
    }
    if (j.contains("file")) {
        if (!j["file"].is_string()) throw ValidationError("measure.file: expected a path string");
        m.file = j["file"].get<std::string>();
        if (!m.atoms.empty() || m.density)
            throw ValidationError("measure.file: give either a file or inline atoms/density, not both");
    }
    return m;
}

inline FunctionSpec parse_function(const json& j) {
    check_keys(j, "function", {"name", "params", "power_series"});
    FunctionSpec f;
    if (j.contains("power_series")) {
        const auto& p = j["power_series"];
        check_keys(p, "function.power_series", {"center", "radius", "coeffs"});
        if (!p.contains("radius") || !p.contains("coeffs"))
            throw ValidationError("function.power_series: needs 'radius' and 'coeffs'");
        PowerSeriesSpec ps;
        if (p.contains("center")) ps.center = complex_value(p["center"], "function.power_series.center");
        ps.radius = positive(p["radius"], "function.power_series.radius");
        if (!p["coeffs"].is_array()) throw ValidationError("function.power_series.coeffs: expected a nested array");
        for (std::size_t i = 0; i < p["coeffs"].size(); ++i)
            ps.coeffs.push_back(complex_list(p["coeffs"][i], "function.power_series.coeffs[" + std::to_string(i) + "]"));
        f.name = "power_series";
        f.series = std::move(ps);
        if (j.contains("name") && j["name"] != "power_series")
            throw ValidationError("function: 'name' conflicts with 'power_series'");
        return f;
    }
    if (!j.contains("name") || !j["name"].is_string()) throw ValidationError("function.name: expected a string");
    f.name = j["name"].get<std::string>();
    if (j.contains("params")) {
        if (!j["params"].is_array()) throw ValidationError("function.params: expected an array of numbers");
        for (std::size_t i = 0; i < j["params"].size(); ++i)
            f.params.push_back(number(j["params"][i], "function.params[" + std::to_string(i) + "]"));
    }
    builtin_function(f.name, f.params);  // validates name and arity
    return f;
}

inline SetSpec parse_set(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw ValidationError(where + ".type: expected one of disc, annulus, polygon, union");
    SetSpec s;
    s.type = j["type"].get<std::string>();
    if (s.type == "disc") {
        check_keys(j, where, {"type", "center", "radius"});
        if (j.contains("center")) s.center = complex_value(j["center"], where + ".center");
        if (!j.contains("radius")) throw ValidationError(where + ": disc needs 'radius'");
        s.radius = positive(j["radius"], where + ".radius");
    } else if (s.type == "annulus") {
        check_keys(j, where, {"type", "center", "r_in", "r_out"});
        if (j.contains("center")) s.center = complex_value(j["center"], where + ".center");
        if (!j.contains("r_in") || !j.contains("r_out")) throw ValidationError(where + ": annulus needs 'r_in', 'r_out'");
        s.r_in = number(j["r_in"], where + ".r_in");
        s.r_out = number(j["r_out"], where + ".r_out");
        if (!(s.r_in >= 0.0 && s.r_out > s.r_in)) throw ValidationError(where + ": need 0 <= r_in < r_out");
    } else if (s.type == "polygon") {
        check_keys(j, where, {"type", "vertices"});
        if (!j.contains("vertices")) throw ValidationError(where + ": polygon needs 'vertices'");
        s.vertices = complex_list(j["vertices"], where + ".vertices");
        if (s.vertices.size() < 3) throw ValidationError(where + ".vertices: need at least 3");
    } else if (s.type == "union") {
        check_keys(j, where, {"type", "parts"});
        if (!j.contains("parts") || !j["parts"].is_array() || j["parts"].empty())
            throw ValidationError(where + ": union needs a non-empty 'parts' array");
        for (std::size_t i = 0; i < j["parts"].size(); ++i)
            s.parts.push_back(parse_set(j["parts"][i], where + ".parts[" + std::to_string(i) + "]"));
    } else {
        throw ValidationError(where + ".type: unknown set type '" + s.type + "' (disc, annulus, polygon, union)");
    }
    return s;
}

inline ParamsSpec parse_params(const json& j) {
    check_keys(j, "params", {"eps", "domain_margin", "atom_budget", "lowpass_budget", "P_max", "K_max", "M_theta",
                             "M_tau", "max_atoms", "y_samples", "quad_n", "memory_budget_mb", "neumann_tol",
                             "prune_threshold"});
    ParamsSpec p;
    auto pos = [&](const char* key, std::optional<double>& dst) {
        if (j.contains(key)) dst = positive(j[key], std::string("params.") + key);
    };
    auto cnt = [&](const char* key, std::optional<std::size_t>& dst) {
        if (j.contains(key)) dst = count(j[key], std::string("params.") + key);
    };
    pos("eps", p.eps);
    pos("domain_margin", p.domain_margin);
    pos("atom_budget", p.atom_budget);
    pos("lowpass_budget", p.lowpass_budget);
    pos("neumann_tol", p.neumann_tol);
    if (j.contains("prune_threshold")) {
        p.prune_threshold = number(j["prune_threshold"], "params.prune_threshold");
        if (!(*p.prune_threshold >= 0.0 && *p.prune_threshold < 1e-3))
            throw ValidationError("params.prune_threshold: must lie in [0, 1e-3)");
    }
    cnt("P_max", p.p_max);
    cnt("K_max", p.k_max);
    cnt("M_theta", p.m_theta);
    cnt("M_tau", p.m_tau);
    cnt("max_atoms", p.max_atoms);
    cnt("y_samples", p.y_samples);
    cnt("quad_n", p.quad_n);
    cnt("memory_budget_mb", p.memory_budget_mb);
    if (p.m_theta && *p.m_theta < 4) throw ValidationError("params.M_theta: must be at least 4");
    if (p.m_tau && *p.m_tau < 4) throw ValidationError("params.M_tau: must be at least 4");
    if (p.quad_n && *p.quad_n != 0 && *p.quad_n < 64) throw ValidationError("params.quad_n: must be 0 or >= 64");
    if (p.memory_budget_mb && *p.memory_budget_mb == 0) throw ValidationError("params.memory_budget_mb: must be positive");
    return p;
}

}  // namespace config_detail

inline const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names = {"synthesize", "verify", "invert", "lemma-check"};
    return names;
}

/// Validated JobConfig from JSON text; errors name the offending key.
inline JobConfig parse_config(const std::string& text) {
    using namespace config_detail;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: malformed JSON: ") + e.what());
    }
    check_keys(j, "config", {"command", "measure", "function", "compact_set", "params", "eps_inv", "seed", "output"});
    JobConfig c;
    if (!j.contains("command") || !j["command"].is_string()) throw ValidationError("command: expected a string");
    c.command = j["command"].get<std::string>();
    const auto& names = command_names();
    if (std::find(names.begin(), names.end(), c.command) == names.end())
        throw ValidationError("command: unknown command '" + c.command + "' (synthesize, verify, invert, lemma-check)");
    if (!j.contains("measure")) throw ValidationError("measure: missing");
    c.measure = parse_measure(j["measure"]);
    if (j.contains("function")) c.function = parse_function(j["function"]);
    if (j.contains("compact_set")) c.compact_set = parse_set(j["compact_set"], "compact_set");
    if (j.contains("params")) c.params = parse_params(j["params"]);
    if (j.contains("eps_inv")) c.eps_inv = positive(j["eps_inv"], "eps_inv");
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ValidationError("seed: expected a non-negative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("output")) {
        if (!j["output"].is_string()) throw ValidationError("output: expected a directory path");
        c.output = j["output"].get<std::string>();
    }
    if (c.command == "invert") {
        if (!c.eps_inv) throw ValidationError("eps_inv: required by the invert command");
        if (c.function || c.compact_set) throw ValidationError("invert: 'function' and 'compact_set' are implied");
    } else {
        if (!c.function) throw ValidationError("function: required by the " + c.command + " command");
        if (!c.compact_set) throw ValidationError("compact_set: required by the " + c.command + " command");
        if (c.eps_inv) throw ValidationError("eps_inv: only used by the invert command");
    }
    return c;
}

inline JobConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    JobConfig c = parse_config(ss.str());
    c.base_dir = path.parent_path();
    return c;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace config_detail {

inline json set_json(const SetSpec& s) {
    json j;
    j["type"] = s.type;
    if (s.type == "disc") {
        j["center"] = complex_json(s.center);
        j["radius"] = s.radius;
    } else if (s.type == "annulus") {
        j["center"] = complex_json(s.center);
        j["r_in"] = s.r_in;
        j["r_out"] = s.r_out;
    } else if (s.type == "polygon") {
        j["vertices"] = json::array();
        for (const auto& v : s.vertices) j["vertices"].push_back(complex_json(v));
    } else {
        j["parts"] = json::array();
        for (const auto& p : s.parts) j["parts"].push_back(set_json(p));
    }
    return j;
}

}  // namespace config_detail

inline json serialize_config(const JobConfig& c) {
    using namespace config_detail;
    json j;
    j["command"] = c.command;
    json m;
    m["dim"] = c.measure.dim;
    m["basis"] = c.measure.basis;
    if (!c.measure.atoms.empty()) {
        m["atoms"] = json::array();
        for (const auto& a : c.measure.atoms) m["atoms"].push_back({{"k", a.k}, {"coef", complex_json(a.coef)}});
    }
    if (c.measure.density) {
        json d;
        d["x0"] = c.measure.density->x0;
        d["dx"] = c.measure.density->dx;
        d["samples"] = json::array();
        for (const auto& s : c.measure.density->samples) d["samples"].push_back(complex_json(s));
        m["density"] = std::move(d);
    }
    if (c.measure.file) m["file"] = *c.measure.file;
    j["measure"] = std::move(m);
    if (c.function) {
        json f;
        if (c.function->series) {
            const auto& s = *c.function->series;
            json ps;
            ps["center"] = complex_json(s.center);
            ps["radius"] = s.radius;
            ps["coeffs"] = json::array();
            for (const auto& row : s.coeffs) {
                json r = json::array();
                for (const auto& v : row) r.push_back(complex_json(v));
                ps["coeffs"].push_back(std::move(r));
            }
            f["power_series"] = std::move(ps);
        } else {
            f["name"] = c.function->name;
            if (!c.function->params.empty()) f["params"] = c.function->params;
        }
        j["function"] = std::move(f);
    }
    if (c.compact_set) j["compact_set"] = set_json(*c.compact_set);
    json p = json::object();
    const auto& ps = c.params;
    auto put = [&](const char* key, const auto& v) {
        if (v) p[key] = *v;
    };
    put("eps", ps.eps);
    put("domain_margin", ps.domain_margin);
    put("atom_budget", ps.atom_budget);
    put("lowpass_budget", ps.lowpass_budget);
    put("P_max", ps.p_max);
    put("K_max", ps.k_max);
    put("M_theta", ps.m_theta);
    put("M_tau", ps.m_tau);
    put("max_atoms", ps.max_atoms);
    put("y_samples", ps.y_samples);
    put("quad_n", ps.quad_n);
    put("memory_budget_mb", ps.memory_budget_mb);
    put("neumann_tol", ps.neumann_tol);
    put("prune_threshold", ps.prune_threshold);
    if (!p.empty()) j["params"] = std::move(p);
    if (c.eps_inv) j["eps_inv"] = *c.eps_inv;
    j["seed"] = c.seed;
    j["output"] = c.output;
    return j;
}

// ---------------------------------------------------------------------------
// Building library objects
// ---------------------------------------------------------------------------

inline CompactSet build_set(const SetSpec& s) {
    if (s.type == "disc") return CompactSet::disc(s.center, s.radius);
    if (s.type == "annulus") return CompactSet::annulus(s.center, s.r_in, s.r_out);
    if (s.type == "polygon") return CompactSet::polygon(s.vertices);
    std::vector<CompactSet> parts;
    for (const auto& p : s.parts) parts.push_back(build_set(p));
    return CompactSet::union_of(std::move(parts));
}

inline AnalyticFunction build_function(const FunctionSpec& f) {
    if (f.series) return power_series(f.series->center, f.series->radius, {f.series->coeffs});
    return builtin_function(f.name, f.params);
}

inline MixedMeasure build_measure(const MeasureSpec& m, const std::filesystem::path& base_dir = {}) {
    auto basis = make_basis(m.dim, m.basis);
    if (m.file) {
        std::filesystem::path p(*m.file);
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        std::ifstream in(p);
        if (!in) throw ValidationError("measure.file: cannot open " + p.string());
        return read_jsonl(in, basis);
    }
    PointMeasure point(basis);
    for (const auto& a : m.atoms) point.add(a.k, a.coef);
    std::optional<GridDensity> dens;
    if (m.density) dens = GridDensity(m.density->x0, m.density->dx, m.density->samples);
    return MixedMeasure(std::move(point), std::move(dens));
}

inline SynthesisParams build_params(const ParamsSpec& p, std::uint64_t seed) {
    SynthesisParams s;
    s.eps = p.eps;
    s.domain_margin = p.domain_margin;
    s.atom_budget = p.atom_budget;
    s.lowpass_budget = p.lowpass_budget;
    s.p_max = p.p_max;
    s.k_max = p.k_max;
    s.m_theta = p.m_theta;
    s.m_tau = p.m_tau;
    if (p.max_atoms) s.max_atoms = *p.max_atoms;
    if (p.y_samples) s.y_samples = *p.y_samples;
    if (p.quad_n) s.quad_n = *p.quad_n;
    if (p.memory_budget_mb) s.memory_budget = *p.memory_budget_mb * std::size_t{1048576};
    if (p.neumann_tol) s.neumann_tol = *p.neumann_tol;
    if (p.prune_threshold) s.prune_threshold = *p.prune_threshold;
    s.seed = seed;
    s.validate();
    return s;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

struct RunOutcome {
    ExitCode code = ExitCode::ok;
    std::string message;
};

namespace config_detail {

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigurationError("cannot write " + p.string());
    out << text;
}

inline std::string fmt_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

inline std::string csv_of(const ResidualStats& s, int dim, bool plot) {
    std::ostringstream os;
    if (plot)
        emit_plot_data(s, os, dim);
    else
        write_residual_csv(s, os, dim);
    return os.str();
}

inline RunOutcome lemma_check(const JobConfig& job, const MixedMeasure& mu, const SynthesisParams& params,
                              const std::filesystem::path& out) {
    json rep;
    bool ok = true;
    const auto h = build_function(*job.function);
    const auto k = build_set(*job.compact_set);
    double margin = h.domain_margin(k);
    if (params.domain_margin) margin = std::min(margin, *params.domain_margin);
    if (!std::isfinite(margin)) margin = 1.0;
    const double eps = params.eps ? *params.eps : choose_epsilon(margin);
    SmoothedExtension ext(h, k, eps, params.domain_margin);
    auto trunc = truncate_atoms(mu.point(), params.atom_budget.value_or(eps), params.max_atoms);
    const auto src = torus_source(trunc.kept);
    TorusGrid grid;
    grid.n_theta = src.dims();
    grid.m_theta = params.m_theta.value_or(default_m_theta(grid.n_theta));
    grid.k_max = params.k_max.value_or((grid.m_theta - 1) / 2);
    grid.m_tau = params.m_tau.value_or(default_m_tau(grid.n_theta));
    grid.p_max = 0;
    const auto b = sample_and_theta_fft(src, ext, grid, params.memory_budget);
    const auto dec = decay_check(b, std::size_t{2});
    rep["decay"] = {{"c_hat", dec.c_hat},       {"tail_bound", dec.tail_bound}, {"max_ratio", dec.max_ratio},
                    {"violations", dec.violations}, {"checked", dec.checked},   {"eps", eps},
                    {"N", grid.n_theta},        {"K_max", grid.k_max},        {"M_theta", grid.m_theta},
                    {"M_tau", grid.m_tau}};
    if (dec.violations > 0) ok = false;
    if (mu.density()) {
        const auto lp = lowpass_approximate(*mu.density(), params.lowpass_budget.value_or(eps));
        const auto l1 = l1_bound_check(lp.v, lp.bandwidth);
        rep["l1_bound"] = {{"lhs", l1.lhs},     {"rhs", l1.rhs},         {"ratio", l1.ratio},
                           {"holds", l1.holds}, {"bandwidth", lp.bandwidth}, {"lowpass_error", lp.error}};
        if (!l1.holds) ok = false;
    }
    rep["passed"] = ok;
    write_text(out / "lemma.json", rep.dump(2) + "\n");
    return {ok ? ExitCode::ok : ExitCode::budget_exceeded, ok ? "lemma checks passed" : "lemma check failed"};
}

}  // namespace config_detail

/// Runs a job, writing nu.jsonl, report.json, residuals.csv and plot.csv
/// (lemma.json for lemma-check) into the output directory.
inline RunOutcome run_job(const JobConfig& job, const std::filesystem::path& out_dir) {
    using namespace config_detail;
    std::filesystem::create_directories(out_dir);
    const auto params = build_params(job.params, job.seed);
    const MixedMeasure mu = build_measure(job.measure, job.base_dir);
    if (job.command == "lemma-check") return lemma_check(job, mu, params, out_dir);

    AnalyticFunction h = job.function ? build_function(*job.function) : builtin_function("zero");
    CompactSet k = job.compact_set ? build_set(*job.compact_set) : CompactSet::disc(0.0, 0.0);
    SynthesisParams run_params = params;
    if (job.command == "verify" && run_params.quad_n == 0) run_params.quad_n = 256;
    if (job.command == "invert") {
        auto setup = regularized_inverse_setup(total_variation(mu), *job.eps_inv);
        h = setup.h;
        k = setup.k;
    }
    SynthesisParams synth_params = run_params;
    synth_params.y_samples = 0;  // verified below so the table can be written out
    SynthesisResult res = synthesize_mixed(mu, h, k, synth_params);
    const ResidualStats stats = verify_synthesis(res, mu, h, k, run_params);
    res.report.absorb(stats);

    json report = res.report.to_json();
    report["command"] = job.command;
    report["seed"] = job.seed;
    report["residual"] = residual_summary(stats);
    const double budget = res.report.total_budget();
    bool ok = stats.sup_residual <= budget;
    if (job.command == "verify") ok = ok && stats.sup_nu_vs_cauchy <= budget + 1e-8;
    if (job.command == "invert") {
        std::size_t gap = 0;
        for (const auto& r : stats.records) {
            const double a = std::abs(r.mu_hat);
            if (a > 0.5 * *job.eps_inv && a < *job.eps_inv) ++gap;
        }
        report["unconstrained_count"] = gap;
    }
    report["within_budget"] = ok;

    const int dim = mu.basis()->dim();
    write_text(out_dir / "nu.jsonl", to_jsonl(res.nu));
    write_text(out_dir / "report.json", report.dump(2) + "\n");
    write_text(out_dir / "residuals.csv", csv_of(stats, dim, false));
    write_text(out_dir / "plot.csv", csv_of(stats, dim, true));
    if (!ok)
        return {ExitCode::budget_exceeded, "sup residual " + fmt_sci(stats.sup_residual) +
                                               " exceeds the budget " + fmt_sci(budget)};
    return {ExitCode::ok, "sup residual " + fmt_sci(stats.sup_residual) + " within budget " +
                              fmt_sci(budget)};
}

/// run_job with the error-to-exit-code mapping.
inline RunOutcome run_guarded(const JobConfig& job, const std::filesystem::path& out_dir) {
    try {
        return run_job(job, out_dir);
    } catch (const ContractionError& e) {
        return {ExitCode::infeasible, std::string(e.what()) + " [required budget " +
                                          config_detail::fmt_sci(e.required_budget()) + "]"};
    } catch (const ConfigurationError& e) {
        return {ExitCode::infeasible, e.what()};
    } catch (const ValidationError& e) {
        return {ExitCode::validation, e.what()};
    } catch (const DomainError& e) {
        return {ExitCode::validation, std::string(e.what()) + " (eps or K misconfigured)"};
    }
}

}  // namespace wienerlevy

#endif  // WIENERLEVY_CONFIG_HPP
