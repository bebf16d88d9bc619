#pragma once

// Run configuration, experiment dispatch, and result bundles.

#include <openssl/evp.h>
#include <unistd.h>

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "holeopt/blowup_lab.hpp"
#include "holeopt/eigensolver.hpp"
#include "holeopt/errors.hpp"
#include "holeopt/geometry.hpp"
#include "holeopt/mesher.hpp"
#include "holeopt/optimizer.hpp"
#include "holeopt/shape_analysis.hpp"
#include "holeopt/verify.hpp"

#ifndef HOLEOPT_VERSION
#define HOLEOPT_VERSION "0.1.0"
#endif

namespace holeopt {

using Json = nlohmann::ordered_json;

inline const std::vector<std::string>& experiment_kinds() {
    static const std::vector<std::string> k{"solve", "deriv", "optimize", "scan", "flucher", "blowup", "verify"};
    return k;
}

struct HoleSpec {
    std::optional<Vec2> center;
    double delta = 0.1;
    // Near-boundary placement: centre on the inward normal at gamma(boundary_t).
    std::optional<double> boundary_t;
    double clearance = 0.0;
};

struct DerivSpec {
    double theta = 0.3;
    std::optional<Vec2> direction;
    bool fd = true;
    double fd_step = 0.0;
    FdMode fd_mode = FdMode::transport;
};

struct OptimizeSpec {
    double delta = 0.2;
    Vec2 p0{0.5, 0.1};
    int max_iter = 40;
    double g_tol = 0.0;
    double step0 = 0.02;
    double shrink = 0.5;
    double margin = -1.0;
};

struct ScanSpec {
    double delta = 0.2;
    Vec2 lo{-0.7, -0.7};
    Vec2 hi{0.7, 0.7};
    int nx = 9;
    int ny = 9;
};

struct FlucherSpec {
    Vec2 x{0.0, 0.0};
    std::vector<double> radii{0.1, 0.07, 0.05, 0.035, 0.02};
};

struct BlowupSpec {
    double R = 8.0;
    double alpha = 1.0;
    double theta0 = kPi / 6.0;
    std::vector<double> radii{2.0, 3.0, 4.0, 5.0};
};

struct RunConfig {
    std::string experiment = "solve";
    Json domain = Json{{"kind", "disk"}, {"R", 1.0}};
    HoleSpec hole;
    double target_h = 0.02;
    double refine_factor = 8.0;
    double tol = 1e-10;
    int max_iter = 500;
    std::uint64_t seed = 20240611;
    int jobs = 1;
    std::string out;
    bool vtk = true;
    DerivSpec deriv;
    OptimizeSpec optimize;
    ScanSpec scan;
    FlucherSpec flucher;
    BlowupSpec blowup;
    std::string suite = "all";
};

namespace config_detail {

inline void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || item.key() == a;
        if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

inline double number(const Json& j, const std::string& field) {
    if (!j.is_number()) throw ConfigError(field + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(field + ": must be finite");
    return v;
}

inline int integer(const Json& j, const std::string& field) {
    if (!j.is_number_integer()) throw ConfigError(field + ": expected an integer");
    return j.get<int>();
}

inline Vec2 point(const Json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2) throw ConfigError(field + ": expected [x, y]");
    return {number(j[0], field + "[0]"), number(j[1], field + "[1]")};
}

inline std::vector<double> numbers(const Json& j, const std::string& field) {
    if (!j.is_array()) throw ConfigError(field + ": expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

inline void require(bool cond, const std::string& field, const std::string& what) {
    if (!cond) throw ConfigError(field + " " + what);
}

}  // namespace config_detail

/// Builds the outer domain from {"kind": "disk"|"ellipse"|"fourier_star", ...}.
inline SmoothDomain domain_from_json(const Json& j) {
    using namespace config_detail;
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string()) throw ConfigError("domain.kind: required string");
    const std::string kind = j["kind"].get<std::string>();
    try {
        if (kind == "disk") {
            check_keys(j, "domain", {"kind", "R"});
            return SmoothDomain::disk(j.contains("R") ? number(j["R"], "domain.R") : 1.0);
        }
        if (kind == "ellipse") {
            check_keys(j, "domain", {"kind", "a", "b"});
            require(j.contains("a") && j.contains("b"), "domain", "needs a and b");
            return SmoothDomain::ellipse(number(j["a"], "domain.a"), number(j["b"], "domain.b"));
        }
        if (kind == "fourier_star") {
            check_keys(j, "domain", {"kind", "r0", "modes"});
            std::vector<FourierMode> modes;
            if (j.contains("modes")) {
                if (!j["modes"].is_array()) throw ConfigError("domain.modes: expected a list");
                for (std::size_t i = 0; i < j["modes"].size(); ++i) {
                    const Json& m = j["modes"][i];
                    const std::string f = "domain.modes[" + std::to_string(i) + "]";
                    check_keys(m, f, {"k", "a"});
                    require(m.contains("k") && m.contains("a"), f, "needs k and a");
                    modes.push_back({integer(m["k"], f + ".k"), number(m["a"], f + ".a")});
                }
            }
            return SmoothDomain::fourier_star(j.contains("r0") ? number(j["r0"], "domain.r0") : 1.0, modes);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const GeometryError& e) {
        throw ConfigError(std::string("domain: ") + e.what());
    }
    throw ConfigError("domain.kind: unknown kind '" + kind + "'");
}

inline PuncturedDomain punctured_from(const RunConfig& c) {
    const SmoothDomain dom = domain_from_json(c.domain);
    Vec2 p;
    if (c.hole.boundary_t) {
        try {
            p = center_near_boundary(dom, *c.hole.boundary_t, c.hole.delta, c.hole.clearance);
        } catch (const GeometryError& e) {
            throw ConfigError(std::string("hole.boundary_t: ") + e.what());
        }
    } else {
        p = c.hole.center.value_or(Vec2{0.0, 0.0});
    }
    if (!(contains_ball(dom, Hole{p, c.hole.delta}) > 0.0)) throw ConfigError("hole.center: ball is not inside the domain");
    return PuncturedDomain(dom, Hole{p, c.hole.delta});
}

/// Parses a config document; `experiment` (the subcommand) must agree with any "experiment" key.
inline RunConfig parse_config(const Json& j, const std::string& experiment) {
    using namespace config_detail;
    RunConfig c;
    c.experiment = experiment;
    if (std::find(experiment_kinds().begin(), experiment_kinds().end(), experiment) == experiment_kinds().end()) {
        throw ConfigError("experiment: unknown kind '" + experiment + "'");
    }
    if (j.is_null()) return c;
    check_keys(j, "config", {"experiment", "domain", "hole", "mesh", "solver", "seed", "jobs", "out", "vtk", "deriv", "optimize", "scan",
                             "flucher", "blowup", "verify"});
    if (j.contains("experiment")) {
        if (!j["experiment"].is_string() || j["experiment"].get<std::string>() != experiment) {
            throw ConfigError("experiment: config says '" + j["experiment"].dump() + "' but the subcommand is '" + experiment + "'");
        }
    }
    if (j.contains("domain")) {
        domain_from_json(j["domain"]);
        c.domain = j["domain"];
    }
    if (j.contains("hole")) {
        const Json& h = j["hole"];
        check_keys(h, "hole", {"center", "delta", "boundary_t", "clearance"});
        if (h.contains("center")) c.hole.center = point(h["center"], "hole.center");
        if (h.contains("delta")) c.hole.delta = number(h["delta"], "hole.delta");
        if (h.contains("boundary_t")) c.hole.boundary_t = number(h["boundary_t"], "hole.boundary_t");
        if (h.contains("clearance")) c.hole.clearance = number(h["clearance"], "hole.clearance");
        require(!(c.hole.center && c.hole.boundary_t), "hole", "takes either center or boundary_t, not both");
        require(!c.hole.boundary_t || c.hole.clearance > 0.0, "hole.clearance", "must be positive");
    }
    if (j.contains("mesh")) {
        check_keys(j["mesh"], "mesh", {"target_h", "refine_factor"});
        if (j["mesh"].contains("target_h")) c.target_h = number(j["mesh"]["target_h"], "mesh.target_h");
        if (j["mesh"].contains("refine_factor")) c.refine_factor = number(j["mesh"]["refine_factor"], "mesh.refine_factor");
    }
    if (j.contains("solver")) {
        check_keys(j["solver"], "solver", {"tol", "max_iter"});
        if (j["solver"].contains("tol")) c.tol = number(j["solver"]["tol"], "solver.tol");
        if (j["solver"].contains("max_iter")) c.max_iter = integer(j["solver"]["max_iter"], "solver.max_iter");
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("seed: expected a nonnegative integer");
        c.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("jobs")) c.jobs = integer(j["jobs"], "jobs");
    if (j.contains("out")) {
        if (!j["out"].is_string()) throw ConfigError("out: expected a string");
        c.out = j["out"].get<std::string>();
    }
    if (j.contains("vtk")) {
        if (!j["vtk"].is_boolean()) throw ConfigError("vtk: expected true or false");
        c.vtk = j["vtk"].get<bool>();
    }
    if (j.contains("deriv")) {
        const Json& d = j["deriv"];
        check_keys(d, "deriv", {"theta", "direction", "fd", "fd_step", "fd_mode"});
        if (d.contains("theta")) c.deriv.theta = number(d["theta"], "deriv.theta");
        if (d.contains("direction")) c.deriv.direction = point(d["direction"], "deriv.direction");
        if (d.contains("fd")) {
            if (!d["fd"].is_boolean()) throw ConfigError("deriv.fd: expected true or false");
            c.deriv.fd = d["fd"].get<bool>();
        }
        if (d.contains("fd_step")) c.deriv.fd_step = number(d["fd_step"], "deriv.fd_step");
        if (d.contains("fd_mode")) {
            const std::string m = d["fd_mode"].is_string() ? d["fd_mode"].get<std::string>() : "";
            if (m == "transport") c.deriv.fd_mode = FdMode::transport;
            else if (m == "remesh") c.deriv.fd_mode = FdMode::remesh;
            else throw ConfigError("deriv.fd_mode: expected \"transport\" or \"remesh\"");
        }
    }
    if (j.contains("optimize")) {
        const Json& o = j["optimize"];
        check_keys(o, "optimize", {"delta", "p0", "max_iter", "g_tol", "step0", "shrink", "margin"});
        if (o.contains("delta")) c.optimize.delta = number(o["delta"], "optimize.delta");
        if (o.contains("p0")) c.optimize.p0 = point(o["p0"], "optimize.p0");
        if (o.contains("max_iter")) c.optimize.max_iter = integer(o["max_iter"], "optimize.max_iter");
        if (o.contains("g_tol")) c.optimize.g_tol = number(o["g_tol"], "optimize.g_tol");
        if (o.contains("step0")) c.optimize.step0 = number(o["step0"], "optimize.step0");
        if (o.contains("shrink")) c.optimize.shrink = number(o["shrink"], "optimize.shrink");
        if (o.contains("margin")) c.optimize.margin = number(o["margin"], "optimize.margin");
    }
    if (j.contains("scan")) {
        const Json& s = j["scan"];
        check_keys(s, "scan", {"delta", "lo", "hi", "nx", "ny"});
        if (s.contains("delta")) c.scan.delta = number(s["delta"], "scan.delta");
        if (s.contains("lo")) c.scan.lo = point(s["lo"], "scan.lo");
        if (s.contains("hi")) c.scan.hi = point(s["hi"], "scan.hi");
        if (s.contains("nx")) c.scan.nx = integer(s["nx"], "scan.nx");
        if (s.contains("ny")) c.scan.ny = integer(s["ny"], "scan.ny");
    }
    if (j.contains("flucher")) {
        const Json& f = j["flucher"];
        check_keys(f, "flucher", {"x", "radii"});
        if (f.contains("x")) c.flucher.x = point(f["x"], "flucher.x");
        if (f.contains("radii")) c.flucher.radii = numbers(f["radii"], "flucher.radii");
    }
    if (j.contains("blowup")) {
        const Json& b = j["blowup"];
        check_keys(b, "blowup", {"R", "alpha", "theta0", "radii"});
        if (b.contains("R")) c.blowup.R = number(b["R"], "blowup.R");
        if (b.contains("alpha")) c.blowup.alpha = number(b["alpha"], "blowup.alpha");
        if (b.contains("theta0")) c.blowup.theta0 = number(b["theta0"], "blowup.theta0");
        if (b.contains("radii")) c.blowup.radii = numbers(b["radii"], "blowup.radii");
    }
    if (j.contains("verify")) {
        check_keys(j["verify"], "verify", {"suite"});
        if (j["verify"].contains("suite")) {
            if (!j["verify"]["suite"].is_string()) throw ConfigError("verify.suite: expected a string");
            c.suite = j["verify"]["suite"].get<std::string>();
        }
    }
    return c;
}

/// Range checks on the effective configuration (after flag overrides).
inline void validate(const RunConfig& c) {
    using config_detail::require;
    require(c.target_h > 0.0 && c.target_h <= 0.5, "mesh.target_h", "must lie in (0, 0.5]");
    require(c.refine_factor >= 1.0 && c.refine_factor <= 64.0, "mesh.refine_factor", "must lie in [1, 64]");
    require(c.tol > 0.0 && c.tol < 1e-3, "solver.tol", "must lie in (0, 1e-3)");
    require(c.max_iter >= 1, "solver.max_iter", "must be positive");
    require(c.jobs >= 1 && c.jobs <= 256, "jobs", "must lie in [1, 256]");
    domain_from_json(c.domain);
    if (c.experiment == "solve" || c.experiment == "deriv") {
        require(c.hole.delta > 0.0, "hole.delta", "must be positive");
        require(c.target_h < c.hole.delta, "mesh.target_h", "must be smaller than hole.delta");
        punctured_from(c);
    }
    if (c.experiment == "deriv") require(c.deriv.theta > 0.0 && c.deriv.theta < 0.5 * kPi, "deriv.theta", "must lie in (0, pi/2)");
    if (c.experiment == "optimize") {
        require(c.optimize.delta > 0.0, "optimize.delta", "must be positive");
        require(c.optimize.max_iter >= 1, "optimize.max_iter", "must be positive");
        require(c.optimize.shrink > 0.0 && c.optimize.shrink < 1.0, "optimize.shrink", "must lie in (0, 1)");
        require(c.optimize.step0 > 0.0, "optimize.step0", "must be positive");
        require(c.optimize.g_tol >= 0.0, "optimize.g_tol", "must be nonnegative");
    }
    if (c.experiment == "scan") {
        require(c.scan.delta > 0.0, "scan.delta", "must be positive");
        require(c.scan.nx >= 2 && c.scan.ny >= 2, "scan.nx/ny", "must be at least 2");
        require(c.scan.hi.x > c.scan.lo.x && c.scan.hi.y > c.scan.lo.y, "scan.hi", "must exceed scan.lo");
    }
    if (c.experiment == "flucher") {
        require(c.flucher.radii.size() >= 4, "flucher.radii", "needs at least four radii");
        for (double r : c.flucher.radii) require(r > 0.0 && r < 1.0, "flucher.radii", "must lie in (0, 1)");
    }
    if (c.experiment == "blowup") {
        require(c.blowup.R >= 4.0, "blowup.R", "must be at least 4");
        require(c.blowup.theta0 > 0.0 && c.blowup.theta0 < 0.5 * kPi, "blowup.theta0", "must lie in (0, pi/2)");
        for (double r : c.blowup.radii) require(r > 1.0 && r < c.blowup.R / 1.5, "blowup.radii", "must lie in (1, R/1.5)");
    }
    if (c.experiment == "verify") {
        const auto& names = suite_names();
        if (std::find(names.begin(), names.end(), c.suite) == names.end()) throw ConfigError("verify: unknown suite '" + c.suite + "'");
    }
}

/// Effective configuration with every default filled in; `out` and `jobs` are left out
/// because they do not change results.
inline Json canonical_json(const RunConfig& c) {
    auto pt = [](Vec2 p) { return Json::array({p.x, p.y}); };
    Json j;
    j["experiment"] = c.experiment;
    j["domain"] = c.domain;
    Json hole;
    if (c.hole.boundary_t) {
        hole["boundary_t"] = *c.hole.boundary_t;
        hole["clearance"] = c.hole.clearance;
    } else {
        hole["center"] = pt(c.hole.center.value_or(Vec2{0.0, 0.0}));
    }
    hole["delta"] = c.hole.delta;
    j["hole"] = hole;
    j["mesh"] = {{"target_h", c.target_h}, {"refine_factor", c.refine_factor}};
    j["solver"] = {{"tol", c.tol}, {"max_iter", c.max_iter}};
    j["seed"] = c.seed;
    j["vtk"] = c.vtk;
    Json d{{"theta", c.deriv.theta}, {"fd", c.deriv.fd}, {"fd_step", c.deriv.fd_step},
           {"fd_mode", c.deriv.fd_mode == FdMode::transport ? "transport" : "remesh"}};
    if (c.deriv.direction) d["direction"] = pt(*c.deriv.direction);
    j["deriv"] = d;
    j["optimize"] = {{"delta", c.optimize.delta}, {"p0", pt(c.optimize.p0)},   {"max_iter", c.optimize.max_iter},
                     {"g_tol", c.optimize.g_tol}, {"step0", c.optimize.step0}, {"shrink", c.optimize.shrink},
                     {"margin", c.optimize.margin}};
    j["scan"] = {{"delta", c.scan.delta}, {"lo", pt(c.scan.lo)}, {"hi", pt(c.scan.hi)}, {"nx", c.scan.nx}, {"ny", c.scan.ny}};
    j["flucher"] = {{"x", pt(c.flucher.x)}, {"radii", c.flucher.radii}};
    j["blowup"] = {{"R", c.blowup.R}, {"alpha", c.blowup.alpha}, {"theta0", c.blowup.theta0}, {"radii", c.blowup.radii}};
    j["verify"] = {{"suite", c.suite}};
    return j;
}

inline std::string sha256_hex(const std::string& text) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

inline std::string config_hash(const RunConfig& c) { return sha256_hex(canonical_json(c).dump()); }

/// Comma-separated table with a header row; numbers are written round-trip exact.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvTable& row(std::vector<std::string> cells) {
        if (cells.size() != header_.size()) throw Error("csv: row width does not match header");
        rows_.push_back(std::move(cells));
        return *this;
    }

    static std::string num(double v) {
        std::ostringstream os;
        os.precision(17);
        os << v;
        return os.str();
    }

    std::string str() const {
        std::ostringstream os;
        write_line(os, header_);
        for (const auto& r : rows_) write_line(os, r);
        return os.str();
    }

    std::size_t size() const { return rows_.size(); }

private:
    static void write_line(std::ostream& os, const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            const std::string& c = cells[i];
            if (c.find_first_of(",\"\n") == std::string::npos) {
                os << c;
            } else {
                os << '"';
                for (char ch : c) os << (ch == '"' ? "\"\"" : std::string(1, ch));
                os << '"';
            }
        }
        os << '\n';
    }

    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline CsvTable checks_table(const std::vector<CheckRow>& rows) {
    CsvTable t({"check_id", "parameters", "statistic", "threshold", "pass"});
    for (const auto& r : rows) t.row({r.check_id, r.parameters, CsvTable::num(r.statistic), CsvTable::num(r.threshold), r.pass ? "true" : "false"});
    return t;
}

/// Files of one run; written to a temporary directory and renamed into place.
struct ResultBundle {
    Json summary;
    std::vector<std::pair<std::string, std::string>> files;  ///< (name, contents)
    bool verification_failed = false;
    std::filesystem::path location;

    void add(const std::string& name, std::string contents) { files.emplace_back(name, std::move(contents)); }
};

inline void write_bundle(ResultBundle& b, const std::filesystem::path& out) {
    namespace fs = std::filesystem;
    const fs::path target = fs::absolute(out);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    static std::atomic<unsigned> counter{0};
    const std::string tag = std::to_string(::getpid()) + "-" + std::to_string(counter++);
    const fs::path tmp = target.string() + ".tmp-" + tag;
    fs::remove_all(tmp);
    fs::create_directory(tmp);
    try {
        for (const auto& [name, contents] : b.files) {
            std::ofstream f(tmp / name, std::ios::binary);
            f << contents;
            if (!f) throw Error("bundle: cannot write " + (tmp / name).string());
        }
        std::ofstream s(tmp / "summary.json", std::ios::binary);
        s << b.summary.dump(2) << '\n';
        if (!s) throw Error("bundle: cannot write summary");
    } catch (...) {
        fs::remove_all(tmp);
        throw;
    }
    fs::path old;
    if (fs::exists(target)) {
        old = target.string() + ".old-" + tag;
        fs::rename(target, old);
    }
    fs::rename(tmp, target);
    if (!old.empty()) fs::remove_all(old);
    b.location = target;
}

namespace run_detail {

inline Json pt(Vec2 p) { return Json::array({p.x, p.y}); }

inline std::string vtk_string(const Mesh& m, std::span<const double> u) {
    std::ostringstream os;
    const VtkField f{"u", u};
    write_vtk(os, m, std::span<const VtkField>(&f, 1));
    return os.str();
}

inline CsvTable flux_table(const HoleFlux& f) {
    CsvTable t({"angle", "flux"});
    for (std::size_t i = 0; i < f.values.size(); ++i) t.row({CsvTable::num(f.angles[i]), CsvTable::num(f.values[i])});
    return t;
}

inline EigenSolution solve_config(const RunConfig& c, const PuncturedDomain& pd, double* factor_used) {
    const double factor = factor_for_clearance(c.target_h, pd.clearance(), c.refine_factor);
    if (factor_used) *factor_used = factor;
    return solve_lambda1(generate_mesh(pd, c.target_h, factor, c.seed), EigenOptions{c.tol, c.max_iter});
}

inline Resolution resolution_of(const RunConfig& c) {
    Resolution r;
    r.target_h = c.target_h;
    r.hole_refine_factor = c.refine_factor;
    r.seed = c.seed;
    r.eigen = EigenOptions{c.tol, c.max_iter};
    return r;
}

inline void run_solve(const RunConfig& c, ResultBundle& b) {
    const PuncturedDomain pd = punctured_from(c);
    double factor = 0.0;
    const auto sol = solve_config(c, pd, &factor);
    const auto flux = hole_flux(sol);
    const auto st = mesh_statistics(*sol.mesh);
    b.summary["lambda1"] = sol.lambda1;
    b.summary["residual"] = sol.residual;
    b.summary["iterations"] = sol.iterations;
    b.summary["n_dof"] = sol.system->free_vertices.size();
    b.summary["n_vertices"] = st.n_vertices;
    b.summary["n_triangles"] = st.n_triangles;
    b.summary["min_angle_deg"] = st.min_angle_deg;
    b.summary["hole_center"] = pt(pd.center());
    b.summary["delta"] = pd.delta();
    b.summary["clearance"] = pd.clearance();
    b.summary["refine_factor"] = factor;
    b.add("flux.csv", flux_table(flux).str());
    if (c.vtk) b.add("mesh.vtk", vtk_string(*sol.mesh, sol.u));
}

inline void run_deriv(const RunConfig& c, ResultBundle& b) {
    const PuncturedDomain pd = punctured_from(c);
    double factor = 0.0;
    const auto sol = solve_config(c, pd, &factor);
    const auto flux = hole_flux(sol);
    const ArcDecomposition decomp = c.deriv.direction ? ArcDecomposition::with_axis(normalized(*c.deriv.direction), c.deriv.theta)
                                                      : arc_decomposition(pd, c.deriv.theta);
    ShapeReport r = arc_integrals(flux, decomp);
    double rel = std::numeric_limits<double>::quiet_NaN();
    if (c.deriv.fd) {
        FdOptions o;
        o.step = c.deriv.fd_step;
        o.target_h = c.target_h;
        o.hole_refine_factor = factor;
        o.seed = c.seed;
        o.mode = c.deriv.fd_mode;
        o.eigen = EigenOptions{c.tol, c.max_iter};
        const FdResult fd = fd_derivative(pd, decomp.axis, o);
        r.fd_value = fd.value;
        r.fd_noise = fd.noise;
        rel = std::abs(r.hadamard_total - fd.value) / std::max(std::abs(fd.value), 1e-3);
    }
    CsvTable t({"domain_id", "p_x", "p_y", "delta", "theta", "arc_top", "arc_bottom", "arc_sides", "total", "fd", "rel_err"});
    t.row({pd.domain().id(), CsvTable::num(pd.center().x), CsvTable::num(pd.center().y), CsvTable::num(pd.delta()), CsvTable::num(r.theta),
           CsvTable::num(r.arc_top), CsvTable::num(r.arc_bottom), CsvTable::num(r.arc_sides), CsvTable::num(r.hadamard_total),
           CsvTable::num(r.fd_value), CsvTable::num(rel)});
    b.add("deriv.csv", t.str());
    b.add("flux.csv", flux_table(flux).str());
    if (c.vtk) b.add("mesh.vtk", vtk_string(*sol.mesh, sol.u));
    b.summary["lambda1"] = sol.lambda1;
    b.summary["direction"] = pt(r.direction);
    b.summary["theta"] = r.theta;
    b.summary["total"] = r.hadamard_total;
    b.summary["arc_top"] = r.arc_top;
    b.summary["arc_bottom"] = r.arc_bottom;
    b.summary["arc_sides"] = r.arc_sides;
    b.summary["arc_side_right"] = r.arc_side_right;
    b.summary["arc_side_left"] = r.arc_side_left;
    if (c.deriv.fd) {
        b.summary["fd"] = r.fd_value;
        b.summary["fd_noise"] = r.fd_noise;
        b.summary["rel_err"] = rel;
    }
}

inline void run_optimize(const RunConfig& c, ResultBundle& b) {
    const SmoothDomain dom = domain_from_json(c.domain);
    OptimizeOptions o;
    o.max_iter = c.optimize.max_iter;
    o.g_tol = c.optimize.g_tol;
    o.step0 = c.optimize.step0;
    o.shrink = c.optimize.shrink;
    o.margin = c.optimize.margin;
    o.resolution = resolution_of(c);
    o.resolution.target_h = std::min(c.target_h, 0.5 * c.optimize.delta);
    const Trajectory tr = optimize_hole(dom, c.optimize.delta, c.optimize.p0, o);
    CsvTable t({"iter", "p_x", "p_y", "lambda1", "grad_x", "grad_y", "clearance", "step", "projected"});
    for (std::size_t k = 0; k < tr.iterates.size(); ++k) {
        const auto& it = tr.iterates[k];
        t.row({std::to_string(k), CsvTable::num(it.p.x), CsvTable::num(it.p.y), CsvTable::num(it.lambda1), CsvTable::num(it.gradient.x),
               CsvTable::num(it.gradient.y), CsvTable::num(it.clearance), CsvTable::num(it.step), it.projected ? "true" : "false"});
    }
    b.add("trajectory.csv", t.str());
    const Iterate& last = tr.iterates.back();
    b.summary["p_star"] = pt(last.p);
    b.summary["lambda_star"] = last.lambda1;
    b.summary["clearance_star"] = last.clearance;
    b.summary["termination"] = to_string(tr.termination);
    b.summary["iterations"] = tr.iterates.size() - 1;
    b.summary["g_tol"] = tr.g_tol;
}

inline void run_scan(const RunConfig& c, ResultBundle& b) {
    const SmoothDomain dom = domain_from_json(c.domain);
    Resolution res = resolution_of(c);
    res.target_h = std::min(c.target_h, 0.5 * c.scan.delta);
    const Landscape l = landscape_scan(dom, c.scan.delta, GridSpec{c.scan.lo, c.scan.hi, c.scan.nx, c.scan.ny}, res, c.jobs);
    CsvTable t({"p_x", "p_y", "clearance", "lambda1"});
    for (const auto& p : l.points) t.row({CsvTable::num(p.p.x), CsvTable::num(p.p.y), CsvTable::num(p.clearance), CsvTable::num(p.lambda1)});
    b.add("landscape.csv", t.str());
    const ScanPoint& best = l.points[l.argmax];
    b.summary["argmax"] = pt(best.p);
    b.summary["lambda_max"] = best.lambda1;
    b.summary["clearance_at_argmax"] = best.clearance;
    b.summary["feasible_points"] = l.points.size();
    b.summary["delta"] = c.scan.delta;
}

inline void run_flucher(const RunConfig& c, ResultBundle& b) {
    FlucherOptions o;
    o.target_h = c.target_h;
    o.hole_refine_factor = c.refine_factor;
    o.seed = c.seed;
    o.eigen = EigenOptions{c.tol, c.max_iter};
    const FlucherFit f = flucher_fit(domain_from_json(c.domain), c.flucher.x, c.flucher.radii, o);
    CsvTable t({"radius", "lambda1", "model"});
    for (std::size_t i = 0; i < f.radii.size(); ++i) {
        t.row({CsvTable::num(f.radii[i]), CsvTable::num(f.lambdas[i]), CsvTable::num(f.lambda0 + f.a_fit / (-std::log(f.radii[i]) + f.c_fit))});
    }
    b.add("flucher.csv", t.str());
    b.summary["x"] = pt(c.flucher.x);
    b.summary["lambda0"] = f.lambda0;
    b.summary["a_fit"] = f.a_fit;
    b.summary["c_fit"] = f.c_fit;
    b.summary["reference"] = f.reference;
    b.summary["rel_err"] = std::abs(f.a_fit / f.reference - 1.0);
    b.summary["rms_residual"] = f.rms_residual;
}

inline void summarize_checks(const std::vector<CheckRow>& rows, ResultBundle& b) {
    std::size_t passed = 0;
    for (const auto& r : rows) passed += r.pass ? 1 : 0;
    b.summary["checks"] = rows.size();
    b.summary["passed"] = passed;
    b.summary["failed"] = rows.size() - passed;
    Json failed = Json::array();
    for (const auto& r : rows) {
        if (!r.pass) failed.push_back(r.check_id + "[" + r.parameters + "]");
    }
    b.summary["failed_checks"] = failed;
    b.verification_failed = passed != rows.size();
    b.add("checks.csv", checks_table(rows).str());
}

inline void run_blowup(const RunConfig& c, ResultBundle& b) {
    BlowupSettings s{c.blowup.R, c.blowup.alpha, c.blowup.theta0, c.blowup.radii};
    TruncatedKOptions k;
    k.R = c.blowup.R;
    k.seed = c.seed;
    const HarmonicSolution sol = solve_blowup(c.blowup.R, linear_alpha(c.blowup.alpha), k);
    const auto rows = blowup_checks(sol, s);
    CsvTable t({"radius", "slope", "residual", "samples"});
    for (const auto& r : blowdown_check(sol, c.blowup.radii)) {
        t.row({CsvTable::num(r.radius), CsvTable::num(r.slope), CsvTable::num(r.residual), std::to_string(r.samples)});
    }
    b.add("blowdown.csv", t.str());
    if (c.vtk) b.add("k_mesh.vtk", vtk_string(sol.mesh(), sol.v));
    b.summary["R"] = c.blowup.R;
    b.summary["alpha"] = c.blowup.alpha;
    summarize_checks(rows, b);
}

inline void run_verify(const RunConfig& c, ResultBundle& b) {
    VerifySettings s;
    s.target_h = c.target_h;
    s.hole_refine_factor = c.refine_factor;
    s.seed = c.seed;
    s.eigen = EigenOptions{c.tol, c.max_iter};
    b.summary["suite"] = c.suite;
    summarize_checks(verify_all(c.suite, s, c.jobs), b);
}

}  // namespace run_detail

/// Runs one experiment and writes its bundle to `c.out` (default results/<experiment>).
inline ResultBundle run(const RunConfig& c) {
    validate(c);
    const auto t0 = std::chrono::steady_clock::now();
    ResultBundle b;
    b.summary["experiment"] = c.experiment;
    if (c.experiment == "solve") run_detail::run_solve(c, b);
    else if (c.experiment == "deriv") run_detail::run_deriv(c, b);
    else if (c.experiment == "optimize") run_detail::run_optimize(c, b);
    else if (c.experiment == "scan") run_detail::run_scan(c, b);
    else if (c.experiment == "flucher") run_detail::run_flucher(c, b);
    else if (c.experiment == "blowup") run_detail::run_blowup(c, b);
    else run_detail::run_verify(c, b);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    b.summary["provenance"] = {{"config_hash", config_hash(c)}, {"version", HOLEOPT_VERSION}, {"wall_time_s", wall}};
    b.add("config.json", canonical_json(c).dump(2) + "\n");
    write_bundle(b, c.out.empty() ? std::filesystem::path("results") / c.experiment : std::filesystem::path(c.out));
    return b;
}

/// Summary without the wall-clock entry, for determinism comparisons.
inline Json comparable_summary(Json summary) {
    if (summary.contains("provenance")) summary["provenance"].erase("wall_time_s");
    return summary;
}

}  // namespace holeopt
