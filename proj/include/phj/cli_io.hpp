#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "phj/cell_problem.hpp"
#include "phj/experiments.hpp"
#include "phj/grid.hpp"
#include "phj/grid_solver.hpp"
#include "phj/hamiltonians.hpp"
#include "phj/paths.hpp"
#include "phj/pathwise.hpp"
#include "phj/util.hpp"
#include "phj/variational.hpp"

namespace phj::cli {

// ---------------------------------------------------------------------------
// flat key = value configuration
// ---------------------------------------------------------------------------

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::map<std::string, std::string> parse_kv_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line " + std::to_string(ln) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || key.find(' ') != std::string::npos)
            throw std::runtime_error("config line " + std::to_string(ln) + ": malformed key");
        if (val.empty()) throw std::runtime_error("config line " + std::to_string(ln) + ": empty value for '" + key + "'");
        if (kv.count(key)) throw std::runtime_error("config line " + std::to_string(ln) + ": duplicate key '" + key + "'");
        kv[key] = val;
    }
    return kv;
}

// Key-value store with touched-key tracking: every key the run does not
// consume is rejected by name, and every consumed value (default or not) is
// echoed into the manifest.
struct RunConfig {
    std::string subcommand;
    std::map<std::string, std::string> kv;
    mutable std::set<std::string> touched;
    mutable std::map<std::string, std::string> resolved;

    bool has(const std::string& key) const {
        touched.insert(key);
        return kv.count(key) > 0;
    }
    std::string get_str(const std::string& key, const std::string& def) const {
        touched.insert(key);
        std::string v = kv.count(key) ? kv.at(key) : def;
        resolved[key] = v;
        return v;
    }
    std::string require_str(const std::string& key) const {
        touched.insert(key);
        if (!kv.count(key)) throw std::runtime_error("missing required key '" + key + "' for " + subcommand);
        resolved[key] = kv.at(key);
        return kv.at(key);
    }
    double parse_double(const std::string& key, const std::string& v) const {
        try {
            std::size_t pos = 0;
            double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (...) {
            throw std::runtime_error("key '" + key + "': expected number, got '" + v + "'");
        }
    }
    double get(const std::string& key, double def) const {
        touched.insert(key);
        double x = kv.count(key) ? parse_double(key, kv.at(key)) : def;
        resolved[key] = fmt_g17(x);
        return x;
    }
    double require(const std::string& key) const { return parse_double(key, require_str(key)); }
    long get_int(const std::string& key, long def) const {
        double x = get(key, static_cast<double>(def));
        long r = std::lround(x);
        if (std::abs(x - static_cast<double>(r)) > 1e-9) throw std::runtime_error("key '" + key + "': expected integer");
        return r;
    }
    bool get_bool(const std::string& key, bool def) const {
        touched.insert(key);
        std::string v = kv.count(key) ? kv.at(key) : std::string(def ? "true" : "false");
        resolved[key] = v;
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw std::runtime_error("key '" + key + "': expected boolean, got '" + v + "'");
    }
    std::vector<double> parse_list(const std::string& key, const std::string& v) const {
        std::vector<double> out;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) throw std::runtime_error("key '" + key + "': empty list entry");
            out.push_back(parse_double(key, item));
        }
        if (out.empty()) throw std::runtime_error("key '" + key + "': empty list");
        return out;
    }
    std::vector<double> require_list(const std::string& key) const { return parse_list(key, require_str(key)); }
    std::vector<double> get_list(const std::string& key, const std::string& def) const {
        return parse_list(key, get_str(key, def));
    }

    void finish() const {
        for (const auto& [key, value] : kv) {
            (void)value;
            if (!touched.count(key)) throw std::runtime_error("unknown key '" + key + "' for " + subcommand);
        }
    }
};

// ---------------------------------------------------------------------------
// output directory + manifest
// ---------------------------------------------------------------------------

struct OutputEntry {
    std::string name;
    std::uint64_t bytes = 0;
    std::uint64_t checksum = 0;
};

struct OutputWriter {
    std::filesystem::path dir;
    std::vector<OutputEntry> outputs;

    explicit OutputWriter(std::filesystem::path d) : dir(std::move(d)) { std::filesystem::create_directories(dir); }

    void write(const std::string& name, const std::string& content) {
        std::filesystem::path p = dir / name;
        std::filesystem::create_directories(p.parent_path());
        std::ofstream f(p, std::ios::binary);
        if (!f) throw std::runtime_error("cannot open output file " + p.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        f.close();
        outputs.push_back(OutputEntry{name, content.size(), fnv1a64(content.data(), content.size())});
    }
};

inline std::string checksum_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline void write_manifest(OutputWriter& w, const RunConfig& cfg, bool pass, double wall_seconds,
                           const nlohmann::json& extra = nlohmann::json::object()) {
    nlohmann::json j;
    j["command"] = cfg.subcommand;
    j["version"] = kVersion;
    j["pass"] = pass;
    j["wall_seconds"] = wall_seconds;
    j["config"] = cfg.resolved;
    if (!extra.empty()) j["record"] = extra;
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& e : w.outputs)
        outs.push_back({{"file", e.name}, {"bytes", e.bytes}, {"fnv1a64", checksum_hex(e.checksum)}});
    j["outputs"] = outs;
    std::filesystem::path p = w.dir / "manifest.json";
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + p.string());
    f << j.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// config -> domain objects
// ---------------------------------------------------------------------------

inline PotentialSpec build_potential(const RunConfig& cfg, const std::string& prefix, const std::string& def_kind) {
    std::string kind = cfg.get_str(prefix + ".kind", def_kind);
    if (kind == "zero") return PotentialSpec::zero();
    if (kind == "cosine")
        return PotentialSpec::cosine(cfg.get(prefix + ".amp", 1.0), static_cast<int>(cfg.get_int(prefix + ".harmonic", 1)));
    if (kind == "sine")
        return PotentialSpec::sine(cfg.get(prefix + ".amp", 1.0), static_cast<int>(cfg.get_int(prefix + ".harmonic", 1)));
    if (kind == "sawtooth") return PotentialSpec::sawtooth(cfg.get(prefix + ".s", 0.5));
    throw std::runtime_error("key '" + prefix + ".kind': unknown potential kind '" + kind + "'");
}

inline HamiltonianSpec build_hamiltonian(const RunConfig& cfg) {
    std::string fam = cfg.get_str("H.family", "power");
    if (fam == "eikonal") {
        if (cfg.has("f.kind")) return make_eikonal_forcing(build_potential(cfg, "f", "cosine"));
        return make_eikonal();
    }
    if (fam == "power") return make_power(cfg.get("H.q", 2.0), build_potential(cfg, "V", "cosine"));
    if (fam == "lty") {
        LtyKinetic kin;
        kin.th1 = cfg.get("lty.th1", 1.0);
        kin.th2 = cfg.get("lty.th2", 0.5);
        kin.th3 = cfg.get("lty.th3", 0.25);
        kin.build();
        return make_lty(cfg.get("lty.s", 0.2), kin);
    }
    throw std::runtime_error("key 'H.family': unknown family '" + fam + "'");
}

inline SchemeConfig build_scheme(const RunConfig& cfg) {
    SchemeConfig sc;
    std::string flux = cfg.get_str("scheme.flux", "lf");
    if (flux == "lf")
        sc.flux = FluxKind::LaxFriedrichs;
    else if (flux == "eo")
        sc.flux = FluxKind::EngquistOsherConvex;
    else
        throw std::runtime_error("key 'scheme.flux': unknown flux '" + flux + "'");
    sc.cfl = cfg.get("scheme.cfl", 0.9);
    double ceil = cfg.get("scheme.gradient_ceiling", 0.0);
    if (ceil > 0.0) sc.gradient_ceiling = ceil;
    return sc;
}

inline CellConfig build_cell(const RunConfig& cfg) {
    CellConfig cc;
    std::string method = cfg.get_str("cell.method", "large-time");
    if (method == "large-time")
        cc.method = CellConfig::Method::LargeTime;
    else if (method == "discount")
        cc.method = CellConfig::Method::VanishingDiscount;
    else
        throw std::runtime_error("key 'cell.method': unknown method '" + method + "'");
    cc.n = static_cast<int>(cfg.get_int("cell.n", 256));
    cc.tol = cfg.get("cell.tol", 2e-4);
    cc.t0 = cfg.get("cell.t0", 4.0);
    cc.t_max = cfg.get("cell.tmax", 512.0);
    cc.richardson = cfg.get_bool("cell.richardson", true);
    cc.discount = cfg.get("cell.discount", 0.02);
    cc.discount_min = cfg.get("cell.discount_min", 0.0025);
    validate(cc);
    return cc;
}

inline std::vector<double> build_pgrid(const RunConfig& cfg) {
    double lo = cfg.get("p.min", -3.0);
    double hi = cfg.get("p.max", 3.0);
    long count = cfg.get_int("p.count", 25);
    if (!(hi > lo) || count < 3) throw std::runtime_error("keys 'p.min/p.max/p.count': need p.max > p.min, p.count >= 3");
    return linspace(lo, hi, static_cast<std::size_t>(count));
}

inline PiecewiseLinearPath build_path(const RunConfig& cfg, double T, std::uint64_t seed) {
    std::string kind = cfg.get_str("path.kind", "line");
    if (kind == "line") return path_line(T, cfg.get("path.slope", 1.0));
    if (kind == "tent") {
        double h = cfg.get("path.height", 1.0);
        return make_scalar_path({0.0, T / 2.0, T}, {0.0, h, 0.0});
    }
    if (kind == "brownian") {
        PathFamilySpec pf;
        pf.family = PathFamily::BrownianSample;
        pf.eta = cfg.get("path.eta", 1.0 / 256.0);
        pf.seed = cfg.has("path.seed") ? static_cast<std::uint64_t>(cfg.get_int("path.seed", 0)) : seed;
        return gen_path(pf, T).front();
    }
    if (kind == "takagi") {
        PathFamilySpec pf;
        pf.family = PathFamily::TakagiLike;
        pf.theta = cfg.get("path.theta", 0.5);
        pf.depth = static_cast<int>(cfg.get_int("path.depth", 10));
        return gen_path(pf, T).front();
    }
    if (kind == "explicit") {
        std::vector<double> times = cfg.require_list("path.times");
        std::vector<double> vals = cfg.require_list("path.values");
        return make_scalar_path(times, vals);
    }
    throw std::runtime_error("key 'path.kind': unknown kind '" + kind + "'");
}

inline std::function<double(double)> build_u0(const RunConfig& cfg) {
    std::string kind = cfg.get_str("u0.kind", "sin");
    double amp = cfg.get("u0.amp", 1.0);
    long k = cfg.get_int("u0.k", 1);
    if (kind == "sin") return [amp, k](double x) { return amp * std::sin(kTwoPi * static_cast<double>(k) * x); };
    if (kind == "cos") return [amp, k](double x) { return amp * std::cos(kTwoPi * static_cast<double>(k) * x); };
    if (kind == "hat") return [amp](double x) { return amp * std::max(0.0, 0.25 - circ_dist(x, 0.5, 1.0)); };
    if (kind == "zero") return [](double) { return 0.0; };
    throw std::runtime_error("key 'u0.kind': unknown kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// subcommand runners (return the acceptance verdict)
// ---------------------------------------------------------------------------

inline bool run_solve(const RunConfig& cfg, OutputWriter& w, std::uint64_t seed, int workers) {
    (void)workers;
    HamiltonianSpec spec = build_hamiltonian(cfg);
    SchemeConfig sc = build_scheme(cfg);
    double T = cfg.get("T", 1.0);
    double eps = cfg.get("eps", 0.125);
    long n = cfg.get_int("n", 256);
    double affine_p = cfg.get("affine_p", 0.0);
    PiecewiseLinearPath path = build_path(cfg, T, seed);
    Grid1D g = make_grid(cfg.get("period", 1.0), static_cast<int>(n));
    GridFunction u0 = sample(g, build_u0(cfg));
    std::vector<double> cps = cfg.get_list("checkpoints", "0.25,0.5,0.75,1");
    std::string driver = cfg.get_str("driver", "pde");

    PathwiseSolveRecord rec;
    if (driver == "pde") {
        cfg.finish();
        rec = solve_pathwise(spec, eps, path, u0, cps, sc, affine_p);
    } else if (driver == "homogenized") {
        EffectiveTable table = effective_table(spec, build_pgrid(cfg), build_cell(cfg), workers);
        cfg.finish();
        rec = solve_homogenized(table, path, u0, cps, affine_p);
    } else {
        throw std::runtime_error("key 'driver': unknown driver '" + driver + "'");
    }
    for (std::size_t i = 0; i < rec.states.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "state_%03zu.csv", i);
        w.write(name, grid_csv(rec.states[i]));
    }
    nlohmann::json extra;
    extra["checkpoints"] = rec.checkpoint_times;
    extra["lipschitz"] = rec.lip_trace;
    extra["aborted"] = rec.aborted;
    extra["abort_segment"] = rec.abort_segment;
    extra["affine_p"] = rec.affine_p;
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : rec.segments)
        segs.push_back({{"t0", s.t0}, {"t1", s.t1}, {"increment", s.increment}, {"direction", s.direction}, {"steps", s.steps}});
    extra["segments"] = segs;
    w.write("record.json", extra.dump(2) + "\n");
    return !rec.aborted;
}

inline bool run_effective(const RunConfig& cfg, OutputWriter& w, std::uint64_t, int workers) {
    HamiltonianSpec spec = build_hamiltonian(cfg);
    CellConfig cc = build_cell(cfg);
    std::vector<double> p = build_pgrid(cfg);
    cfg.finish();
    EffectiveTable table = effective_table(spec, p, cc, workers);
    ConsistencyReport rep = consistency_check(table);
    w.write("effective.csv", effective_table_csv(table));
    nlohmann::json j;
    j["max_gap"] = rep.max_gap;
    j["consistent"] = rep.consistent;
    j["convex"] = table.convex;
    j["max_residual"] = table.max_residual;
    bool all_conv = true;
    for (char c : table.hbar_converged) all_conv = all_conv && c;
    for (char c : table.neg_converged) all_conv = all_conv && c;
    j["all_converged"] = all_conv;
    w.write("report.json", j.dump(2) + "\n");
    return all_conv;
}

inline bool run_consistency(const RunConfig& cfg, OutputWriter& w, std::uint64_t seed, int workers) {
    return run_effective(cfg, w, seed, workers);  // same pipeline; the gap columns are the point
}

inline bool run_rate_sweep(const RunConfig& cfg, OutputWriter& w, std::uint64_t seed, int workers, bool mild) {
    HamiltonianSpec spec = build_hamiltonian(cfg);
    RateOptions opt;
    opt.T = cfg.get("T", 1.0);
    opt.beta = cfg.get("beta", 1.0 / 3.0);
    opt.nodes_per_cell = static_cast<int>(cfg.get_int("npc", 16));
    opt.n_max = static_cast<int>(cfg.get_int("n_max", 4096));
    opt.scheme = build_scheme(cfg);
    std::vector<double> eps_list = cfg.require_list("epsilon_list");
    double rho = mild ? cfg.require("rho") : 0.0;
    PiecewiseLinearPath source = build_path(cfg, opt.T, seed);
    auto u0 = build_u0(cfg);
    EffectiveTable table = effective_table(spec, build_pgrid(cfg), build_cell(cfg), workers);
    cfg.finish();
    RateReport rep = mild ? mild_sweep(spec, table, source, u0, eps_list, rho, opt)
                          : rate_sweep(spec, table, source, u0, eps_list, opt);
    w.write("rates.csv", rate_csv(rep));
    nlohmann::json j;
    j["slope"] = rep.slope;
    j["envelope_c"] = rep.envelope_c;
    j["inversions"] = rep.inversions;
    j["monotone_ok"] = rep.monotone_ok;
    j["halved"] = rep.halved;
    j["assumption_ok"] = rep.assumption_ok;
    j["pass"] = rep.pass;
    w.write("report.json", j.dump(2) + "\n");
    return rep.pass;
}

inline bool run_blowup(const RunConfig& cfg, OutputWriter& w, std::uint64_t seed, int) {
    PotentialSpec f = build_potential(cfg, "f", "sine");
    BlowupOptions opt;
    opt.nodes_per_cell = static_cast<int>(cfg.get_int("npc", 128));
    opt.nu = cfg.get("nu", 0.25);
    opt.seed = seed;
    opt.scheme = build_scheme(cfg);
    std::string mode = cfg.get_str("mode", "both");
    opt.mode = mode == "pde" ? BlowupMode::Pde : mode == "control" ? BlowupMode::Control : BlowupMode::Both;
    double theta = cfg.get("theta", 0.5);
    double sigma = cfg.get("sigma", 1.0);
    double t = cfg.get("t", 1.0);
    std::vector<double> eps_list = cfg.require_list("epsilon_list");
    cfg.finish();
    BlowupReport rep = blowup_experiment(f, theta, sigma, t, eps_list, opt);
    w.write("blowup.csv", blowup_csv(rep));
    nlohmann::json j;
    j["exponent"] = rep.exponent;
    j["kappa"] = rep.kappa;
    j["negative"] = rep.negative;
    j["stable"] = rep.stable;
    j["pass"] = rep.pass;
    w.write("report.json", j.dump(2) + "\n");
    return rep.pass;
}

inline bool run_donsker(const RunConfig& cfg, OutputWriter& w, std::uint64_t seed, int workers) {
    HamiltonianSpec spec = make_eikonal_forcing(build_potential(cfg, "f", "cosine"));
    DonskerOptions opt;
    opt.T = cfg.get("T", 1.0);
    opt.nodes_per_cell = static_cast<int>(cfg.get_int("npc", 32));
    opt.workers = workers;
    opt.ks_threshold = cfg.get("ks_threshold", 0.05);
    opt.scheme = build_scheme(cfg);
    std::string x2 = cfg.get_str("x2", "uniform");
    opt.x2 = x2 == "rademacher" ? IncrementDist::Rademacher : IncrementDist::UniformSym;
    double eps = cfg.get("eps", std::pow(2.0, -10));
    double eta = cfg.get("eta", std::pow(2.0, -5));
    long N = cfg.get_int("samples", 2000);
    cfg.finish();
    DonskerReport rep = donsker_experiment(spec, eps, eta, static_cast<int>(N), seed, opt);
    w.write("ks.csv", donsker_ks_csv(rep));
    nlohmann::json j;
    j["coupling_max"] = rep.coupling_max;
    j["coupling_unit"] = rep.coupling_unit;
    j["fitted_c"] = rep.fitted_c;
    j["within_fraction"] = rep.within_fraction;
    j["metric_diag"] = rep.metric_diag;
    j["pass"] = rep.pass;
    w.write("report.json", j.dump(2) + "\n");
    return rep.pass;
}

inline bool run_square_wave(const RunConfig& cfg, OutputWriter& w, std::uint64_t, int) {
    SquareWaveOptions opt;
    opt.T = cfg.get("T", 1.0);
    opt.nodes_per_cell = static_cast<int>(cfg.get_int("npc", 32));
    opt.scheme = build_scheme(cfg);
    std::vector<double> eta = cfg.require_list("eta_list");
    std::vector<double> mu = cfg.require_list("mu_list");
    std::vector<double> eps = cfg.require_list("epsilon_list");
    cfg.finish();
    SquareWaveReport rep = square_wave_experiment(eta, mu, eps, opt);
    w.write("square_wave.csv", square_wave_csv(rep));
    nlohmann::json j;
    j["fitted_c"] = rep.fitted_c;
    j["uniform_ok"] = rep.uniform_ok;
    j["pass"] = rep.pass;
    w.write("report.json", j.dump(2) + "\n");
    return rep.pass;
}

inline bool run_distance(const RunConfig& cfg, OutputWriter& w, std::uint64_t seed, int) {
    HamiltonianSpec spec = build_hamiltonian(cfg);
    double y = cfg.get("y", 0.0);
    double lo = cfg.get("x.min", 1.0);
    double hi = cfg.get("x.max", 3.0);
    long count = cfg.get_int("x.count", 9);
    long n_steps = cfg.get_int("steps", 256);
    long restarts = cfg.get_int("restarts", 4);
    long iters = cfg.get_int("iters", 400);
    cfg.finish();
    std::vector<double> xs = linspace(lo, hi, static_cast<std::size_t>(count));
    std::string csv = "x,y,L,lower,upper,within\n";
    bool pass = true;
    for (double x : xs) {
        DistanceResult r = distance_function(spec, x, y, static_cast<int>(n_steps), static_cast<int>(restarts),
                                             static_cast<int>(iters), seed);
        double d = std::abs(x - y);
        double lob = r.c0 * std::pow(d, r.action_exponent);
        double upb = r.C0 * std::pow(d, r.action_exponent);
        bool in_regime = d >= 1.0;
        bool ok = !in_regime || (r.within_lower && r.within_upper && r.optimizer_ok);
        pass = pass && ok;
        csv += fmt_g17(x);
        csv += ",";
        csv += fmt_g17(y);
        csv += ",";
        csv += fmt_g17(r.value);
        csv += ",";
        csv += fmt_g17(lob);
        csv += ",";
        csv += fmt_g17(upb);
        csv += ",";
        csv += ok ? "1" : "0";
        csv += "\n";
    }
    w.write("distance.csv", csv);
    nlohmann::json j;
    j["pass"] = pass;
    w.write("report.json", j.dump(2) + "\n");
    return pass;
}

inline bool run_paths(const RunConfig& cfg, OutputWriter& w, std::uint64_t seed, int) {
    double T = cfg.get("T", 1.0);
    std::string family = cfg.get_str("family", "takagi");
    PathFamilySpec pf;
    pf.seed = cfg.has("path.seed") ? static_cast<std::uint64_t>(cfg.get_int("path.seed", 0)) : seed;
    pf.eta = cfg.get("path.eta", 1.0 / 32.0);
    pf.theta = cfg.get("path.theta", 0.5);
    pf.depth = static_cast<int>(cfg.get_int("path.depth", 10));
    pf.mu = cfg.get("path.mu", 1.0);
    if (family == "brownian")
        pf.family = PathFamily::BrownianSample;
    else if (family == "takagi")
        pf.family = PathFamily::TakagiLike;
    else if (family == "walk-pair")
        pf.family = PathFamily::RandomWalkPair;
    else if (family == "square-pair")
        pf.family = PathFamily::SquareWavePair;
    else
        throw std::runtime_error("key 'family': unknown path family '" + family + "'");
    cfg.finish();
    std::vector<PiecewiseLinearPath> paths = gen_path(pf, T);
    w.write("path.csv", path_csv(paths.front()));
    if (paths.size() > 1) w.write("path2.csv", path_csv(paths[1]));
    std::vector<double> lags;
    for (int k = 8; k >= 0; --k) lags.push_back(T * std::pow(2.0, -k));
    ModulusTable mod = modulus_table(paths.front(), T, lags);
    std::string mcsv = "lag,omega\n";
    for (std::size_t i = 0; i < mod.lags.size(); ++i) {
        mcsv += fmt_g17(mod.lags[i]);
        mcsv += ",";
        mcsv += fmt_g17(mod.omega[i]);
        mcsv += "\n";
    }
    w.write("modulus.csv", mcsv);

    bool pass = true;
    nlohmann::json j;
    if (pf.family == PathFamily::TakagiLike) {
        auto gen = [&](double eta) { return interpolate(paths.front(), eta); };
        std::vector<double> etas;
        for (int k = 3; k <= std::min(pf.depth, 8); ++k) etas.push_back(std::ldexp(1.0, -k));
        std::vector<double> tg;
        for (double t : {0.25, 0.5, 0.75, 1.0})
            if (t * T <= paths.front().horizon()) tg.push_back(t * T);
        VariationReport vr = variation_check(gen, pf.theta, etas, {1.0}, tg, 0.25, 4.0);
        pass = vr.pass;
        j["variation_pass"] = vr.pass;
        j["variation_c"] = vr.c;
        j["variation_C"] = vr.C;
    }
    j["total_variation"] = paths.front().total_variation(0);
    j["pass"] = pass;
    w.write("report.json", j.dump(2) + "\n");
    return pass;
}

inline int run_verify(const std::filesystem::path& dir) {
    std::filesystem::path mp = dir / "manifest.json";
    std::ifstream f(mp, std::ios::binary);
    if (!f) {
        std::fprintf(stderr, "error: no manifest at %s\n", mp.string().c_str());
        return 1;
    }
    nlohmann::json j;
    f >> j;
    bool ok = true;
    for (const auto& e : j.at("outputs")) {
        std::filesystem::path p = dir / e.at("file").get<std::string>();
        std::ifstream in(p, std::ios::binary);
        if (!in) {
            std::printf("[FAIL] %s missing\n", p.string().c_str());
            ok = false;
            continue;
        }
        std::ostringstream ss;
        ss << in.rdbuf();
        std::string content = ss.str();
        bool match = content.size() == e.at("bytes").get<std::uint64_t>() &&
                     checksum_hex(fnv1a64(content.data(), content.size())) == e.at("fnv1a64").get<std::string>();
        std::printf("[%s] %s\n", match ? "OK" : "FAIL", e.at("file").get<std::string>().c_str());
        ok = ok && match;
    }
    return ok ? 0 : 2;
}

// ---------------------------------------------------------------------------
// entry point
// ---------------------------------------------------------------------------

inline int run(int argc, char** argv) {
    CLI::App app{"pathwise Hamilton-Jacobi homogenization toolkit"};
    app.require_subcommand(1);

    struct Common {
        std::string config_path;
        std::vector<std::string> sets;
        std::string out_dir;
        long seed = -1;
        int workers = 0;
    };
    std::map<std::string, Common> common;
    const std::vector<std::string> names = {"solve",  "effective", "consistency", "rate-sweep", "mild-sweep",
                                            "blowup", "donsker",   "square-wave", "distance",   "paths"};
    for (const auto& name : names) {
        auto* sub = app.add_subcommand(name, "run the " + name + " pipeline");
        Common& c = common[name];
        sub->add_option("--config", c.config_path, "flat key = value config file");
        sub->add_option("--set", c.sets, "override: key=value (repeatable)");
        sub->add_option("--out", c.out_dir, "output directory");
        sub->add_option("--seed", c.seed, "RNG seed (overrides config)");
        sub->add_option("--workers", c.workers, "worker threads, 0 = all cores");
    }
    std::string verify_dir;
    auto* vsub = app.add_subcommand("verify", "re-check the checksums of an output directory");
    vsub->add_option("--out", verify_dir, "output directory holding manifest.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (vsub->parsed()) return run_verify(verify_dir);
        for (const auto& name : names) {
            if (!app.get_subcommand(name)->parsed()) continue;
            const Common& c = common[name];
            RunConfig cfg;
            cfg.subcommand = name;
            if (!c.config_path.empty()) {
                std::ifstream f(c.config_path, std::ios::binary);
                if (!f) throw std::runtime_error("cannot read config file " + c.config_path);
                std::ostringstream ss;
                ss << f.rdbuf();
                cfg.kv = parse_kv_text(ss.str());
            }
            for (const auto& s : c.sets) {
                std::size_t eq = s.find('=');
                if (eq == std::string::npos || eq == 0) throw std::runtime_error("--set expects key=value, got '" + s + "'");
                cfg.kv[trim(s.substr(0, eq))] = trim(s.substr(eq + 1));
            }
            if (c.seed >= 0) cfg.kv["seed"] = std::to_string(c.seed);
            if (!c.out_dir.empty()) cfg.kv["out"] = c.out_dir;

            std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed", 2024));
            int workers = c.workers > 0 ? c.workers : static_cast<int>(cfg.get_int("workers", 0));
            std::string out_dir = cfg.get_str("out", "");
            if (out_dir.empty()) {
                const char* root = std::getenv("PHJ_OUT_ROOT");
                out_dir = (std::filesystem::path(root ? root : "out") / name).string();
            }
            OutputWriter w{out_dir};
            auto t0 = std::chrono::steady_clock::now();
            bool pass = false;
            if (name == "solve")
                pass = run_solve(cfg, w, seed, workers);
            else if (name == "effective")
                pass = run_effective(cfg, w, seed, workers);
            else if (name == "consistency")
                pass = run_consistency(cfg, w, seed, workers);
            else if (name == "rate-sweep")
                pass = run_rate_sweep(cfg, w, seed, workers, false);
            else if (name == "mild-sweep")
                pass = run_rate_sweep(cfg, w, seed, workers, true);
            else if (name == "blowup")
                pass = run_blowup(cfg, w, seed, workers);
            else if (name == "donsker")
                pass = run_donsker(cfg, w, seed, workers);
            else if (name == "square-wave")
                pass = run_square_wave(cfg, w, seed, workers);
            else if (name == "distance")
                pass = run_distance(cfg, w, seed, workers);
            else if (name == "paths")
                pass = run_paths(cfg, w, seed, workers);
            double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            write_manifest(w, cfg, pass, wall);
            std::printf("%s: %s (outputs in %s)\n", name.c_str(), pass ? "pass" : "FAIL", w.dir.string().c_str());
            return pass ? 0 : 2;
        }
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

}  // namespace phj::cli
