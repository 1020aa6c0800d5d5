#include "renorm/cli.hpp"

#include <fmt/format.h>
#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "renorm/area.hpp"
#include "renorm/circle.hpp"
#include "renorm/error.hpp"
#include "renorm/siegel.hpp"
#include "renorm/spectrum.hpp"

namespace renorm::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

enum class Kind { integer, real, integers, reals, theta, thetas, terms, text };

struct Key {
    const char* name;
    Kind kind;
    const char* value;
};

const std::vector<Key>& common_keys() {
    static const std::vector<Key> k{{"out_dir", Kind::text, "out"}, {"cache_dir", Kind::text, ""}};
    return k;
}

const std::map<std::string, std::vector<Key>>& experiment_keys() {
    static const std::map<std::string, std::vector<Key>> k{
        {"tune-blaschke",
         {{"theta", Kind::thetas, "golden:1;golden:2;golden:3"},
          {"tol", Kind::real, "1e-10"},
          {"budget", Kind::integer, "1000000"},
          {"depth", Kind::integer, "12"}}},
        {"renorm-tower",
         {{"theta", Kind::thetas, "golden:1;golden:2;golden:3"},
          {"tol", Kind::real, "1e-10"},
          {"start_level", Kind::integer, "1"},
          {"levels", Kind::integer, "8"},
          {"partition_levels", Kind::integer, "10"},
          {"budget", Kind::integer, "1000000"}}},
        {"siegel-scaling",
         {{"theta", Kind::theta, "golden:1"},
          {"eps_re", Kind::real, "0"},
          {"eps_im", Kind::real, "0"},
          {"levels", Kind::integer, "18"},
          {"budget", Kind::integer, "1000000"}}},
        {"renorm-converge",
         {{"theta", Kind::theta, "golden:1"},
          {"eps_re", Kind::real, "0"},
          {"eps_im", Kind::real, "0"},
          {"from", Kind::integer, "4"},
          {"depth", Kind::integer, "12"},
          {"gridsize", Kind::integer, "64"},
          {"budget", Kind::integer, "1000000"}}},
        {"universality",
         {{"eps_re", Kind::real, "0.02"},
          {"eps_im", Kind::real, "0"},
          {"depths", Kind::integers, "6,8,10"},
          {"gridsize", Kind::integer, "64"}}},
        {"gauss-expansion",
         {{"theta", Kind::theta, "golden:1"},
          {"m_max", Kind::integer, "10"},
          {"h", Kind::real, "1e-7"},
          {"convergent_depth", Kind::integer, "25"},
          {"golden_max", Kind::integer, "10"}}},
        {"spectrum",
         {{"theta", Kind::theta, "golden:1"},
          {"d", Kind::integers, "8,12,16"},
          {"h", Kind::reals, "1e-5,5e-6"},
          {"level", Kind::integer, "10"},
          {"newton_steps", Kind::integer, "10"},
          {"cutoff", Kind::real, "5e-3"}}},
        {"julia-area",
         {{"prefix", Kind::terms, ""},
          {"N", Kind::integer, "2"},
          {"j", Kind::integers, "1,2,3,4"},
          {"samples", Kind::integer, "1000000"},
          {"seed", Kind::integer, "1"},
          {"maxiter", Kind::integer, "10000"}}},
        {"boundary-density",
         {{"theta", Kind::theta, "golden:1"},
          {"eps", Kind::reals, "0.1,0.05,0.02,0.01"},
          {"samples", Kind::integer, "1000000"},
          {"seed", Kind::integer, "7"},
          {"maxiter", Kind::integer, "2000"},
          {"boundary_points", Kind::integer, "10000"}}},
        {"boundary-export",
         {{"theta", Kind::theta, "golden:1"},
          {"eps_re", Kind::real, "0"},
          {"eps_im", Kind::real, "0"},
          {"m", Kind::integer, "10000"}}},
    };
    return k;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double to_real(const std::string& key, const std::string& s) {
    double v = 0;
    const auto t = trim(s);
    const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || p != t.data() + t.size() || !std::isfinite(v))
        throw config_error("cli", "key '" + key + "': '" + s + "' is not a number");
    return v;
}

std::int64_t to_integer(const std::string& key, const std::string& s) {
    // accepts 1e6-style literals when they are exact integers
    const double v = to_real(key, s);
    if (v != std::floor(v) || std::abs(v) > 9.0e15)
        throw config_error("cli", "key '" + key + "': '" + s + "' is not an integer");
    return static_cast<std::int64_t>(v);
}

std::vector<std::int64_t> parse_terms(const std::string& key, const std::string& s) {
    std::vector<std::int64_t> out;
    if (trim(s).empty()) return out;
    for (const auto& t : split(s, ',')) {
        const auto v = to_integer(key, t);
        if (v < 1) throw config_error("cli", "key '" + key + "': continued-fraction terms must be positive");
        out.push_back(v);
    }
    return out;
}

void validate(const std::string& key, Kind kind, const std::string& value) {
    switch (kind) {
        case Kind::integer: to_integer(key, value); break;
        case Kind::real: to_real(key, value); break;
        case Kind::integers:
            for (const auto& t : split(value, ',')) to_integer(key, t);
            break;
        case Kind::reals:
            for (const auto& t : split(value, ',')) to_real(key, t);
            break;
        case Kind::theta: parse_theta(value); break;
        case Kind::thetas:
            for (const auto& t : split(value, ';')) parse_theta(t);
            break;
        case Kind::terms: parse_terms(key, value); break;
        case Kind::text: break;
    }
}

std::string g17(double x) { return fmt::format("{:.17g}", x); }

class Csv {
public:
    explicit Csv(std::initializer_list<const char*> header) {
        bool first = true;
        for (const char* h : header) {
            if (!first) s_ += ',';
            s_ += h;
            first = false;
        }
        s_ += '\n';
    }

    template <typename... T>
    void row(const T&... cells) {
        bool first = true;
        ((s_ += (first ? "" : ","), s_ += cell(cells), first = false), ...);
        s_ += '\n';
    }

    std::string str() const { return s_; }

private:
    static std::string cell(double x) { return g17(x); }
    static std::string cell(bool b) { return b ? "1" : "0"; }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(std::int64_t x) { return std::to_string(x); }
    static std::string cell(std::uint64_t x) { return std::to_string(x); }
    static std::string cell(const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    }
    static std::string cell(const char* s) { return cell(std::string(s)); }

    std::string s_;
};

std::string json_text(const ojson& j) { return j.dump(2) + "\n"; }

ojson complex_json(cplx z) { return ojson::array({z.real(), z.imag()}); }

std::int64_t positive(const ExperimentConfig& c, const std::string& key) {
    const auto v = c.integer(key);
    if (v < 1) throw config_error("cli", "key '" + key + "' must be positive");
    return v;
}

int small_positive(const ExperimentConfig& c, const std::string& key, int max = 1000) {
    const auto v = positive(c, key);
    if (v > max) throw config_error("cli", "key '" + key + "' must be at most " + std::to_string(max));
    return static_cast<int>(v);
}

cplx eps_of(const ExperimentConfig& c) { return {c.real("eps_re"), c.real("eps_im")}; }

std::string canonical(const ContinuedFraction& cf) {
    std::string s;
    for (auto t : cf.terms) s += std::to_string(t) + ",";
    return s + (cf.infinite ? "inf" : "");
}

// Orbit cache: <cache_dir>/orbit-<sha256>.csv with header k,re,im and one row per iterate.
// The key hashes the version, the theta terms, eps and the orbit length, so a version bump invalidates it.
std::vector<cplx> cached_orbit(const ExperimentConfig& c, const SiegelMap& f, std::int64_t n,
                               std::int64_t budget) {
    const auto& dir = c.get("cache_dir");
    if (dir.empty()) return critical_orbit(f, n, budget);
    const auto key = sha256_hex(fmt::format("{}|{}|{},{}|{}", kVersion, canonical(f.cf), g17(f.eps.real()),
                                            g17(f.eps.imag()), n));
    const fs::path path = fs::path(dir) / ("orbit-" + key + ".csv");

    if (std::ifstream in(path, std::ios::binary); in) {
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string text = ss.str();
        const std::string header = "k,re,im\n";
        std::vector<cplx> orbit;
        bool ok = text.compare(0, header.size(), header) == 0;
        const char* p = text.data() + header.size();
        const char* end = text.data() + text.size();
        // k,re,im per line; anything unexpected falls through to recomputation
        auto field = [&](double& v, char sep) {
            const auto r = std::from_chars(p, end, v);
            if (r.ec != std::errc() || r.ptr == end || *r.ptr != sep) return false;
            p = r.ptr + 1;
            return true;
        };
        while (ok && p < end) {
            double k = 0, re = 0, im = 0;
            ok = field(k, ',') && field(re, ',') && field(im, '\n') && k == static_cast<double>(orbit.size());
            orbit.emplace_back(re, im);
        }
        if (ok && static_cast<std::int64_t>(orbit.size()) == n + 1) return orbit;
    }

    auto orbit = critical_orbit(f, n, budget);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw config_error("cli", "cannot create cache directory " + dir);
    std::string text = "k,re,im\n";
    for (std::size_t k = 0; k < orbit.size(); ++k)
        text += fmt::format("{},{},{}\n", k, g17(orbit[k].real()), g17(orbit[k].imag()));
    const fs::path tmp = fs::path(dir) / ("." + path.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        out << text;
        if (!out) throw config_error("cli", "cannot write cache file " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) throw config_error("cli", "cannot write cache file " + path.string());
    return orbit;
}

ojson spectrum_json(const SpectrumReport& r) {
    ojson j;
    j["dimension"] = r.dimension;
    j["unstable"] = r.unstable;
    j["gap"] = r.gap;
    j["eigenvalues"] = ojson::array();
    for (auto z : r.eigenvalues) j["eigenvalues"].push_back(complex_json(z));
    j["moduli"] = r.moduli;
    return j;
}

ojson fit_json(const GeometricFit& f) { return {{"rate", f.rate}, {"amplitude", f.amplitude}, {"residual", f.residual}}; }

// experiments

std::vector<OutputFile> tune_blaschke(const ExperimentConfig& c) {
    const double tol = c.real("tol");
    const auto budget = positive(c, "budget");
    const int depth = small_positive(c, "depth", 60);
    Csv csv({"theta_spec", "theta", "tau", "rho", "residual", "iterations", "mode_locked", "depth", "rho_depth",
             "error_depth", "partial_depth"});
    for (const auto& spec : split(c.get("theta"), ';')) {
        const double theta = cf_value(parse_theta(spec));
        const auto t = tune_tau(theta, tol, budget);
        const auto r = rotation_number(blaschke_lift(t.tau), depth, budget);
        csv.row(spec, theta, t.tau, t.rho.value, t.residual, t.iterations, t.mode_locked, depth, r.value,
                std::abs(r.value - theta), r.partial);
    }
    return {{"tune.csv", csv.str()}};
}

std::vector<OutputFile> renorm_tower(const ExperimentConfig& c) {
    const double tol = c.real("tol");
    const auto budget = positive(c, "budget");
    const int start = small_positive(c, "start_level", 40);
    const int levels = small_positive(c, "levels", 40);
    const int plevels = small_positive(c, "partition_levels", 20);
    Csv heights({"theta_spec", "i", "level", "height", "term", "match"});
    Csv parts({"theta_spec", "n", "arcs", "expected_arcs", "total_length", "max_length", "min_length", "disjoint",
               "refines_previous"});
    for (const auto& spec : split(c.get("theta"), ';')) {
        const auto cf = parse_theta(spec);
        const int need = std::max(start + levels + 1, plevels + 1);
        if (static_cast<int>(cf.terms.size()) < need)
            throw config_error("cli", "theta '" + spec + "' needs at least " + std::to_string(need) + " terms");
        const auto cv = convergents(cf, std::max(start, plevels) + 1);
        const auto t = tune_tau(cf_value(cf), tol, budget);
        const auto f = blaschke_lift(t.tau);

        // the level-n pair has rotation number G^{n+1}(theta), whose first term is a_{n+2}
        auto z = pre_renormalize(f, cv, start);
        for (int i = 0; i < levels; ++i) {
            const auto h = height(z);
            const auto term = cf.terms[static_cast<std::size_t>(start + 1 + i)];
            if (h.infinite()) {
                heights.row(spec, i, start + i, std::string("inf"), term, false);
                break;
            }
            heights.row(spec, i, start + i, *h.value, term, *h.value == term);
            if (i + 1 < levels) z = renormalize_pair(z);
        }

        std::optional<Partition> prev;
        for (int n = 1; n <= plevels; ++n) {
            const auto p = dynamical_partition(f, 0.0, cv, n);
            const bool ref = prev ? refines(p, *prev) : true;
            parts.row(spec, n, static_cast<std::int64_t>(p.arcs.size()), cv.q[n + 1] + cv.q[n], p.total_length,
                      p.max_length, p.min_length, p.disjoint, ref);
            prev = p;
        }
    }
    return {{"heights.csv", heights.str()}, {"partitions.csv", parts.str()}};
}

std::vector<OutputFile> siegel_scaling(const ExperimentConfig& c) {
    const auto cf = parse_theta(c.get("theta"));
    const auto f = make_map(cf, eps_of(c));
    const int levels = small_positive(c, "levels", 40);
    const auto budget = positive(c, "budget");
    const auto rep = scaling_ratios(f, levels, budget);
    const auto cv = convergents(cf, levels + 1);

    Csv scaling({"n", "q_n", "d", "s", "ratio_re", "ratio_im"});
    for (std::size_t i = 0; i < rep.level.size(); ++i)
        scaling.row(rep.level[i], cv.q[rep.level[i]], rep.d[i], rep.s[i], rep.ratio[i].real(), rep.ratio[i].imag());

    // distinct convergent denominators q_0 = 1, q_1, ... up to the budget
    std::vector<std::int64_t> denominators{1};
    for (std::int64_t prev = 1, q = cf.terms[0], k = 1; q <= budget;) {
        if (q != denominators.back()) denominators.push_back(q);
        if (k >= static_cast<std::int64_t>(cf.terms.size())) break;
        std::int64_t next = 0;
        if (__builtin_mul_overflow(cf.terms[static_cast<std::size_t>(k++)], q, &next)) break;
        next += prev;
        prev = q;
        q = next;
    }
    const auto orbit = cached_orbit(c, f, budget, budget);
    const auto ret = closest_returns(orbit);
    Csv returns({"i", "time", "distance", "denominator", "match"});
    const auto rows = std::max(ret.times.size(), denominators.size());
    for (std::size_t i = 0; i < rows; ++i) {
        const std::int64_t t = i < ret.times.size() ? ret.times[i] : -1;
        const double dist = i < ret.distances.size() ? ret.distances[i] : std::nan("");
        const std::int64_t q = i < denominators.size() ? denominators[i] : -1;
        returns.row(static_cast<std::int64_t>(i), t, dist, q, t == q);
    }

    ojson j;
    j["theta"] = c.get("theta");
    j["levels"] = levels;
    j["budget"] = budget;
    j["limit"] = rep.limit;
    j["s_fit"] = fit_json(rep.s_fit);
    j["ratio_fit"] = fit_json(rep.ratio_fit);
    j["ratio_limit"] = complex_json(rep.ratio.back());
    return {{"scaling.csv", scaling.str()}, {"returns.csv", returns.str()}, {"scaling.json", json_text(j)}};
}

std::vector<OutputFile> renorm_converge(const ExperimentConfig& c) {
    const auto f = make_map(parse_theta(c.get("theta")), eps_of(c));
    const int from = small_positive(c, "from", 30);
    const int depth = small_positive(c, "depth", 30);
    const int grid = small_positive(c, "gridsize", 4096);
    const auto budget = positive(c, "budget");
    if (depth < from + 2) throw config_error("cli", "depth must exceed from by at least 2");
    Csv csv({"n", "d_n", "dropped", "samples"});
    std::vector<int> ns;
    std::vector<double> ds;
    auto P = mcm_renormalize(f, from, budget).as_pair();
    for (int n = from; n <= depth; ++n) {
        auto Q = mcm_renormalize(f, n + 1, budget).as_pair();
        const auto r = pair_distance_report(P, Q, grid);
        csv.row(n, r.value, r.dropped, r.samples);
        ns.push_back(n);
        ds.push_back(r.value);
        P = std::move(Q);
    }
    const auto fit = geometric_fit(ns, ds);
    ojson j;
    j["theta"] = c.get("theta");
    j["from"] = from;
    j["depth"] = depth;
    j["gridsize"] = grid;
    j["fit"] = fit_json(fit);
    return {{"converge.csv", csv.str()}, {"converge.json", json_text(j)}};
}

std::vector<OutputFile> universality(const ExperimentConfig& c) {
    const cplx eps = eps_of(c);
    const int grid = small_positive(c, "gridsize", 4096);
    Csv csv({"depth", "eps_re", "eps_im", "cross", "within", "within_eps", "orbit_max", "pass"});
    for (auto d : c.integers("depths")) {
        if (d < 2 || d > 20) throw config_error("cli", "depths must lie in [2, 20]");
        const auto r = universality_check(eps, static_cast<int>(d), grid);
        csv.row(r.depth, eps.real(), eps.imag(), r.cross, r.within, r.within_eps, r.orbit_max, r.pass);
    }
    return {{"universality.csv", csv.str()}};
}

std::vector<OutputFile> gauss(const ExperimentConfig& c) {
    const auto cf = parse_theta(c.get("theta"));
    const int m_max = small_positive(c, "m_max", 40);
    const double h = c.real("h");
    const int cdepth = small_positive(c, "convergent_depth", 80);
    const int gmax = small_positive(c, "golden_max", 1000);

    Csv g({"m", "Lambda", "delta", "scaled", "fd", "product", "ratio", "noise_limited"});
    for (int m = 1; m <= m_max; ++m) {
        const auto e = gauss_expansion(cf, m, h);
        g.row(m, e.Lambda, e.delta, e.scaled, e.fd, e.product, e.ratio, e.noise_limited);
    }

    if (static_cast<int>(cf.terms.size()) < cdepth)
        throw config_error("cli", "theta has fewer than convergent_depth terms");
    const auto cv = convergents(cf, cdepth);
    Csv conv({"n", "a_n", "p_n", "q_n", "determinant", "expected"});
    for (int n = 1; n <= cdepth; ++n) {
        // p_n q_{n-1} - p_{n-1} q_n = (-1)^{n-1}, exact in __int128
        const __int128 det = static_cast<__int128>(cv.p[n]) * cv.q[n - 1] - static_cast<__int128>(cv.p[n - 1]) * cv.q[n];
        conv.row(n, cf.terms[static_cast<std::size_t>(n - 1)], cv.p[n], cv.q[n], static_cast<std::int64_t>(det),
                 std::int64_t{n % 2 ? 1 : -1});
    }

    Csv id({"N", "theta_N", "residual"});
    for (int N = 1; N <= gmax; ++N) {
        const double t = theta_N(N);
        id.row(N, t, std::abs(t - 1.0 / (N + t)));
    }
    return {{"gauss.csv", g.str()}, {"convergents.csv", conv.str()}, {"golden_identity.csv", id.str()}};
}

std::vector<OutputFile> spectrum(const ExperimentConfig& c) {
    if (c.get("theta") != "golden:1")
        throw config_error("cli", "spectrum is implemented for theta = golden:1 only");
    const auto f = make_map(parse_theta(c.get("theta")));
    const int level = small_positive(c, "level", 20);
    const int steps = small_positive(c, "newton_steps", 100);
    const double cutoff = c.real("cutoff");
    if (!(cutoff > 0 && cutoff < 1)) throw config_error("cli", "cutoff must lie in (0, 1)");
    const auto P = mcm_renormalize(f, level);

    ojson out;
    out["theta"] = c.get("theta");
    out["level"] = level;
    out["runs"] = ojson::array();
    for (auto d : c.integers("d")) {
        if (d < 2 || d > 40) throw config_error("cli", "d must lie in [2, 40]");
        const auto start = project_pair(P, static_cast<int>(d));
        const auto fp = locate_fixed_point(start, steps, 1e-6, cutoff);
        const auto comm = commutator_coefficients(fp.c);
        const auto vmu = multiplier_direction(fp.c, level);
        ojson run;
        run["d"] = d;
        run["projection_residual"] = start.residual;
        run["newton_residuals"] = fp.residuals;
        run["newton_steps"] = fp.steps;
        run["rho"] = fp.c.rho;
        run["multiplier"] = complex_json(fp.c.multiplier());
        run["commutator"] = {std::abs(comm(0)), std::abs(comm(1))};
        run["by_h"] = ojson::array();
        for (double h : c.reals("h")) {
            const auto an = analyze_spectrum(fp.c, h, vmu);
            ojson r;
            r["h"] = h;
            r["richardson"] = an.jac.richardson;
            r["linear_part"] = conj_linear_part(an.jac.J).linear_part;
            r["full"] = spectrum_json(an.full);
            r["restricted"] = spectrum_json(an.restricted);
            r["pinned"] = spectrum_json(an.pinned);
            r["overlap"] = an.overlap;
            r["multiplier_gain"] = an.multiplier_gain;
            run["by_h"].push_back(r);
        }
        out["runs"].push_back(run);
    }
    return {{"spectrum.json", json_text(out)}};
}

std::vector<OutputFile> julia_area(const ExperimentConfig& c) {
    const auto prefix = parse_terms("prefix", c.get("prefix"));
    const auto N = positive(c, "N");
    if (N > 1000) throw config_error("cli", "N must be at most 1000");
    const auto samples = positive(c, "samples");
    const auto seed = static_cast<std::uint64_t>(c.integer("seed"));
    const auto maxiter = positive(c, "maxiter");
    ContinuedFraction inf{prefix};
    for (int i = 0; i < 60; ++i) inf.terms.push_back(N);
    const double theta_inf = cf_value(inf);
    std::vector<double> thetas;
    const auto js = c.integers("j");
    for (auto j : js) {
        if (j < 1 || j > 40) throw config_error("cli", "j must lie in [1, 40]");
        thetas.push_back(theta_j(prefix, N, static_cast<int>(j)));
    }
    const auto est = area_differences(theta_inf, thetas, samples, seed, maxiter);
    Csv csv({"j", "theta_j", "theta_inf", "estimate", "stderr", "samples", "hits", "seed", "maxiter"});
    for (std::size_t i = 0; i < est.size(); ++i)
        csv.row(js[i], est[i].theta_j, theta_inf, est[i].value, est[i].stderr_, est[i].samples, est[i].hits,
                est[i].seed, est[i].maxiter);
    return {{"area.csv", csv.str()}};
}

std::vector<OutputFile> boundary_density(const ExperimentConfig& c) {
    const auto f = make_map(parse_theta(c.get("theta")));
    const auto samples = positive(c, "samples");
    const auto seed = static_cast<std::uint64_t>(c.integer("seed"));
    const auto maxiter = positive(c, "maxiter");
    const auto m = positive(c, "boundary_points");
    if (m < 10000) throw config_error("cli", "boundary_points must be at least 1e4");
    const auto curve = boundary_curve(f, cached_orbit(c, f, m - 1, std::max<std::int64_t>(m, 1000000)));
    const auto prof = density_near_boundary(f.theta, curve.points, c.reals("eps"), samples, seed, maxiter);
    Csv csv({"eps", "density", "stderr", "samples", "outside", "seed", "maxiter", "below_resolution"});
    for (const auto& e : prof.entries)
        csv.row(e.eps, e.density, e.stderr_, e.samples, e.outside, prof.seed, prof.maxiter, e.below_resolution);
    return {{"density.csv", csv.str()}};
}

std::vector<OutputFile> boundary_export(const ExperimentConfig& c) {
    const auto f = make_map(parse_theta(c.get("theta")), eps_of(c));
    const auto m = positive(c, "m");
    if (m < 8) throw config_error("cli", "m must be at least 8");
    const auto curve = boundary_curve(f, cached_orbit(c, f, m - 1, std::max<std::int64_t>(m, 1000000)));
    Csv csv({"k", "angle", "re", "im"});
    for (std::size_t i = 0; i < curve.points.size(); ++i)
        csv.row(curve.index[i], curve.angle[i], curve.points[i].real(), curve.points[i].imag());
    ojson j;
    j["theta"] = c.get("theta");
    j["m"] = m;
    j["turning"] = curve.turning;
    j["max_gap"] = curve.max_gap;
    j["self_intersecting"] = curve.self_intersecting;
    return {{"boundary.csv", csv.str()}, {"boundary.json", json_text(j)}};
}

void write_atomic(const fs::path& dir, const std::string& name, const std::string& content) {
    const fs::path tmp = dir / ("." + name + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        out << content;
        if (!out) throw config_error("cli", "cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, dir / name, ec);
    if (ec) throw config_error("cli", "cannot write " + (dir / name).string());
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::config: return kConfigError;
        case ErrorKind::numerical: return kNumericalError;
        case ErrorKind::budget: return kBudgetError;
    }
    return kNumericalError;
}

}  // namespace

const std::vector<std::string>& experiments() {
    static const std::vector<std::string> names{"tune-blaschke",   "renorm-tower",   "siegel-scaling",
                                                "renorm-converge", "universality",   "gauss-expansion",
                                                "spectrum",        "julia-area",     "boundary-density",
                                                "boundary-export"};
    return names;
}

const std::string& ExperimentConfig::get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw config_error("cli", "missing key '" + key + "'");
    return it->second;
}

std::int64_t ExperimentConfig::integer(const std::string& key) const { return to_integer(key, get(key)); }

double ExperimentConfig::real(const std::string& key) const { return to_real(key, get(key)); }

std::vector<std::int64_t> ExperimentConfig::integers(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& t : split(get(key), ',')) out.push_back(to_integer(key, t));
    return out;
}

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& t : split(get(key), ',')) out.push_back(to_real(key, t));
    return out;
}

ContinuedFraction parse_theta(const std::string& raw) {
    const auto spec = trim(raw);
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw config_error("cli", "malformed theta '" + raw + "'");
    const auto kind = spec.substr(0, colon);
    const auto body = spec.substr(colon + 1);
    if (kind == "golden") {
        const auto N = to_integer("theta", body);
        if (N < 1 || N > 1000) throw config_error("cli", "golden:N needs 1 <= N <= 1000");
        return golden_cf(static_cast<int>(N), 60);
    }
    if (kind == "cf") {
        auto parts = split(body, ',');
        ContinuedFraction cf;
        if (!parts.empty() && parts.back() == "inf") {
            cf.infinite = true;
            parts.pop_back();
        }
        for (const auto& p : parts) {
            const auto v = to_integer("theta", p);
            if (v < 1) throw config_error("cli", "malformed theta '" + raw + "': terms must be positive");
            cf.terms.push_back(v);
        }
        if (cf.terms.empty()) throw config_error("cli", "malformed theta '" + raw + "': no terms");
        try {
            cf.validate();
        } catch (const Error& e) {
            throw config_error("cli", "malformed theta '" + raw + "': " + e.what());
        }
        return cf;
    }
    if (kind == "rational") {
        const auto slash = body.find('/');
        if (slash == std::string::npos) throw config_error("cli", "malformed theta '" + raw + "'");
        const auto p = to_integer("theta", body.substr(0, slash));
        const auto q = to_integer("theta", body.substr(slash + 1));
        if (p < 1 || q <= p) throw config_error("cli", "malformed theta '" + raw + "': need 0 < p < q");
        return cf_from_rational(p, q);
    }
    throw config_error("cli", "malformed theta '" + raw + "'");
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> out;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("cli", "config line " + std::to_string(lineno) + ": expected key = value");
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw config_error("cli", "config line " + std::to_string(lineno) + ": empty key");
        if (out.count(key)) throw config_error("cli", "config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

ExperimentConfig make_config(const std::string& experiment, const std::map<std::string, std::string>& file,
                             const std::map<std::string, std::string>& overrides) {
    const auto& table = experiment_keys();
    const auto it = table.find(experiment);
    if (it == table.end()) throw config_error("cli", "unknown experiment '" + experiment + "'");
    std::map<std::string, Kind> kinds;
    ExperimentConfig c;
    c.experiment = experiment;
    for (const auto* keys : {&common_keys(), &it->second})
        for (const auto& k : *keys) {
            kinds[k.name] = k.kind;
            c.values[k.name] = k.value;
        }
    for (const auto* src : {&file, &overrides})
        for (const auto& [k, v] : *src) {
            if (k == "experiment") {
                if (v != experiment) throw config_error("cli", "config is for experiment '" + v + "'");
                continue;
            }
            if (!kinds.count(k)) throw config_error("cli", "unknown key '" + k + "' for " + experiment);
            c.values[k] = v;
        }
    for (const auto& [k, v] : c.values) validate(k, kinds[k], v);
    return c;
}

std::vector<OutputFile> compute(const ExperimentConfig& c) {
    const auto& e = c.experiment;
    if (e == "tune-blaschke") return tune_blaschke(c);
    if (e == "renorm-tower") return renorm_tower(c);
    if (e == "siegel-scaling") return siegel_scaling(c);
    if (e == "renorm-converge") return renorm_converge(c);
    if (e == "universality") return universality(c);
    if (e == "gauss-expansion") return gauss(c);
    if (e == "spectrum") return spectrum(c);
    if (e == "julia-area") return julia_area(c);
    if (e == "boundary-density") return boundary_density(c);
    if (e == "boundary-export") return boundary_export(c);
    throw config_error("cli", "unknown experiment '" + e + "'");
}

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw numerical_error("cli", "sha256 failed");
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

RunManifest run(const ExperimentConfig& config) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto outputs = compute(config);
    RunManifest m;
    m.config = config;
    m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const fs::path dir = config.get("out_dir");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw config_error("cli", "cannot create output directory " + dir.string());
    for (const auto& o : outputs) {
        write_atomic(dir, o.name, o.content);
        m.files.push_back({o.name, sha256_hex(o.content), o.content.size()});
    }

    ojson j;
    j["experiment"] = config.experiment;
    j["version"] = m.version;
    j["config"] = ojson::object();
    for (const auto& [k, v] : config.values) j["config"][k] = v;
    j["wall_clock_seconds"] = m.wall_clock;
    j["files"] = ojson::array();
    for (const auto& f : m.files) j["files"].push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    write_atomic(dir, "manifest.json", json_text(j));
    return m;
}

int main(int argc, char** argv) {
    CLI::App app{"Renormalization experiments for circle maps and Siegel disks"};
    std::string experiment, config_path;
    app.add_option("experiment", experiment, "one of: " + [] {
        std::string s;
        for (const auto& e : experiments()) s += (s.empty() ? "" : ", ") + e;
        return s;
    }())->required();
    app.add_option("--config", config_path, "flat key = value file");
    app.set_version_flag("--version", kVersion);
    app.footer("Any config key can be overridden with --key value or --key=value.");
    app.allow_extras();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    try {
        std::map<std::string, std::string> file, overrides;
        if (!config_path.empty()) {
            std::ifstream in(config_path, std::ios::binary);
            if (!in) throw config_error("cli", "cannot read config " + config_path);
            std::stringstream ss;
            ss << in.rdbuf();
            file = parse_config_text(ss.str());
        }
        const auto rest = app.remaining();
        for (std::size_t i = 0; i < rest.size(); ++i) {
            const auto& a = rest[i];
            if (a.rfind("--", 0) != 0 || a.size() < 3) throw config_error("cli", "unexpected argument '" + a + "'");
            std::string key = a.substr(2), value;
            if (const auto eq = key.find('='); eq != std::string::npos) {
                value = key.substr(eq + 1);
                key.erase(eq);
            } else {
                if (i + 1 >= rest.size()) throw config_error("cli", "missing value for --" + key);
                value = rest[++i];
            }
            std::replace(key.begin(), key.end(), '-', '_');
            if (overrides.count(key)) throw config_error("cli", "duplicate override --" + key);
            overrides[key] = value;
        }
        const auto config = make_config(experiment, file, overrides);
        const auto m = run(config);
        std::cout << fmt::format("{}: wrote {} files to {} in {:.2f} s\n", experiment, m.files.size() + 1,
                                 config.get("out_dir"), m.wall_clock);
        return kOk;
    } catch (const Error& e) {
        std::cerr << "renormlab: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "renormlab: " << e.what() << "\n";
        return kNumericalError;
    }
}

}  // namespace renorm::cli
