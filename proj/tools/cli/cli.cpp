#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>

#include "hyperangle/density.hpp"
#include "hyperangle/empirical.hpp"
#include "hyperangle/errors.hpp"
#include "hyperangle/lattice.hpp"

#ifndef HYPERANGLE_VERSION
#define HYPERANGLE_VERSION "0.0.0"
#endif

namespace hyperangle::cli {

const char* version() { return HYPERANGLE_VERSION; }

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) parts.push_back(cur);
    return parts;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("cannot read " + what + " from '" + s + "'");
    }
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
    std::vector<double> v;
    for (const auto& p : split(s, ',')) v.push_back(to_double(p, what));
    if (v.empty()) throw UsageError(what + " is empty");
    return v;
}

// "a,b,c" or "lo:hi:count" (count points, both ends included)
std::vector<double> parse_grid(const std::string& s, const std::string& what) {
    if (s.find(':') == std::string::npos) return parse_list(s, what);
    const auto p = split(s, ':');
    if (p.size() != 3) throw UsageError(what + " range must read lo:hi:count");
    const double lo = to_double(p[0], what), hi = to_double(p[1], what);
    const double cnt = to_double(p[2], what);
    if (cnt < 2 || cnt != std::floor(cnt)) throw UsageError(what + " count must be an integer >= 2");
    const int c = static_cast<int>(cnt);
    std::vector<double> g(c);
    for (int i = 0; i < c; ++i) g[i] = lo + (hi - lo) * i / (c - 1.0);
    return g;
}

std::vector<double> positive_increasing(std::vector<double> g, const std::string& what) {
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!(g[i] > 0.0)) throw UsageError(what + " values must be positive");
        if (i > 0 && !(g[i] > g[i - 1])) throw UsageError(what + " must be increasing");
    }
    return g;
}

std::pair<std::string, double> parse_kv(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("expected key=value, got '" + s + "'");
    return {s.substr(0, eq), to_double(s.substr(eq + 1), s.substr(0, eq))};
}

Cone parse_cone(const std::vector<std::string>& parts) {
    std::optional<std::vector<double>> axis;
    std::optional<double> theta;
    for (const auto& p : parts) {
        if (p.rfind("axis=", 0) == 0) axis = parse_list(p.substr(5), "cone axis");
        else if (p.rfind("theta=", 0) == 0) theta = to_double(p.substr(6), "cone theta");
        else throw UsageError("unknown cone field '" + p + "'");
    }
    if (!axis || !theta) throw UsageError("--cone needs axis=... and theta=...");
    return Cone(*axis, *theta);
}

DistanceSpectrum spectrum_from_pairs(const std::vector<std::pair<double, std::uint64_t>>& pairs,
                                     const std::string& source) {
    DistanceSpectrum s;
    s.source = source;
    for (auto [t, m] : pairs) s.entries.push_back({t, m, std::cosh(t)});
    std::sort(s.entries.begin(), s.entries.end(), [](auto& a, auto& b) { return a.t < b.t; });
    s.validate();
    return s;
}

std::uint64_t to_multiplicity(const std::string& s) {
    const double m = to_double(s, "multiplicity");
    if (m < 1 || m != std::floor(m)) throw UsageError("multiplicity must be a positive integer");
    return static_cast<std::uint64_t>(m);
}

// "t:m,t:m,..."
DistanceSpectrum parse_synthetic(const std::string& s) {
    std::vector<std::pair<double, std::uint64_t>> v;
    for (const auto& item : split(s, ',')) {
        const auto p = split(item, ':');
        if (p.size() > 2 || p.empty()) throw UsageError("synthetic entries read t or t:multiplicity");
        v.emplace_back(to_double(p[0], "distance"), p.size() == 2 ? to_multiplicity(p[1]) : 1);
    }
    return spectrum_from_pairs(v, "synthetic");
}

// CSV with rows t,multiplicity; '#' comments and a header row are skipped.
DistanceSpectrum load_spectrum(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open spectrum file '" + path + "'");
    std::vector<std::pair<double, std::uint64_t>> v;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("t,", 0) == 0) continue;
        const auto p = split(line, ',');
        if (p.size() != 2) throw ParseError("spectrum rows read t,multiplicity", lineno);
        try {
            v.emplace_back(to_double(p[0], "distance"), to_multiplicity(p[1]));
        } catch (const UsageError& e) {
            throw ParseError(e.what(), lineno);
        }
    }
    return spectrum_from_pairs(v, path);
}

struct Global {
    std::string config;
    int threads = 0;
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_subdiv = 200;
    std::vector<std::string> argv;

    QuadSettings quad() const { return {abs_tol, rel_tol, max_subdiv}; }
};

struct Source {
    std::string in;
    std::string backend;
    int n = 2;
    double q = 0.0;
    std::uint64_t max_points = 50'000'000;

    void add(CLI::App* app) {
        app->add_option("--in", in, "orbit file (csv-v1)");
        app->add_option("--backend", backend, "generate instead of loading: lorentz or psl2z")
            ->check(CLI::IsMember({"lorentz", "psl2z"}));
        app->add_option("--n", n, "dimension for the lorentz backend");
        app->add_option("--q", q, "norm cutoff Q for generation");
        app->add_option("--max-points", max_points, "resource cap for generation");
    }

    OrbitDataset load(int threads) const {
        if (!in.empty() && !backend.empty()) throw UsageError("use either --in or --backend, not both");
        if (!in.empty()) return load_orbit(in);
        if (backend.empty()) throw UsageError("an orbit is required: pass --in or --backend");
        if (!(q > 0.0)) throw UsageError("--q is required with --backend");
        EnumerateOptions opt{max_points, threads};
        if (backend == "psl2z") {
            if (n != 2) throw UsageError("the psl2z backend has n = 2");
            return psl2z_orbit(q, opt);
        }
        return enumerate_lorentz(n, q, opt);
    }
};

class Report {
public:
    Report(const Global& g, const std::string& command, const CLI::App& root) {
        meta_ << "# hyperangle " << version() << "\n";
        meta_ << "# command: " << command << "\n";
        std::string args;
        for (const auto& a : g.argv) args += (args.empty() ? "" : " ") + a;
        meta_ << "# args: " << args << "\n";
        // effective settings: global options plus those of the invoked command
        const CLI::App* cur = &root;
        while (cur) {
            for (const CLI::Option* o : cur->get_options()) {
                const std::string name = o->get_single_name();
                if (name == "help" || name == "version" || name == "config") continue;
                std::string value;
                if (o->count() > 0) {
                    const auto& res = o->results();
                    const std::size_t take = std::min<std::size_t>(res.size(), std::max(1, o->get_items_expected_max()));
                    for (std::size_t i = res.size() - take; i < res.size(); ++i)
                        value += (value.empty() ? "" : " ") + res[i];
                } else {
                    value = o->get_default_str();
                }
                meta_ << "# setting: " << name << "=" << value << "\n";
            }
            const auto subs = cur->get_subcommands();
            cur = subs.empty() ? nullptr : subs.front();
        }
    }

    void note(const std::string& key, const std::string& value) { meta_ << "# " << key << ": " << value << "\n"; }
    void note(const std::string& key, double value) { note(key, num(value)); }
    std::ostringstream& body() { return body_; }

    void write(const std::string& path, std::ostream& out) const {
        const std::string text = meta_.str() + body_.str();
        if (path.empty() || path == "-") {
            out << text;
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw UsageError("cannot write '" + path + "'");
        f << text;
        if (!f) throw ResourceError("failed while writing '" + path + "'");
    }

    std::string meta() const { return meta_.str(); }

private:
    std::ostringstream meta_, body_;
};

struct Fit {
    std::string range;

    std::pair<double, double> resolve(double lo, double hi) const {
        if (range.empty()) return {lo, hi};
        const auto v = parse_list(range, "fit range");
        if (v.size() != 2) throw UsageError("fit range reads lo,hi");
        return {v[0], v[1]};
    }
};

// ---------------------------------------------------------------- commands

struct OrbitGen {
    Source src;
    std::string out;

    void add(CLI::App* app) {
        src.add(app);
        app->add_option("--out", out, "output path (stdout when omitted)");
    }

    void run(const Global& g, const CLI::App& root, std::ostream& os) const {
        if (src.backend.empty()) throw UsageError("orbit gen needs --backend");
        if (!src.in.empty()) throw UsageError("orbit gen does not read --in");
        const OrbitDataset ds = src.load(g.threads);
        std::ostringstream file;
        write_orbit(ds, file);
        const std::string text = file.str();
        const auto nl = text.find('\n');
        Report r(g, "orbit gen", root);
        r.note("points", std::to_string(ds.size()));
        // the format header must stay on the first line
        std::ostringstream whole;
        whole << text.substr(0, nl + 1) << r.meta() << text.substr(nl + 1);
        if (out.empty() || out == "-") {
            os << whole.str();
            return;
        }
        std::ofstream f(out, std::ios::binary);
        if (!f) throw UsageError("cannot write '" + out + "'");
        f << whole.str();
        if (!f) throw ResourceError("failed while writing '" + out + "'");
    }
};

struct OrbitInfo {
    std::string in;
    std::string out;

    void add(CLI::App* app) {
        app->add_option("--in", in, "orbit file")->required();
        app->add_option("--out", out, "output path (stdout when omitted)");
    }

    void run(const Global& g, const CLI::App& root, std::ostream& os) const {
        const OrbitDataset ds = load_orbit(in);
        Report r(g, "orbit info", root);
        auto& b = r.body();
        b << "key,value\n";
        b << "n," << ds.n << "\n";
        b << "q," << num(ds.Q) << "\n";
        b << "veff," << (ds.V_eff ? num(*ds.V_eff) : "na") << "\n";
        b << "w," << ds.w << "\n";
        b << "source," << ds.source << "\n";
        b << "points," << ds.size() << "\n";
        b << "exact," << (ds.is_exact() ? "yes" : "no") << "\n";
        b << "base_point," << (ds.base_index >= 0 ? "yes" : "no") << "\n";
        if (ds.cone) b << "cone_theta," << num(ds.cone->theta) << "\n";
        r.write(out, os);
    }
};

struct PairCorr {
    Source src;
    std::string xi = "0.25:4:16";
    bool calibrate = false;
    Fit fit;
    std::vector<std::string> cone;
    double T = 0.0;
    std::string base = "exclude";
    std::string out;

    void add(CLI::App* app) {
        src.add(app);
        app->add_option("--xi", xi, "xi grid: a,b,c or lo:hi:count");
        app->add_flag("--calibrate", calibrate, "fit V_eff from the orbit count before comparing");
        app->add_option("--fit", fit.range, "calibration range lo,hi (default Q/5,Q)");
        app->add_option("--cone", cone, "cone restriction: axis=a,b,... theta=x")->expected(2);
        app->add_option("--T", T, "norm truncation of the theoretical sums (default: whole spectrum)");
        app->add_option("--base", base, "pairs with the base point: exclude or gN")
            ->check(CLI::IsMember({"exclude", "gN"}));
        app->add_option("--out", out, "output path (stdout when omitted)");
    }

    void run(const Global& g, const CLI::App& root, std::ostream& os) const {
        const auto grid = positive_increasing(parse_grid(xi, "xi grid"), "xi grid");
        OrbitDataset ds = src.load(g.threads);
        if (ds.size() == 0) throw UsageError("the orbit is empty");
        if (ds.cone) throw UsageError("paircorr needs the full orbit; use --cone to restrict");
        std::optional<CovolumeFit> cal;
        if (calibrate) {
            const auto [lo, hi] = fit.resolve(ds.Q / 5, ds.Q);
            cal = effective_covolume(ds, lo, hi);
        }
        if (!ds.V_eff) throw UsageError("the orbit has no V_eff; pass --calibrate");
        const DensityContext ctx = DensityContext::make(ds.n, *ds.V_eff, g.quad(), g.threads);
        const DistanceSpectrum spec = distance_spectrum(ds, std::acosh(ds.Q * ds.Q / 2));
        std::optional<double> trunc;
        if (T > 0.0) trunc = T;

        PairCountOptions opt;
        opt.base = base == "gN" ? BaseMode::g_N : BaseMode::exclude;
        opt.threads = g.threads;
        const OrbitDataset sample = cone.empty() ? ds : cone_filter(ds, parse_cone(cone));
        const PairCorrCurve curve = pair_correlation(sample, grid, ctx.k, opt);

        Report r(g, "paircorr", root);
        r.note("Q", ds.Q);
        r.note("V_eff", *ds.V_eff);
        if (cal) {
            r.note("calibration_rel_rms", cal->rel_rms);
            r.note("calibration_range", num(cal->q.front()) + "," + num(cal->q.back()));
        }
        r.note("k", ctx.k);
        r.note("point_count", std::to_string(curve.point_count));
        r.note("mode", curve.mode);
        r.note("base", base);
        if (curve.warning) r.note("warning", "fewer than two points");
        std::vector<double> r2(grid.size()), g2(grid.size());
        double tail = 0.0, used = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const SumResult a = r2_theoretical(grid[i], spec, ctx, trunc);
            const SumResult b = g2_theoretical(grid[i], spec, ctx, trunc);
            r2[i] = a.value;
            g2[i] = b.value;
            tail = std::max({tail, a.tail_estimate, b.tail_estimate});
            used = a.truncation;
        }
        r.note("theory_truncation_T", used);
        r.note("theory_tail_estimate_max", tail);
        auto& b = r.body();
        b << "xi,r2q_empirical,r2_theory,g2_theory,g2_empirical,rel_err\n";
        for (std::size_t i = 0; i < grid.size(); ++i) {
            // centred difference inside the grid, one-sided at the ends
            const std::size_t lo = i == 0 ? 0 : i - 1, hi = i + 1 == grid.size() ? i : i + 1;
            const double g2e = hi > lo ? (curve.r2q[hi] - curve.r2q[lo]) / (grid[hi] - grid[lo]) : 0.0;
            const double rel = r2[i] > 0.0 ? curve.r2q[i] / r2[i] - 1.0 : std::numeric_limits<double>::quiet_NaN();
            b << num(grid[i]) << ',' << num(curve.r2q[i]) << ',' << num(r2[i]) << ',' << num(g2[i]) << ','
              << num(g2e) << ',' << num(rel) << "\n";
        }
        r.write(out, os);
    }
};

struct VolumeCheck {
    int n = 2;
    double q = 100.0;
    std::string t = "1,2,3";
    std::string xi = "0.5,1,2";
    std::string out;

    void add(CLI::App* app) {
        app->add_option("--n", n, "dimension");
        app->add_option("--q", q, "norm cutoff Q");
        app->add_option("--t", t, "distances t_M");
        app->add_option("--xi", xi, "xi values");
        app->add_option("--out", out, "output path (stdout when omitted)");
    }

    void run(const Global& g, const CLI::App& root, std::ostream& os) const {
        const DensityContext ctx = DensityContext::make(n, 1.0, g.quad(), g.threads);
        Report r(g, "volume-check", root);
        auto& b = r.body();
        b << "n,q,t,xi,vol_main,vol_numeric,ratio,error_scale,achieved_error\n";
        for (double tm : parse_list(t, "t"))
            for (double x : parse_list(xi, "xi")) {
                const auto m = vol_RM_main(q, x, tm, ctx);
                const auto v = vol_RM_numeric(q, x, tm, ctx);
                b << n << ',' << num(q) << ',' << num(tm) << ',' << num(x) << ',' << num(m.value) << ','
                  << num(v.value) << ',' << num(m.value / v.value) << ',' << num(m.error_scale) << ','
                  << num(v.achieved_error) << "\n";
            }
        r.write(out, os);
    }
};

struct Asymptotics {
    std::string backend = "psl2z";
    int n = 2;
    double q = 200.0;
    std::int64_t x_max = 5000;
    double veff = 0.0;
    Fit fit;
    std::string xi = "1,2,5,10,20,50";
    double T = 0.0;
    std::string out;

    void add(CLI::App* app) {
        app->add_option("--backend", backend, "psl2z (n = 2) or lorentz (level counts)")
            ->check(CLI::IsMember({"lorentz", "psl2z"}));
        app->add_option("--n", n, "dimension for the lorentz backend");
        app->add_option("--q", q, "norm cutoff for psl2z");
        app->add_option("--x-max", x_max, "largest level x_{n+1} for the lorentz backend");
        app->add_option("--veff", veff, "effective covolume (calibrated when omitted)");
        app->add_option("--fit", fit.range, "calibration range lo,hi");
        app->add_option("--xi", xi, "xi sweep: a,b,c or lo:hi:count");
        app->add_option("--T", T, "norm truncation (default: whole spectrum)");
        app->add_option("--out", out, "output path (stdout when omitted)");
    }

    void run(const Global& g, const CLI::App& root, std::ostream& os) const {
        const auto grid = positive_increasing(parse_grid(xi, "xi sweep"), "xi sweep");
        DistanceSpectrum spec;
        double V = veff;
        std::optional<CovolumeFit> cal;
        int dim = n;
        if (backend == "psl2z") {
            if (n != 2) throw UsageError("the psl2z backend has n = 2");
            OrbitDataset ds = psl2z_orbit(q, {50'000'000, g.threads});
            if (!(V > 0.0)) {
                const auto [lo, hi] = fit.resolve(q / 5, q);
                cal = effective_covolume(ds, lo, hi);
                V = cal->V;
            }
            spec = distance_spectrum(ds, std::acosh(q * q / 2));
        } else {
            const LevelCounts lc = lorentz_level_counts(n, x_max);
            const double qmax = std::sqrt(2.0 * x_max);
            if (!(V > 0.0)) {
                const auto [lo, hi] = fit.resolve(qmax / 5, qmax);
                cal = fit_covolume([&](double Qp) { return static_cast<double>(lc.total_within(Qp)); }, n, lo, hi, 40);
                V = cal->V;
            }
            spec = distance_spectrum(lc, std::acosh(static_cast<double>(x_max)));
        }
        const DensityContext ctx = DensityContext::make(dim, V, g.quad(), g.threads);
        std::optional<double> trunc;
        if (T > 0.0) trunc = T;
        Report r(g, "asymptotics", root);
        r.note("n", std::to_string(dim));
        r.note("V_eff", V);
        if (cal) r.note("calibration_rel_rms", cal->rel_rms);
        r.note("k", ctx.k);
        r.note("spectrum_entries", std::to_string(spec.entries.size()));
        auto& b = r.body();
        b << "xi,g2_theory,reference,ratio,tail_estimate\n";
        for (double x : grid) {
            const SumResult s = g2_theoretical(x, spec, ctx, trunc);
            const double ref = (dim - 1) * std::pow(x, dim - 2);
            b << num(x) << ',' << num(s.value) << ',' << num(ref) << ',' << num(s.value / ref) << ','
              << num(s.tail_estimate) << "\n";
        }
        r.write(out, os);
    }
};

struct SpectrumRecover {
    std::string synthetic;
    std::string in;
    int n = 2;
    double veff = 2.0;
    int depth = 0;
    RecoverOptions ropt;
    std::string out;

    void add(CLI::App* app) {
        app->add_option("--synthetic", synthetic, "reference spectrum t:multiplicity,...");
        app->add_option("--in", in, "reference spectrum CSV with rows t,multiplicity");
        app->add_option("--n", n, "dimension");
        app->add_option("--veff", veff, "effective covolume (n = 2, V_eff = 2 gives k = 1)");
        app->add_option("--depth", depth, "distances to peel (default: size of the reference)");
        app->add_option("--xi-lo", ropt.xi_lo, "smallest xi of the detection grid");
        app->add_option("--xi-hi", ropt.xi_hi, "largest xi of the detection grid");
        app->add_option("--grid", ropt.grid_points, "detection grid size");
        app->add_flag("--allow-partial", ropt.allow_partial, "report what was found instead of failing");
        app->add_option("--out", out, "output path (stdout when omitted)");
    }

    void run(const Global& g, const CLI::App& root, std::ostream& os) const {
        if (synthetic.empty() == in.empty()) throw UsageError("pass exactly one of --synthetic and --in");
        const DistanceSpectrum ref = synthetic.empty() ? load_spectrum(in) : parse_synthetic(synthetic);
        if (ref.entries.empty()) throw UsageError("the reference spectrum is empty");
        const DensityContext ctx = DensityContext::make(n, veff, g.quad(), g.threads);
        auto g2 = [&](double x) { return g2_theoretical(x, ref, ctx).value; };
        const int d = depth > 0 ? depth : static_cast<int>(ref.entries.size());
        const RecoveryResult res = recover_length_spectrum(g2, veff, n, d, ropt, g.quad());
        Report r(g, "spectrum-recover", root);
        r.note("k", ctx.k);
        r.note("exhausted", res.exhausted ? "yes" : "no");
        auto& b = r.body();
        b << "index,t_reference,multiplicity_reference,t_recovered,multiplicity_recovered,abs_dt\n";
        const std::size_t rows = std::max(ref.entries.size(), res.spectrum.entries.size());
        for (std::size_t i = 0; i < rows; ++i) {
            const bool a = i < ref.entries.size(), c = i < res.spectrum.entries.size();
            b << i << ',' << (a ? num(ref.entries[i].t) : "") << ','
              << (a ? std::to_string(ref.entries[i].multiplicity) : "") << ','
              << (c ? num(res.spectrum.entries[i].t) : "") << ','
              << (c ? std::to_string(res.spectrum.entries[i].multiplicity) : "") << ','
              << (a && c ? num(std::fabs(ref.entries[i].t - res.spectrum.entries[i].t)) : "") << "\n";
        }
        r.write(out, os);
    }
};

struct PlotF {
    int n = 2;
    std::string fix;
    std::string range = "0.01:10:400";
    std::string out;

    void add(CLI::App* app) {
        app->add_option("--n", n, "dimension");
        app->add_option("--fix", fix, "xi=<value> or l=<value>")->required();
        app->add_option("--range", range, "values of the free variable: a,b,c or lo:hi:count");
        app->add_option("--out", out, "output path (stdout when omitted)");
    }

    void run(const Global& g, const CLI::App& root, std::ostream& os) const {
        const auto [key, value] = parse_kv(fix);
        if (key != "xi" && key != "l") throw UsageError("--fix takes xi=<value> or l=<value>");
        const auto free = positive_increasing(parse_grid(range, "range"), "range");
        const DensityContext ctx = DensityContext::make(n, 1.0, g.quad(), g.threads);
        Report r(g, "density plot-f", root);
        r.note("fixed", key + "=" + num(value));
        auto& b = r.body();
        b << (key == "xi" ? "l" : "xi") << ",f\n";
        for (double v : free) {
            const double f = key == "xi" ? f_xi(value, v, ctx) : f_xi(v, value, ctx);
            b << num(v) << ',' << num(f) << "\n";
        }
        r.write(out, os);
    }
};

struct Commands {
    Global global;
    OrbitGen orbit_gen;
    OrbitInfo orbit_info;
    PairCorr paircorr;
    VolumeCheck volume;
    Asymptotics asym;
    SpectrumRecover recover;
    PlotF plot_f;
    CLI::App* gen = nullptr;
    CLI::App* info = nullptr;
    CLI::App* pc = nullptr;
    CLI::App* vc = nullptr;
    CLI::App* as = nullptr;
    CLI::App* sr = nullptr;
    CLI::App* pf = nullptr;
};

std::unique_ptr<CLI::App> build(Commands& c) {
    auto app = std::make_unique<CLI::App>("Pair correlation of angles in hyperbolic lattice orbits", "hyperangle");
    app->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app->set_version_flag("--version", std::string("hyperangle ") + version());
    app->require_subcommand(1);
    app->fallthrough();
    app->add_option("--config", c.global.config, "TOML file; its values override flags");
    app->add_option("--threads", c.global.threads, "worker threads (default: HYPERANGLE_THREADS, then all cores)");
    app->add_option("--quad-abs-tol", c.global.abs_tol, "quadrature absolute tolerance");
    app->add_option("--quad-rel-tol", c.global.rel_tol, "quadrature relative tolerance");
    app->add_option("--quad-max-subdiv", c.global.max_subdiv, "quadrature subdivision limit");

    auto* orbit = app->add_subcommand("orbit", "generate or inspect orbit files");
    orbit->require_subcommand(1);
    orbit->fallthrough();
    c.gen = orbit->add_subcommand("gen", "enumerate an orbit and write it in csv-v1 format");
    c.orbit_gen.add(c.gen);
    c.info = orbit->add_subcommand("info", "summarize an orbit file");
    c.orbit_info.add(c.info);
    c.pc = app->add_subcommand("paircorr", "empirical against theoretical pair correlation");
    c.paircorr.add(c.pc);
    c.vc = app->add_subcommand("volume-check", "main term against numerical volume of the pair region");
    c.volume.add(c.vc);
    c.as = app->add_subcommand("asymptotics", "g2 against its large-xi growth");
    c.asym.add(c.as);
    c.sr = app->add_subcommand("spectrum-recover", "recover distances from kinks of g2");
    c.recover.add(c.sr);
    auto* density = app->add_subcommand("density", "tabulate the kernel f");
    density->require_subcommand(1);
    density->fallthrough();
    c.pf = density->add_subcommand("plot-f", "f with one argument fixed");
    c.plot_f.add(c.pf);
    for (auto* sub : {c.gen, c.info, c.pc, c.vc, c.as, c.sr, c.pf}) sub->fallthrough();
    return app;
}

std::vector<std::string> command_path(const CLI::App& app) {
    std::vector<std::string> path;
    const CLI::App* cur = &app;
    while (true) {
        const auto subs = cur->get_subcommands();
        if (subs.empty()) break;
        cur = subs.front();
        path.push_back(cur->get_name());
    }
    return path;
}

std::string dashed(std::string s) {
    std::replace(s.begin(), s.end(), '_', '-');
    return s;
}

// Converts the TOML file into trailing arguments, so that with the take-last
// policy its values win over flags. Sections: [quad] and the command path
// ([paircorr], [orbit.gen], ...); top-level keys are global options.
std::vector<std::string> config_arguments(const std::string& path, const std::vector<std::string>& cmd) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::Error& e) {
        throw ParseError(std::string("config: ") + e.what(), 0);
    }
    std::vector<std::string> args;
    for (const auto& it : items) {
        if (it.name == "++" || it.name == "--") continue;
        std::string flag;
        if (it.parents.empty()) flag = "--" + dashed(it.name);
        else if (it.parents == std::vector<std::string>{"quad"}) flag = "--quad-" + dashed(it.name);
        else if (it.parents == cmd) flag = "--" + dashed(it.name);
        else continue;
        if (flag == "--config") throw UsageError("config files cannot name another config file");
        if (it.inputs.empty()) {
            args.push_back(flag);
            continue;
        }
        std::string value;
        for (std::size_t i = 0; i < it.inputs.size(); ++i) value += (i ? "," : "") + it.inputs[i];
        args.push_back(flag + "=" + value);
    }
    return args;
}

int dispatch(Commands& c, const CLI::App& root, std::ostream& out) {
    if (c.global.threads < 0) throw UsageError("--threads must be >= 0");
    if (!(c.global.abs_tol > 0.0) || !(c.global.rel_tol > 0.0) || c.global.max_subdiv < 1)
        throw UsageError("quadrature settings must be positive");
    if (c.gen->parsed()) c.orbit_gen.run(c.global, root, out);
    else if (c.info->parsed()) c.orbit_info.run(c.global, root, out);
    else if (c.pc->parsed()) c.paircorr.run(c.global, root, out);
    else if (c.vc->parsed()) c.volume.run(c.global, root, out);
    else if (c.as->parsed()) c.asym.run(c.global, root, out);
    else if (c.sr->parsed()) c.recover.run(c.global, root, out);
    else if (c.pf->parsed()) c.plot_f.run(c.global, root, out);
    return 0;
}

std::vector<std::string> reversed(std::vector<std::string> v) {
    std::reverse(v.begin(), v.end());
    return v;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        Commands c;
        auto app = build(c);
        try {
            app->parse(reversed(args));
        } catch (const CLI::ParseError& e) {
            std::ostringstream o, x;
            const int code = app->exit(e, o, x);
            out << o.str();
            err << x.str();
            return code == 0 ? 0 : 2;
        }
        std::vector<std::string> all = args;
        if (!c.global.config.empty()) {
            const auto extra = config_arguments(c.global.config, command_path(*app));
            all.insert(all.end(), extra.begin(), extra.end());
            c = Commands{};
            app = build(c);
            try {
                app->parse(reversed(all));
            } catch (const CLI::ParseError& e) {
                std::ostringstream o, x;
                app->exit(e, o, x);
                err << x.str();
                return 2;
            }
        }
        c.global.argv = args;
        return dispatch(c, *app, out);
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const DiagnosticError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const ExhaustionError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const ResourceError& e) {
        err << "resource error: " << e.what() << "\n";
        return 3;
    } catch (const ParseError& e) {
        err << "input error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "unexpected failure: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace hyperangle::cli
