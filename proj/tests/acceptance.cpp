// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "hyperangle/density.hpp"
#include "hyperangle/empirical.hpp"
#include "hyperangle/geometry.hpp"
#include "hyperangle/lattice.hpp"
#include "support.hpp"

using namespace hyperangle;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double median(std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
}

// The three branches of f: xi <= C, C < xi <= B, B < xi.
Outcome closed_vs_quadrature() {
    double worst = 0.0;
    int branches[3] = {0, 0, 0};
    const QuadSettings tight{1e-15, 1e-13, 400};
    for (int n : {2, 3})
        for (int i = 0; i < 20; ++i)
            for (int j = 0; j < 20; ++j) {
                const double l = 0.05 * std::pow(200.0, j / 19.0);
                const double xi = 0.02 * std::pow(2500.0, i / 19.0);
                ++branches[static_cast<int>(branch_of(xi, l))];
                const double c = f_xi_closed(xi, l, n);
                const double q = f_xi_quadrature(xi, l, n, tight);
                worst = std::max(worst, std::fabs(c - q) / (1.0 + std::fabs(q)));
            }
    const bool all = branches[0] > 0 && branches[1] > 0 && branches[2] > 0;
    return {worst <= 1e-9 && all,
            fmt("max |closed-quad|/(1+|quad|) = %.3g (limit 1e-9); grid points per branch %d/%d/%d", worst,
                branches[0], branches[1], branches[2])};
}

Outcome continuity_and_kinks() {
    bool ok = true;
    std::string failures;
    double worst_gap = 0.0, weakest_spike = 1e300;
    for (int n : {2, 3, 5}) {
        const auto ctx = DensityContext::make(n, 1.0);
        auto f = [&](double x, double l) { return f_xi(x, l, ctx); };
        for (double l : {1.0, 2.0, 4.0}) {
            const auto [xc, xb] = kink_locations(l);
            for (double x : {xc, xb}) {
                const double eps = 1e-8;
                const double gap = std::fabs(f(x + eps, l) - f(x - eps, l));
                worst_gap = std::max(worst_gap, gap);
                // second differences on a uniform grid through the kink
                const double h = 1e-3 * x;
                std::vector<double> D;
                for (int i = -20; i <= 20; ++i) {
                    const double y = x + i * h;
                    D.push_back(std::fabs(f(y + h, l) - 2.0 * f(y, l) + f(y - h, l)));
                }
                std::vector<double> bg;
                for (int i = -20; i <= 20; ++i)
                    if (std::abs(i) >= 3) bg.push_back(D[i + 20]);
                const double spike = std::max({D[19], D[20], D[21]});
                const double ratio = spike / median(bg);
                const int at = static_cast<int>(std::max_element(D.begin(), D.end()) - D.begin()) - 20;
                weakest_spike = std::min(weakest_spike, ratio);
                const bool here = gap < 1e-6 && ratio >= 10.0 && std::abs(at) <= 1;
                if (!here) {
                    ok = false;
                    failures += fmt(" [n=%d l=%g xi=%.6g gap=%.2g spike=%.3gx]", n, l, x, gap, ratio);
                }
            }
        }
    }
    return {ok, fmt("max gap at 1e-8 offsets = %.3g (limit 1e-6); weakest spike %.3gx (limit 10x)", worst_gap,
                    weakest_spike) +
                    (failures.empty() ? "" : "; failing:" + failures)};
}

Outcome derivative_of_F() {
    auto r = support::rng(301);
    double worst = 0.0;
    int count = 0;
    while (count < 50) {
        const int n = support::uniform_int(r, 2, 5);
        const double l = support::uniform(r, 0.2, 4.0), xi = support::uniform(r, 0.05, 8.0);
        const auto [c, b] = kink_locations(l);
        if (std::fabs(xi - c) < 1e-2 * c || std::fabs(xi - b) < 1e-2 * b) continue;
        const auto ctx = DensityContext::make(n, 1.0);
        const double h = 1e-5 * xi;
        const double fd = (F_cumulative(xi + h, l, ctx) - F_cumulative(xi - h, l, ctx)) / (2.0 * h);
        const double f = f_xi(xi, l, ctx);
        worst = std::max(worst, std::fabs(fd - f) / std::max(1.0, std::fabs(f)));
        ++count;
    }
    return {worst <= 1e-6, fmt("50 points, max |F'-f|/max(1,|f|) = %.3g (limit 1e-6)", worst)};
}

Outcome integral_over_G() {
    bool ok = true;
    std::string d;
    for (int n : {2, 3}) {
        const auto ctx = DensityContext::make(n, 1.0);
        const auto g = integral_f_over_G(100.0, ctx);
        const double ref = sphere_volume(n) * std::pow(100.0, n - 2) / ((n - 1.0) * (n - 1.0));
        const double dev = std::fabs(g.value / ref - 1.0);
        ok = ok && dev <= 0.02;
        d += fmt("n=%d ratio-1 = %.4g; ", n, g.value / ref - 1.0);
    }
    return {ok, d + "limit 0.02"};
}

struct N3Data {
    LevelCounts lc;
    CovolumeFit fit;
    DistanceSpectrum spec;
};

const N3Data& n3_data() {
    static const N3Data d = [] {
        N3Data x;
        x.lc = lorentz_level_counts(3, 5000);
        x.fit = fit_covolume([&](double Q) { return static_cast<double>(x.lc.total_within(Q)); }, 3, 30, 100, 40);
        x.spec = distance_spectrum(x.lc, std::acosh(5000.0));
        return x;
    }();
    return d;
}

const DistanceSpectrum& psl2z_spectrum_200() {
    static const DistanceSpectrum s = distance_spectrum(psl2z_orbit(200), std::acosh(200.0 * 200.0 / 2));
    return s;
}

Outcome large_xi() {
    const auto c2 = DensityContext::make(2, 2 * pi / 3);
    const double r2 = g2_theoretical(50.0, psl2z_spectrum_200(), c2).value;
    const auto& d = n3_data();
    const auto c3 = DensityContext::make(3, d.fit.V);
    const double r3 = g2_theoretical(50.0, d.spec, c3, 100.0).value / (2.0 * 50.0);
    const bool ok = r2 >= 0.95 && r2 <= 1.05 && r3 >= 0.95 && r3 <= 1.05;
    return {ok, fmt("xi=50: n=2 (V=2pi/3, norms <= 200) ratio %.5f; n=3 (V=%.5f fitted, T=100) ratio %.5f; "
                    "window [0.95,1.05]",
                    r2, d.fit.V, r3)};
}

Outcome small_xi() {
    const auto c2 = DensityContext::make(2, 2 * pi / 3);
    const auto& s = psl2z_spectrum_200();
    // quadratic extrapolation from three small xi
    const double h = 0.01;
    const double g1 = g2_theoretical(h, s, c2).value, g2 = g2_theoretical(2 * h, s, c2).value,
                 g3 = g2_theoretical(3 * h, s, c2).value;
    const double extrap = 3 * g1 - 3 * g2 + g3;
    const double limit = g2_zero_limit_n2(s, 2 * pi / 3).value;
    const double dev = std::fabs(extrap / limit - 1.0);

    const auto& d = n3_data();
    const auto c3 = DensityContext::make(3, d.fit.V);
    auto g = [&](double x) { return g2_theoretical(x, d.spec, c3, 100.0).value; };
    const double a = g(0.05), b = g(0.2), c = g(0.5), one = g(1.0);
    const bool order = a < b && b < c && a < 0.1 * one;
    return {dev <= 0.01 && order,
            fmt("n=2: extrapolated g2(0) = %.6f vs limit %.6f (rel %.3g, limit 0.01); n=3: g2(0.05,0.2,0.5,1) = "
                "%.4g, %.4g, %.4g, %.4g",
                extrap, limit, dev, a, b, c, one)};
}

Outcome volume_cross_check() {
    double lo = 1e300, hi = -1e300;
    for (int n : {2, 3}) {
        const auto ctx = DensityContext::make(n, 1.0);
        for (double t : {1.0, 2.0, 3.0})
            for (double xi : {0.5, 1.0, 2.0}) {
                const double r = vol_RM_main(100, xi, t, ctx).value / vol_RM_numeric(100, xi, t, ctx).value;
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
    }
    return {lo >= 0.99 && hi <= 1.01, fmt("ratios in [%.6f, %.6f]; window [0.99, 1.01]", lo, hi)};
}

struct Psl2zRun {
    OrbitDataset ds;
    CovolumeFit fit;
    DensityContext ctx;
    DistanceSpectrum spec;
};

Psl2zRun psl2z_run(double Q) {
    Psl2zRun r;
    r.ds = psl2z_orbit(Q);
    r.fit = effective_covolume(r.ds, Q / 5, Q);
    r.ctx = DensityContext::make(2, r.fit.V);
    r.spec = distance_spectrum(r.ds, std::acosh(Q * Q / 2));
    return r;
}

const Psl2zRun& psl2z_500() {
    static const Psl2zRun r = psl2z_run(500);
    return r;
}

Outcome empirics_vs_theory() {
    const auto& r = psl2z_500();
    const std::vector<double> grid = {0.5, 1.0, 2.0, 4.0};
    const auto curve = pair_correlation(r.ds, grid, r.ctx.k);
    double worst = 0.0;
    std::string d = fmt("N=%zu, V_eff=%.5f; ", r.ds.size(), r.fit.V);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double th = r2_theoretical(grid[i], r.spec, r.ctx).value;
        const double e = std::fabs(curve.r2q[i] / th - 1.0);
        worst = std::max(worst, e);
        d += fmt("xi=%g %.4f/%.4f; ", grid[i], curve.r2q[i], th);
    }
    const Psl2zRun small = psl2z_run(150);
    const double e150 =
        std::fabs(pair_correlation(small.ds, {1.0}, small.ctx.k).r2q[0] / r2_theoretical(1.0, small.spec, small.ctx).value - 1.0);
    const double e500 = std::fabs(curve.r2q[1] / r2_theoretical(1.0, r.spec, r.ctx).value - 1.0);
    return {worst <= 0.10 && e500 <= e150,
            d + fmt("max rel err %.4f (limit 0.10); xi=1 error Q=500 %.4f vs Q=150 %.4f", worst, e500, e150)};
}

Outcome per_distance() {
    const auto& r = psl2z_500();
    const double xi = 1.0;
    const auto counts = pairs_by_distance(r.ds, xi, r.ctx.k, r.spec);
    bool ok = true;
    std::string d;
    for (int i = 0; i < 3; ++i) {
        const auto& e = r.spec.entries[i];
        // every M at distance t contributes one region of this volume
        const double expect = e.multiplicity * vol_RM_main(r.ds.Q, r.ctx.k * xi, e.t, r.ctx).value / r.fit.V;
        const double got = static_cast<double>(counts.pair_count[i]);
        ok = ok && std::fabs(got / expect - 1.0) <= 0.15;
        d += fmt("t=%.5f (m=%llu): %.0f vs %.0f; ", e.t, static_cast<unsigned long long>(e.multiplicity), got,
                 expect);
    }
    return {ok, d + "limit 15%"};
}

Outcome calibration() {
    const auto& r = psl2z_500();
    const double ratio = static_cast<double>(r.ds.count_within(500)) * (2 * pi / 3) / vol_ball(500, 2);
    const double rms = n3_data().fit.rel_rms;
    return {ratio >= 0.98 && ratio <= 1.02 && rms <= 0.03,
            fmt("psl2z Q=500 count*V/vol = %.5f (window [0.98,1.02]); n=3 fit rel rms on [30,100] = %.4f (limit "
                "0.03)",
                ratio, rms)};
}

Outcome cone_invariance() {
    const OrbitDataset ds = psl2z_orbit(800);
    const double k = DensityContext::make(2, 2 * pi / 3).k;
    const std::vector<double> grid = {1.0, 2.0};
    const auto full = pair_correlation(ds, grid, k);
    const auto cone = pair_correlation(cone_filter(ds, Cone({1.0, 0.0}, pi / 3)), grid, k);
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::fabs(cone.r2q[i] / full.r2q[i] - 1.0));
    return {worst <= 0.10, fmt("N=%zu, cone points %llu; xi=1 %.4f vs %.4f, xi=2 %.4f vs %.4f; max rel %.4f "
                               "(limit 0.10)",
                               ds.size(), static_cast<unsigned long long>(cone.point_count), cone.r2q[0], full.r2q[0],
                               cone.r2q[1], full.r2q[1], worst)};
}

Outcome oracles() {
    auto r = support::rng(1201);
    int equal = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = support::uniform_int(r, 2, 5);
        OrbitDataset ds;
        if (trial % 4 == 0) ds = psl2z_orbit(support::uniform(r, 20, 35));
        else if (trial % 4 == 1) ds = enumerate_lorentz(n, n == 2 ? 60.0 : (n == 3 ? 8.0 : (n == 4 ? 4.0 : 3.0)));
        else ds = support::random_dataset(n, support::uniform(r, 5, 60), support::uniform_int(r, 50, 1999), r);
        std::vector<double> grid;
        for (double x = support::uniform(r, 0.01, 0.2); x < ds.Q * ds.Q * (ds.n == 2 ? 0.05 : 0.3);
             x += support::uniform(r, 0.05, 0.8))
            grid.push_back(x);
        PairCountOptions opt;
        opt.base = trial % 2 ? BaseMode::g_N : BaseMode::exclude;
        const double k = support::uniform(r, 0.3, 3.0);
        const auto a = pair_correlation(ds, grid, k, opt), b = pair_correlation_bruteforce(ds, grid, k, opt);
        equal += ds.size() <= 2000 && a.pairs == b.pairs && a.base_pairs == b.base_pairs;
    }
    double norm_err = 0.0, angle_err = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = support::uniform_int(r, 2, 5);
        const auto M = support::element(n, r, 0.05, 2.5);
        const auto g = support::element(n, r, M.t() + 0.05, M.t() + 3.0);
        const double direct = group_norm_sq(g * M);
        norm_err = std::max(norm_err, std::fabs(right_mult_norm_sq(g, M) - direct) / direct);
        const double oracle = angle_at_base((g * M).orbit_point(), g.orbit_point()).radians;
        angle_err = std::max(angle_err, std::fabs(right_mult_angle(g, M).radians - oracle));
    }
    return {equal == 20 && norm_err <= 1e-8 && angle_err <= 1e-8,
            fmt("%d/20 configurations equal; 1000 pairs: max rel norm err %.3g, max angle err %.3g (limits 1e-8)",
                equal, norm_err, angle_err)};
}

Outcome spectrum_recovery() {
    const std::vector<std::pair<double, std::uint64_t>> want = {{1.2, 2}, {1.9, 1}, {2.3, 3}};
    const auto ctx = DensityContext::make(2, 2.0);
    auto g2 = [&](double xi) {
        double s = 0.0;
        for (auto [t, m] : want) s += m * big_F(xi, t, ctx);
        return s;
    };
    const auto res = recover_length_spectrum(g2, 2.0, 2, 3);
    bool ok = res.spectrum.entries.size() == 3;
    double worst = 0.0;
    std::string d;
    for (std::size_t i = 0; ok && i < 3; ++i) {
        const auto& e = res.spectrum.entries[i];
        worst = std::max(worst, std::fabs(e.t - want[i].first));
        ok = ok && e.multiplicity == want[i].second;
        d += fmt("%.6f x%llu; ", e.t, static_cast<unsigned long long>(e.multiplicity));
    }
    return {ok && worst < 1e-3, d + fmt("max |dt| = %.3g (limit 1e-3)", worst)};
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;  // runtime limit, 0 when none is set
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("acceptance criteria");
    std::vector<int> only;
    app.add_option("--only", only, "criteria to run (default: all)");
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> all = {
        {1, "closed forms vs quadrature", 10, closed_vs_quadrature},
        {2, "continuity and kinks", 0, continuity_and_kinks},
        {3, "derivative of F is f", 0, derivative_of_F},
        {4, "integral of f over G at xi = 100", 30, integral_over_G},
        {5, "large-xi growth of g2", 0, large_xi},
        {6, "small-xi behaviour of g2", 0, small_xi},
        {7, "volume main term vs numeric", 120, volume_cross_check},
        {8, "empirical vs theoretical R2", 300, empirics_vs_theory},
        {9, "per-distance pair counts", 0, per_distance},
        {10, "covolume calibration", 0, calibration},
        {11, "cone invariance", 0, cone_invariance},
        {12, "indexed vs brute-force and geometry oracles", 0, oracles},
        {13, "length spectrum recovery", 0, spectrum_recovery},
    };
    int failed = 0;
    for (const auto& c : all) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.budget_s > 0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += fmt("; over the %.0f s budget", c.budget_s);
        }
        failed += !o.pass;
        std::printf("ACCEPTANCE %2d %s  %s: %s [%.2f s]\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                    secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
