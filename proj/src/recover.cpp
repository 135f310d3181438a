#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hyperangle/density.hpp"
#include "hyperangle/errors.hpp"

namespace hyperangle {

namespace {

// Quadratic through (z_i, y_i), returned as c0 + c1 z + c2 z^2.
struct Quad {
    double c0, c1, c2;
    double operator()(double z) const { return c0 + z * (c1 + z * c2); }
    double slope(double z) const { return c1 + 2.0 * c2 * z; }
};

Quad fit3(const double z[3], const double y[3]) {
    const double d01 = (y[1] - y[0]) / (z[1] - z[0]);
    const double d12 = (y[2] - y[1]) / (z[2] - z[1]);
    const double c2 = (d12 - d01) / (z[2] - z[0]);
    const double c1 = d01 - c2 * (z[0] + z[1]);
    const double c0 = y[0] - z[0] * (c1 + c2 * z[0]);
    return {c0, c1, c2};
}

// Left and right quadratic extrapolants meeting in [a, b].
struct Sides {
    Quad left, right;
};

template <class F>
Sides sides(const F& f, double a, double b, double w, double origin) {
    const double zl[3] = {a - 2 * w - origin, a - w - origin, a - origin};
    const double zr[3] = {b - origin, b + w - origin, b + 2 * w - origin};
    double yl[3], yr[3];
    for (int i = 0; i < 3; ++i) {
        yl[i] = f(zl[i] + origin);
        yr[i] = f(zr[i] + origin);
    }
    return {fit3(zl, yl), fit3(zr, yr)};
}

template <class F>
double locate_kink(const F& f, double a, double b) {
    double x = 0.5 * (a + b);
    for (int it = 0; it < 40; ++it) {
        const double w = b - a;
        if (w < 1e-12 * std::max(1.0, std::fabs(x))) break;
        const Sides s = sides(f, a, b, w, a);
        const double q2 = s.left.c2 - s.right.c2, q1 = s.left.c1 - s.right.c1,
                     q0 = s.left.c0 - s.right.c0;
        double best = 0.5 * w, bestd = 1e300;
        auto consider = [&](double z) {
            if (!std::isfinite(z)) return;
            const double d = std::fabs(z - 0.5 * w) - 0.5 * w;  // <= 0 inside [0, w]
            if (d < bestd) {
                bestd = d;
                best = z;
            }
        };
        if (std::fabs(q2) < 1e-300 || std::fabs(q2 * w) < 1e-12 * std::fabs(q1)) {
            consider(-q0 / q1);
        } else {
            const double disc = q1 * q1 - 4 * q2 * q0;
            if (disc >= 0) {
                const double sq = std::sqrt(disc);
                const double r = -0.5 * (q1 + std::copysign(sq, q1));
                consider(r / q2);
                if (r != 0.0) consider(q0 / r);
            }
        }
        x = a + std::clamp(best, 0.0, w);
        a = x - w / 8;
        b = x + w / 8;
    }
    return x;
}

template <class F>
double slope_jump(const F& f, double x, double w) {
    const Sides s = sides(f, x, x, w, x);
    return s.right.slope(0.0) - s.left.slope(0.0);
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

}  // namespace

RecoveryResult recover_length_spectrum(const std::function<double(double)>& g2_samples,
                                       double V_eff, int n, int depth, const RecoverOptions& opt,
                                       const QuadSettings& quad) {
    if (depth < 1) throw UsageError("depth must be >= 1");
    if (!(opt.xi_lo > 0.0 && opt.xi_hi > opt.xi_lo) || opt.grid_points < 16)
        throw UsageError("recovery grid needs 0 < xi_lo < xi_hi and at least 16 points");
    const DensityContext ctx = DensityContext::make(n, V_eff, quad);
    const double k = ctx.k;
    const int N = opt.grid_points;
    std::vector<double> grid(N), h(N);
    for (int i = 0; i < N; ++i) grid[i] = opt.xi_lo * std::pow(opt.xi_hi / opt.xi_lo, i / (N - 1.0));
    double gmax = 0.0;
    for (int i = 0; i < N; ++i) {
        h[i] = g2_samples(grid[i]);
        gmax = std::max(gmax, std::fabs(h[i]));
    }
    const double floor = gmax > 0.0 ? 1e-7 * gmax : std::numeric_limits<double>::min();

    RecoveryResult out;
    std::vector<std::pair<double, std::uint64_t>> found;
    auto residual = [&](double xi) {
        double v = g2_samples(xi);
        for (const auto& [t, m] : found) v -= static_cast<double>(m) * big_F(xi, t, ctx);
        return v;
    };

    for (int level = 0; level < depth; ++level) {
        // slope change across each grid point, in units of g
        std::vector<double> D(N, 0.0);
        for (int i = 1; i + 1 < N; ++i) {
            const double sl = (h[i] - h[i - 1]) / (grid[i] - grid[i - 1]);
            const double sr = (h[i + 1] - h[i]) / (grid[i + 1] - grid[i]);
            D[i] = std::fabs(sr - sl) * 0.5 * (grid[i + 1] - grid[i - 1]);
        }
        // background = median of the surrounding window; curvature varies by
        // orders of magnitude along the grid, so one global level would not do
        auto background = [&](int i) {
            std::vector<double> win;
            for (int j = std::max(1, i - 16); j <= std::min(N - 2, i + 16); ++j)
                if (std::abs(j - i) > 1) win.push_back(D[j]);
            return median(std::move(win));
        };
        auto is_spike = [&](int i) { return D[i] > std::max(opt.spike_factor * background(i), floor); };
        int spike = -1;
        for (int i = 3; i + 3 < N; ++i)
            if (is_spike(i)) {
                spike = i;
                for (int j = i + 1; j <= i + 2; ++j)
                    if (D[j] > D[spike]) spike = j;
                break;
            }
        if (spike < 0) {
            out.exhausted = true;
            if (!opt.allow_partial)
                throw ExhaustionError("no detectable kink after recovering " +
                                      std::to_string(found.size()) + " distance(s)");
            break;
        }
        const double xstar = locate_kink(residual, grid[spike - 1], grid[spike + 1]);
        // the smallest kink of the smallest remaining t is normally at C(t)/k;
        // its partner at B(t)/k decides between the two readings
        const double tC = 2.0 * std::asinh(0.5 * k * xstar);
        const double xiB = std::sinh(tC) / k;
        bool seen = false, as_C = true;
        if (xiB < grid[N - 4]) {
            const auto it = std::lower_bound(grid.begin(), grid.end(), xiB);
            const int j = static_cast<int>(it - grid.begin());
            for (int i = std::max(1, j - 3); i <= std::min(N - 2, j + 3); ++i) seen |= is_spike(i);
            as_C = seen;
        }
        const double t = as_C ? tC : std::asinh(k * xstar);
        const double xref = as_C ? 2.0 * std::sinh(0.5 * t) / k : std::sinh(t) / k;
        const double w = 1e-5 * xstar;
        const double obs = slope_jump(residual, xstar, w);
        const double ref = slope_jump([&](double x) { return big_F(x, t, ctx); }, xref, w);
        const double ratio = obs / ref;
        const double mult = std::round(ratio);
        if (!(mult >= 1.0) || std::fabs(ratio - mult) > opt.integer_tolerance)
            throw DiagnosticError("kink at xi = " + std::to_string(xstar) +
                                  " has non-integer multiplicity ratio " + std::to_string(ratio));
        found.emplace_back(t, static_cast<std::uint64_t>(mult));
        out.kinks.push_back({xstar, t, ratio, seen});
        for (int i = 0; i < N; ++i) h[i] -= mult * big_F(grid[i], t, ctx);
    }

    std::sort(found.begin(), found.end());
    for (const auto& [t, m] : found) {
        if (!out.spectrum.entries.empty() && std::fabs(out.spectrum.entries.back().t - t) < 1e-9) {
            out.spectrum.entries.back().multiplicity += m;
            continue;
        }
        out.spectrum.entries.push_back({t, m, std::cosh(t)});
    }
    out.spectrum.source = "recovered";
    return out;
}

}  // namespace hyperangle
