#include "hyperangle/density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "hyperangle/errors.hpp"
#include "hyperangle/parallel.hpp"

namespace hyperangle {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Above this l every f value underflows far below any tolerance.
constexpr double kMaxL = 350.0;

double ipow(double x, int m) {
    double r = 1.0;
    for (int i = 0; i < m; ++i) r *= x;
    return r;
}

void require_n(int n) {
    if (n < 2) throw UsageError("dimension n must be >= 2, got " + std::to_string(n));
}

// All derived quantities of (xi, l), with the offsets 1 + lambda_-, 1 + lambda_+
// and 1 - alpha evaluated without cancellation.
struct Params {
    double xi, l, A, B, C, em, eps;
    Branch br;
    double s = 0, alpha = 0, oma = 0, u_lm = 0, u_lp = 0, x = 0;
};

Params params(double xi, double l) {
    Params p{};
    p.xi = xi;
    p.l = l;
    p.A = std::cosh(l);
    p.B = std::sinh(l);
    p.C = 2.0 * std::sinh(0.5 * l);
    p.em = std::exp(-l);
    p.eps = p.em / p.B;  // coth l - 1
    p.br = xi <= p.C ? Branch::small : (xi <= p.B ? Branch::middle : Branch::large);
    if (p.br != Branch::large) {
        const double xi2 = xi * xi;
        p.s = std::sqrt((p.B - xi) * (p.B + xi));
        p.alpha = p.s / p.B;
        p.oma = (xi2 / (p.B * p.B)) / (1.0 + p.alpha);
        p.u_lm = xi2 * (p.oma + p.em * p.em * (1.0 + p.alpha)) /
                 (2.0 * p.B * p.B * (1.0 + p.alpha) * (xi2 + 1.0));
        p.u_lp = ((1.0 + p.alpha) - xi2 * p.eps) / (xi2 + 1.0);
        p.x = xi2 * p.em / (p.B + p.s);  // 1 - (A + s) e^{-l}
    }
    return p;
}

void check_args(double xi, double l) {
    if (!(xi > 0.0) || !std::isfinite(xi)) throw UsageError("xi must be positive and finite");
    if (!(l > 0.0) || !std::isfinite(l)) throw UsageError("l must be positive and finite");
}

std::vector<double> geometric_points(double a, double b, double scale, double factor) {
    std::vector<double> pts{a};
    if (scale > 0.0)
        for (double p = scale; p < b; p *= factor)
            if (p > a) pts.push_back(p);
    pts.push_back(b);
    return pts;
}

double piece(const std::function<double(double)>& g, const std::vector<double>& pts,
             const QuadSettings& q, double& err) {
    if (!(pts.back() > pts.front())) return 0.0;
    QuadResult r = integrate_adaptive(g, pts, q);
    if (!r.converged) throw NumericalError("quadrature of f did not converge", r.error);
    err += r.error;
    return r.value;
}

struct Closed {
    double value;
    double cond;
};

// l coth l - 1 without cancellation at small l.
double lcoth_minus_one(double l) {
    if (l < 0.25) {
        const double z = l * l;
        return z * (1.0 / 3 + z * (-1.0 / 45 + z * (2.0 / 945 + z * (-1.0 / 4725 +
               z * (2.0 / 93555 + z * (-1382.0 / 638512875))))));
    }
    return l / std::tanh(l) - 1.0;
}

Closed closed_form(double xi, double l, int n) {
    const Params p = params(xi, l);
    const double xi2 = xi * xi;
    if (n == 2) {
        const double pre = 2.0 / xi2;
        switch (p.br) {
            case Branch::small:
                return {pre * -std::log1p(-p.x), 1.0};
            case Branch::middle: {
                const double t1 = std::log1p(xi2), t2 = -l, t3 = -2.0 * std::log1p(-p.x);
                const double sum = t1 + t2 + t3;
                return {pre * sum, (std::fabs(t1) + std::fabs(t2) + std::fabs(t3)) / std::fabs(sum)};
            }
            case Branch::large:
                return {pre * l, 1.0};
        }
    }
    if (n == 3) {
        const double pre = 4.0 / (xi2 * xi);
        const double AoB = p.A / p.B;
        switch (p.br) {
            case Branch::small: {
                const double L = -std::log1p(-p.x);
                const double t1 = AoB * L;
                const double t2 = xi2 * p.em / (2.0 * p.B * (xi2 + 1.0));
                const double t3 = -xi2 * (xi2 + 2.0) / ((p.B + p.s) * 2.0 * p.B * (xi2 + 1.0));
                const double sum = t1 + t2 + t3;
                return {pre * sum, (std::fabs(t1) + std::fabs(t2) + std::fabs(t3)) / std::fabs(sum)};
            }
            case Branch::middle: {
                const double t1 = AoB * (std::log1p(xi2) - l - 2.0 * std::log1p(-p.x));
                const double t2 = (xi2 + 2.0) * p.s / (p.B * (xi2 + 1.0));
                const double t3 = -1.0;
                const double sum = t1 + t2 + t3;
                return {pre * sum, (std::fabs(t1) + std::fabs(t2) + std::fabs(t3)) / std::fabs(sum)};
            }
            case Branch::large:
                return {pre * lcoth_minus_one(l), 1.0};
        }
    }
    throw UsageError("closed forms exist only for n = 2 and n = 3");
}

}  // namespace

double sphere_volume(int j) {
    if (j < 1) throw UsageError("sphere_volume needs j >= 1");
    return 2.0 * std::pow(kPi, 0.5 * j) / std::tgamma(0.5 * j);
}

double unit_ball_volume(int j) { return sphere_volume(j) / j; }

DensityContext DensityContext::make(int n, double V_eff, QuadSettings quad, int threads) {
    require_n(n);
    if (!(V_eff > 0.0) || !std::isfinite(V_eff)) throw UsageError("V_eff must be positive");
    DensityContext c;
    c.n = n;
    c.V_eff = V_eff;
    c.k = std::pow((n - 1) * V_eff / unit_ball_volume(n - 1), 1.0 / (n - 1));
    c.quad = quad;
    c.threads = threads;
    return c;
}

ABC abc_of(double l) {
    if (!(l > 0.0)) throw UsageError("abc_of requires l > 0");
    return {std::cosh(l), std::sinh(l), 2.0 * std::sinh(0.5 * l)};
}

double IntervalUnion::total_length() const {
    double s = 0.0;
    for (const auto& i : intervals) s += i.hi - i.lo;
    return s;
}

bool IntervalUnion::contains(double y) const {
    for (const auto& i : intervals) {
        const bool lo_ok = i.lo_closed ? y >= i.lo : y > i.lo;
        const bool hi_ok = i.hi_closed ? y <= i.hi : y < i.hi;
        if (lo_ok && hi_ok) return true;
    }
    return false;
}

Branch branch_of(double xi, double l) {
    check_args(xi, l);
    return params(xi, l).br;
}

IntervalUnion interval_set(double xi, double l) {
    check_args(xi, l);
    const Params p = params(xi, l);
    IntervalUnion out;
    switch (p.br) {
        case Branch::large:
            out.intervals.push_back({-1.0, 1.0, true, true});
            break;
        case Branch::small:
            out.intervals.push_back({-1.0, -1.0 + p.u_lm, true, false});
            out.intervals.push_back({p.alpha, 1.0, false, true});
            break;
        case Branch::middle: {
            const double lm = -1.0 + p.u_lm, lp = -1.0 + p.u_lp;
            if (!(lm < lp + 1e-12 && lp < -p.alpha + 1e-12 && -p.alpha < p.alpha))
                throw InvariantError("interval endpoints out of order in the middle branch");
            out.intervals.push_back({-1.0, lm, true, false});
            if (lp < -p.alpha) out.intervals.push_back({lp, -p.alpha, false, false});
            out.intervals.push_back({p.alpha, 1.0, false, true});
            break;
        }
    }
    return out;
}

double f_xi_quadrature(double xi, double l, int n, const QuadSettings& quad) {
    check_args(xi, l);
    require_n(n);
    if (l > kMaxL) return 0.0;
    const Params p = params(xi, l);
    const int m = n - 1;
    const double eps = p.eps;
    // y = -1 + u and y = 1 - s keep both ends of [-1, 1] free of cancellation
    auto left = [&](double u) { return ipow(u * (2.0 - u), n - 2) / ipow(u + eps, m); };
    auto right = [&](double s) { return ipow(s * (2.0 - s), n - 2) / ipow(2.0 - s + eps, m); };
    QuadSettings q = quad;
    q.abs_tol = quad.abs_tol * ipow(xi, n);
    const double split = eps < 1e-3 ? eps : 0.0;
    double err = 0.0, total = 0.0;
    switch (p.br) {
        case Branch::large:
            total += piece(left, geometric_points(0.0, 2.0, split, 8.0), q, err);
            break;
        case Branch::middle:
            total += piece(left, geometric_points(0.0, p.u_lm, split, 8.0), q, err);
            if (p.u_lp < p.oma) total += piece(left, {p.u_lp, p.oma}, q, err);
            total += piece(right, {0.0, p.oma}, q, err);
            break;
        case Branch::small:
            total += piece(left, geometric_points(0.0, p.u_lm, split, 8.0), q, err);
            total += piece(right, {0.0, p.oma}, q, err);
            break;
    }
    return total / ipow(xi, n);
}

double f_xi_closed(double xi, double l, int n) {
    check_args(xi, l);
    return closed_form(xi, l, n).value;
}

double f_xi(double xi, double l, const DensityContext& ctx, FMethod method) {
    check_args(xi, l);
    if (l > kMaxL) return 0.0;
    const int n = ctx.n;
    if (method == FMethod::quadrature || (method == FMethod::automatic && n > 3))
        return f_xi_quadrature(xi, l, n, ctx.quad);
    const Closed c = closed_form(xi, l, n);
    if (method == FMethod::closed_form) return c.value;
    // cancellation between the closed-form terms costs log10(cond) digits
    if (std::isfinite(c.value) && c.value >= 0.0 && c.cond < 1e5) return c.value;
    return f_xi_quadrature(xi, l, n, ctx.quad);
}

double F_cumulative(double xi, double l, const DensityContext& ctx) {
    if (!(xi > 0.0)) {
        if (xi == 0.0) return 0.0;
        throw UsageError("xi must be nonnegative");
    }
    check_args(xi, l);
    if (l > kMaxL) return 0.0;
    const int n = ctx.n;
    const int m = n - 1;
    const Params p = params(xi, l);
    const double B = p.B, em = p.em;
    // y = -cos(phi): the weight (1-y^2)^{(n-3)/2} dy becomes sin^{n-2}(phi) dphi
    auto integrand = [&](double phi, bool upper_is_one) {
        const double h = std::sin(0.5 * phi);
        const double u = 2.0 * h * h;
        const double sp = std::sin(phi);
        const double den = em + B * u;  // A + B y
        const double r = B * sp / (xi * den);
        const double top = upper_is_one ? 1.0 : ipow(1.0 / den, m);
        return std::max(0.0, ipow(sp, n - 2) * (top - ipow(r, m)));
    };
    auto g1 = [&](double phi) { return integrand(phi, true); };
    auto g2 = [&](double phi) { return integrand(phi, false); };
    auto phi_u = [](double u) { return 2.0 * std::asin(std::sqrt(std::min(1.0, 0.5 * u))); };
    auto phi_s = [](double s) { return kPi - 2.0 * std::asin(std::sqrt(std::min(1.0, 0.5 * s))); };
    const double u0 = 2.0 / (std::exp(l) + 1.0);  // 1 + (1 - A)/B
    const double scale = std::sqrt(2.0 * em / B);
    const double split = scale < 1e-2 ? scale : 0.0;
    double err = 0.0, total = 0.0;
    const QuadSettings& q = ctx.quad;
    switch (p.br) {
        case Branch::small:
            total += piece(g1, geometric_points(0.0, phi_u(p.u_lm), split, 4.0), q, err);
            total += piece(g2, {phi_s(p.oma), kPi}, q, err);
            break;
        case Branch::middle:
            total += piece(g1, geometric_points(0.0, phi_u(p.u_lm), split, 4.0), q, err);
            if (p.u_lp < u0) total += piece(g1, {phi_u(p.u_lp), phi_u(u0)}, q, err);
            total += piece(g2, {phi_u(std::max(u0, p.u_lp)), phi_u(p.oma)}, q, err);
            total += piece(g2, {phi_s(p.oma), kPi}, q, err);
            break;
        case Branch::large:
            total += piece(g1, geometric_points(0.0, phi_u(u0), split, 4.0), q, err);
            total += piece(g2, {phi_u(u0), kPi}, q, err);
            break;
    }
    return total / m;
}

double F_cumulative_by_zeta(double xi, double l, const DensityContext& ctx) {
    if (xi == 0.0) return 0.0;
    check_args(xi, l);
    const auto [k1, k2] = kink_locations(l);
    QuadSettings q = ctx.quad;
    q.max_subdiv = std::max(q.max_subdiv, 2000);
    return integrate([&](double z) { return z > 0.0 ? f_xi(z, l, ctx) : 0.0; }, 0.0, xi, q,
                     {k1, k2});
}

double big_F(double xi, double t, const DensityContext& ctx) {
    const int n = ctx.n;
    const double pre = (n - 1) * sphere_volume(n - 1) * ctx.k / sphere_volume(n);
    return pre * f_xi(xi * ctx.k, t, ctx);
}

std::pair<double, double> kink_locations(double l) {
    if (l < 0.0) throw UsageError("kink_locations requires l >= 0");
    const double c = 2.0 * std::sinh(0.5 * l), b = std::sinh(l);
    return {std::min(c, b), std::max(c, b)};
}

void DistanceSpectrum::validate() const {
    double prev = 0.0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (!(e.t > 1e-9)) throw InvariantError("spectrum entry with t <= 1e-9");
        if (i > 0 && !(e.t > prev)) throw InvariantError("spectrum t values not strictly increasing");
        if (e.multiplicity == 0) throw InvariantError("spectrum entry with zero multiplicity");
        prev = e.t;
    }
}

double norm_of_t(double t) { return std::sqrt(2.0 * std::cosh(t)); }

namespace {

// integral_{t0}^{inf} sinh^{-m}(t) dt, bounded using sinh t >= e^t (1 - e^{-2 t0}) / 2.
double csch_power_tail(double t0, int m) {
    return ipow(2.0 / (1.0 - std::exp(-2.0 * t0)), m) * std::exp(-m * t0) / m;
}

struct Selection {
    std::vector<const SpectrumEntry*> used;
    double T;
    double t_cut;
};

Selection select_entries(const DistanceSpectrum& spec, std::optional<double> T) {
    Selection s{{}, 0.0, 0.0};
    if (spec.entries.empty()) {
        s.T = T.value_or(0.0);
        return s;
    }
    const double tmin = spec.entries.front().t;
    s.T = T.value_or(norm_of_t(spec.max_t()));
    if (s.T < norm_of_t(tmin) * (1.0 - 1e-12))
        throw PreconditionError("truncation T is below the norm of the smallest spectrum entry");
    const double tT = std::acosh(std::max(1.0, 0.5 * s.T * s.T));
    for (const auto& e : spec.entries)
        if (e.t <= tT * (1.0 + 1e-12)) s.used.push_back(&e);
    s.t_cut = std::min(tT, spec.max_t());
    return s;
}

double g2_tail(double xi, const Selection& s, const DensityContext& ctx) {
    if (s.used.empty()) return 0.0;
    const int n = ctx.n;
    const double xk = xi * ctx.k;
    if (xk > 2.0 * std::sinh(0.5 * s.t_cut)) return kInf;
    const double pre = (n - 1) * sphere_volume(n - 1) * ctx.k / sphere_volume(n);
    return pre * kappa2(n) * ipow(xk, n - 2) * (sphere_volume(n) / ctx.V_eff) *
           csch_power_tail(s.t_cut, n - 1);
}

}  // namespace

SumResult g2_theoretical(double xi, const DistanceSpectrum& spec, const DensityContext& ctx,
                         std::optional<double> T) {
    if (!(xi > 0.0)) throw UsageError("xi must be positive");
    const Selection s = select_entries(spec, T);
    SumResult out;
    out.truncation = s.T;
    out.terms = s.used.size();
    if (s.used.empty()) return out;
    std::vector<double> terms(s.used.size());
    parallel_for(terms.size(), resolve_threads(ctx.threads), [&](std::size_t i) {
        terms[i] = static_cast<double>(s.used[i]->multiplicity) * big_F(xi, s.used[i]->t, ctx);
    });
    out.value = pairwise_sum(terms);
    out.tail_estimate = g2_tail(xi, s, ctx);
    return out;
}

SumResult r2_theoretical(double xi, const DistanceSpectrum& spec, const DensityContext& ctx,
                         std::optional<double> T) {
    if (xi < 0.0) throw UsageError("xi must be nonnegative");
    const Selection s = select_entries(spec, T);
    SumResult out;
    out.truncation = s.T;
    out.terms = s.used.size();
    if (s.used.empty() || xi == 0.0) return out;
    const int n = ctx.n;
    const double pre = (n - 1) * sphere_volume(n - 1) / sphere_volume(n);
    std::vector<double> terms(s.used.size());
    parallel_for(terms.size(), resolve_threads(ctx.threads), [&](std::size_t i) {
        terms[i] = static_cast<double>(s.used[i]->multiplicity) *
                   F_cumulative(xi * ctx.k, s.used[i]->t, ctx);
    });
    out.value = pre * pairwise_sum(terms);
    out.tail_estimate = g2_tail(xi, s, ctx) * xi / (n - 1);
    return out;
}

SumResult g2_zero_limit_n2(const DistanceSpectrum& spec, double V_eff, int n) {
    if (n != 2) throw UsageError("the small-xi limit formula is specific to n = 2");
    SumResult out;
    out.terms = spec.entries.size();
    if (spec.entries.empty()) return out;
    std::vector<double> terms;
    terms.reserve(spec.entries.size());
    for (const auto& e : spec.entries)
        terms.push_back(static_cast<double>(e.multiplicity) / std::expm1(2.0 * e.t));
    out.value = V_eff / kPi * pairwise_sum(terms);
    // with point density 2 pi sinh t / V_eff beyond t_max the remainder is e^{-t_max}
    out.tail_estimate = std::exp(-spec.max_t());
    out.truncation = norm_of_t(spec.max_t());
    return out;
}

double vol_ball(double Q, int n) {
    require_n(n);
    const double q2 = Q * Q;
    if (!(q2 >= 2.0 * (1.0 - 1e-15))) throw UsageError("vol_ball requires Q^2 >= 2");
    if (n == 2) return kPi * std::max(0.0, q2 - 2.0);
    const double T = std::acosh(std::max(1.0, 0.5 * q2));
    const int m = n - 1;
    double S;
    if (T >= 1.0) {
        // S_j = sinh^{j-1} T cosh T / j - (j-1)/j S_{j-2}
        const double sh = std::sinh(T), ch = std::cosh(T);
        double s_even = T, s_odd = ch - 1.0;
        for (int j = 2; j <= m; ++j) {
            double& prev = (j % 2 == 0) ? s_even : s_odd;
            prev = ipow(sh, j - 1) * ch / j - (j - 1.0) / j * prev;
        }
        S = (m % 2 == 0) ? s_even : s_odd;
    } else {
        S = integrate([&](double t) { return ipow(std::sinh(t), m); }, 0.0, T, {});
    }
    return sphere_volume(n) * S;
}

namespace {

void check_volume_args(double Q, double xi, double t_M) {
    if (!(Q * Q >= 2.0)) throw UsageError("Q^2 must be >= 2");
    if (!(xi > 0.0)) throw UsageError("xi must be positive");
    if (!(t_M > 0.0)) throw UsageError("t_M must be positive");
    if (!(xi / (Q * Q) < 0.01)) throw PreconditionError("xi / Q^2 must be below 0.01");
}

// integral_0^v sin^j, j >= 0
double sin_power_integral(int j, double v) {
    if (j == 0) return v;
    if (j == 1) return 1.0 - std::cos(v);
    const double s = std::sin(v), c = std::cos(v);
    return -ipow(s, j - 1) * c / j + (j - 1.0) / j * sin_power_integral(j - 2, v);
}

template <class F>
double bisect_increasing(F f, double lo, double hi, double target) {
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < target ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

VolumeEstimate vol_RM_main(double Q, double xi, double t_M, const DensityContext& ctx) {
    check_volume_args(Q, xi, t_M);
    const int n = ctx.n;
    const int m = n - 1;
    VolumeEstimate out;
    out.value = sphere_volume(m) * ipow(Q * Q, m) / ipow(2.0, m) * F_cumulative(xi, t_M, ctx);
    const double g = ipow(xi, m) + ipow(1.0 / xi, m);
    out.error_scale = g * ipow(2.0 * std::cosh(t_M), m) * std::pow(Q, 2.0 * m * m / (n + 1.0));
    return out;
}

VolumeEstimate vol_RM_numeric(double Q, double xi, double t_M, const DensityContext& ctx) {
    check_volume_args(Q, xi, t_M);
    const int n = ctx.n;
    const double q2h = 0.5 * Q * Q;
    const double T = std::acosh(q2h);
    const double AM = std::cosh(t_M), BM = std::sinh(t_M);
    const double phi0 = 2.0 * xi / (Q * Q);
    // Inner integral over v in closed form: the norm condition is v >= v_N and
    // the angle condition is a union of at most two end intervals of [0, pi].
    auto inner = [&](double t) -> double {
        const double st = std::sinh(t), ct = std::cosh(t);
        if (st <= 0.0) return 0.0;
        const double cN = (q2h - AM * ct) / (BM * st);
        if (cN < -1.0) return 0.0;
        const double vN = cN >= 1.0 ? 0.0 : std::acos(cN);
        const double a = BM * ct, c = AM * st;
        auto F = [&](double v) { return std::atan2(BM * std::sin(v), c + a * std::cos(v)); };
        double seg[2][2];
        int nseg = 0;
        if (c > a) {
            const double vpk = std::acos(-a / c);
            if (F(vpk) < phi0) {
                seg[nseg][0] = 0.0;
                seg[nseg++][1] = kPi;
            } else {
                seg[nseg][0] = 0.0;
                seg[nseg++][1] = bisect_increasing(F, 0.0, vpk, phi0);
                auto negF = [&](double v) { return -F(v); };
                seg[nseg][0] = bisect_increasing(negF, vpk, kPi, -phi0);
                seg[nseg++][1] = kPi;
            }
        } else {
            seg[nseg][0] = 0.0;
            seg[nseg++][1] = bisect_increasing(F, 0.0, kPi, phi0);
        }
        double S = 0.0;
        for (int i = 0; i < nseg; ++i) {
            const double lo = std::max(seg[i][0], vN), hi = seg[i][1];
            if (hi > lo) S += sin_power_integral(n - 2, hi) - sin_power_integral(n - 2, lo);
        }
        return sphere_volume(n - 1) * ipow(st, n - 1) * S;
    };
    std::vector<double> pts{0.0, T};
    for (double b : {t_M, T - t_M, std::asinh(BM / std::sin(phi0))})
        if (b > 0.0 && b < T) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    QuadSettings q = ctx.quad;
    q.max_subdiv = std::max(q.max_subdiv, 4000);
    q.rel_tol = std::max(q.rel_tol, 1e-9);
    // bisection noise in the inner set is relative to the whole ball
    q.abs_tol = std::max(q.abs_tol, 1e-13 * vol_ball(Q, n));
    const QuadResult r = integrate_adaptive(inner, pts, q);
    if (!r.converged) throw NumericalError("volume quadrature did not converge", r.error);
    VolumeEstimate out;
    out.value = r.value;
    out.achieved_error = r.error;
    const int m = n - 1;
    out.error_scale = (ipow(xi, m) + ipow(1.0 / xi, m)) * ipow(2.0 * AM, m) *
                      std::pow(Q, 2.0 * m * m / (n + 1.0));
    return out;
}

GIntegral integral_f_over_G(double xi, const DensityContext& ctx) {
    if (!(xi > 0.0)) throw UsageError("xi must be positive");
    const int n = ctx.n;
    const int m = n - 1;
    const double wn = sphere_volume(n);
    const double lC = 2.0 * std::asinh(0.5 * xi), lB = std::asinh(xi);
    const double reference = wn * ipow(xi, n - 2) / (m * m);
    const double target = std::max(ctx.quad.abs_tol, ctx.quad.rel_tol * reference);
    auto tail = [&](double L) { return kappa2(n) * ipow(xi, n - 2) * wn * csch_power_tail(L, m); };
    double L = std::max(lC, lB) + 1.0;
    while (tail(L) > target && L < kMaxL) L += 0.5;
    auto integrand = [&](double l) {
        if (l <= 0.0) return 0.0;
        return f_xi(xi, l, ctx) * ipow(std::sinh(l), m);
    };
    std::vector<double> pts{0.0, std::min(lC, lB), std::max(lC, lB)};
    for (double b = std::max(lC, lB) + 2.0; b < L; b += 2.0) pts.push_back(b);
    pts.push_back(L);
    QuadSettings q = ctx.quad;
    q.max_subdiv = std::max(q.max_subdiv, 1000);
    const QuadResult r = integrate_adaptive(integrand, pts, q);
    if (!r.converged) throw NumericalError("integral of f over G did not converge", r.error);
    return {wn * r.value, tail(L), L};
}

namespace {

// Frozen output of fit_kappa1 / fit_kappa2 (grid 48) for n = 2..6.
constexpr double kKappa1[] = {0, 0, 2.05875, 3.23573, 5.5914, 10.436, 19.8973};
constexpr double kKappa2[] = {0, 0, 0.800497, 0.237274, 0.0919968, 0.0399586, 0.0184673};

std::vector<double> geom_grid(double lo, double hi, int count) {
    std::vector<double> g(count);
    for (int i = 0; i < count; ++i) g[i] = lo * std::pow(hi / lo, i / (count - 1.0));
    return g;
}

}  // namespace

double fit_kappa1(int n, int grid) {
    require_n(n);
    const DensityContext ctx = DensityContext::make(n, 1.0);
    double worst = 0.0;
    for (double xi : geom_grid(0.1, 100.0, grid))
        for (double l : geom_grid(0.01, 20.0, grid))
            worst = std::max(worst, f_xi(xi, l, ctx) * ipow(xi, n) / (1.0 + l));
    return 1.25 * worst;
}

double fit_kappa2(int n, int grid) {
    require_n(n);
    const DensityContext ctx = DensityContext::make(n, 1.0);
    double worst = 0.0;
    for (double xi : geom_grid(0.1, 100.0, grid))
        for (double l : geom_grid(2.0 * std::asinh(0.05), 20.0, grid)) {
            if (xi > 2.0 * std::sinh(0.5 * l)) continue;
            const double B = std::sinh(l);
            worst = std::max(worst, f_xi(xi, l, ctx) / (ipow(xi, n - 2) / ipow(B, 2 * (n - 1))));
        }
    return 1.25 * worst;
}

double kappa1(int n) {
    require_n(n);
    if (n <= 6) return kKappa1[n];
    static thread_local std::vector<double> cache(64, 0.0);
    if (n < 64 && cache[n] == 0.0) cache[n] = fit_kappa1(n);
    return n < 64 ? cache[n] : fit_kappa1(n);
}

double kappa2(int n) {
    require_n(n);
    if (n <= 6) return kKappa2[n];
    static thread_local std::vector<double> cache(64, 0.0);
    if (n < 64 && cache[n] == 0.0) cache[n] = fit_kappa2(n);
    return n < 64 ? cache[n] : fit_kappa2(n);
}

}  // namespace hyperangle
