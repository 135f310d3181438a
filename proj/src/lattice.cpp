#include "hyperangle/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <tuple>
#include <string>

#include "hyperangle/errors.hpp"
#include "hyperangle/geometry.hpp"
#include "hyperangle/parallel.hpp"

namespace hyperangle {

namespace {

std::int64_t isqrt(std::int64_t v) {
    if (v <= 0) return 0;
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(v)));
    while (r * r > v) --r;
    while ((r + 1) * (r + 1) <= v) ++r;
    return r;
}

// Largest integer level x with 2x <= Q^2.
std::int64_t level_cap(double Q) {
    return static_cast<std::int64_t>(std::floor(0.5 * Q * Q * (1.0 + 1e-15)));
}

}  // namespace

Cone::Cone(std::vector<double> a, double th) : axis(std::move(a)), theta(th) {
    double nn = 0.0;
    for (double v : axis) nn += v * v;
    if (axis.size() < 2) throw UsageError("cone axis must have n >= 2 components");
    if (std::fabs(std::sqrt(nn) - 1.0) > 1e-12) {
        if (!(nn > 0.0)) throw UsageError("cone axis must be nonzero");
        for (double& v : axis) v /= std::sqrt(nn);
    }
    if (!(theta > 0.0 && theta <= std::numbers::pi)) throw UsageError("cone angle must lie in (0, pi]");
}

std::size_t OrbitDataset::count_within(double Qp) const {
    const double cut = 0.5 * Qp * Qp * (1.0 + 1e-15);
    std::size_t lo = 0, hi = size();
    while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (last(mid) <= cut) lo = mid + 1;
        else hi = mid;
    }
    return lo;
}

OrbitDataset make_dataset(int n, double Q, std::int64_t w, std::string source,
                          std::vector<double> coords, std::vector<std::int64_t> exact,
                          std::vector<std::int64_t> denom) {
    if (n < 2) throw UsageError("n must be >= 2");
    const std::size_t dim = n + 1;
    if (coords.size() % dim != 0) throw UsageError("coordinate array is not a multiple of n+1");
    const bool is_exact = !exact.empty();
    if (is_exact && (exact.size() != coords.size() || denom.size() != dim))
        throw UsageError("exact numerators do not match the coordinate array");
    const std::size_t N = coords.size() / dim;

    std::vector<std::size_t> order(N);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double* pa = coords.data() + a * dim;
        const double* pb = coords.data() + b * dim;
        if (pa[n] != pb[n]) return pa[n] < pb[n];
        return std::lexicographical_compare(pa, pa + n, pb, pb + n);
    });

    OrbitDataset ds;
    ds.n = n;
    ds.Q = Q;
    ds.w = w;
    ds.source = std::move(source);
    ds.coords.resize(coords.size());
    if (is_exact) {
        ds.exact.resize(exact.size());
        ds.denom = std::move(denom);
    }
    for (std::size_t i = 0; i < N; ++i) {
        std::copy_n(coords.data() + order[i] * dim, dim, ds.coords.data() + i * dim);
        if (is_exact) std::copy_n(exact.data() + order[i] * dim, dim, ds.exact.data() + i * dim);
    }
    ds.t.resize(N);
    ds.dirs.assign(N * n, 0.0);
    const double cut = 0.5 * Q * Q * (1.0 + 1e-12);
    for (std::size_t i = 0; i < N; ++i) {
        const double* p = ds.point(i);
        double sp = 0.0, sum_abs = 0.0;
        for (int j = 0; j < n; ++j) {
            sp += p[j] * p[j];
            sum_abs += std::fabs(p[j] * p[j]);
        }
        const double form = sp - p[n] * p[n];
        const double tol = 1e-9 + 8 * std::numeric_limits<double>::epsilon() * (sum_abs + p[n] * p[n]);
        if (!(std::fabs(form + 1.0) <= tol) || !(p[n] > 0.0))
            throw InvariantError("point " + std::to_string(i) + " is not on the hyperboloid");
        if (p[n] > cut)
            throw InvariantError("point " + std::to_string(i) + " lies outside the norm cutoff Q");
        if (i > 0) {
            const double* q = ds.point(i - 1);
            double d2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) d2 += (p[j] - q[j]) * (p[j] - q[j]);
            if (d2 <= 1e-18) throw InvariantError("duplicate orbit point " + std::to_string(i));
        }
        ds.t[i] = clamped_acosh(p[n]);
        const double norm = std::sqrt(sp);
        if (norm <= 1e-12) {
            if (ds.base_index >= 0) throw InvariantError("more than one base point");
            ds.base_index = static_cast<std::int64_t>(i);
        } else {
            for (int j = 0; j < n; ++j) ds.dirs[i * n + j] = p[j] / norm;
        }
    }
    return ds;
}

OrbitDataset enumerate_lorentz(int n, double Q, const EnumerateOptions& opt) {
    if (n < 2) throw UsageError("n must be >= 2");
    if (!(Q * Q >= 2.0)) throw UsageError("Q^2 must be >= 2");
    const double estimate = sphere_volume(n) * std::pow(Q, 2.0 * (n - 1)) /
                            (std::pow(2.0, n - 1) * (n - 1));
    if (estimate > static_cast<double>(opt.max_points))
        throw ResourceError("estimated " + std::to_string(static_cast<long long>(estimate)) +
                            " points exceed the cap of " + std::to_string(opt.max_points));
    const std::int64_t X = level_cap(Q);
    std::vector<std::vector<std::int64_t>> levels(X + 1);
    parallel_for(static_cast<std::size_t>(X), resolve_threads(opt.threads), [&](std::size_t idx) {
        const std::int64_t x = static_cast<std::int64_t>(idx) + 1;
        auto& out = levels[x];
        std::vector<std::int64_t> v(n + 1, 0);
        v[n] = x;
        // nested loops in ascending order give lexicographic output within a level
        auto rec = [&](auto&& self, int j, std::int64_t rem) -> void {
            if (j == n - 1) {
                const std::int64_t a = isqrt(rem);
                if (a * a != rem) return;
                v[j] = -a;
                out.insert(out.end(), v.begin(), v.end());
                if (a != 0) {
                    v[j] = a;
                    out.insert(out.end(), v.begin(), v.end());
                }
                return;
            }
            const std::int64_t s = isqrt(rem);
            for (std::int64_t a = -s; a <= s; ++a) {
                v[j] = a;
                self(self, j + 1, rem - a * a);
            }
        };
        rec(rec, 0, x * x - 1);
    });
    std::size_t total = 0;
    for (const auto& l : levels) total += l.size();
    if (total / (n + 1) > opt.max_points)
        throw ResourceError("enumeration produced more points than the cap");
    std::vector<std::int64_t> exact;
    exact.reserve(total);
    for (auto& l : levels) {
        exact.insert(exact.end(), l.begin(), l.end());
        std::vector<std::int64_t>().swap(l);
    }
    std::vector<double> coords(exact.begin(), exact.end());
    long long w = 1;
    for (int i = 1; i <= n; ++i) w *= 2 * i;  // 2^n n!
    return make_dataset(n, Q, w, "lorentz", std::move(coords), std::move(exact),
                        std::vector<std::int64_t>(n + 1, 1));
}

OrbitDataset psl2z_orbit(double Q, const EnumerateOptions& opt) {
    if (!(Q * Q >= 2.0)) throw UsageError("Q^2 must be >= 2");
    // gamma i has hyperboloid image ((a^2+b^2-c^2-d^2)/2, ac+bd, (a^2+b^2+c^2+d^2)/2)
    // and ||gamma||^2 = a^2+b^2+c^2+d^2. Enumerate bottom rows (c, d) up to sign,
    // then all top rows (a0 + j c, b0 + j d) inside the ball; each point is hit
    // exactly twice (gamma and gamma S) and deduplicated.
    const std::int64_t N2 = static_cast<std::int64_t>(std::floor(Q * Q * (1.0 + 1e-15)));
    const double estimate = 3.0 / 2.0 * Q * Q;
    if (estimate > static_cast<double>(opt.max_points))
        throw ResourceError("estimated orbit size exceeds the point cap");
    struct Key {
        std::int64_t x1, x2, x3;  // 2X_1, X_2, 2X_3
        bool operator<(const Key& o) const {
            if (x3 != o.x3) return x3 < o.x3;
            if (x1 != o.x1) return x1 < o.x1;
            return x2 < o.x2;
        }
        bool operator==(const Key& o) const { return x1 == o.x1 && x2 == o.x2 && x3 == o.x3; }
    };
    std::vector<Key> keys;
    auto emit = [&](std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
        const std::int64_t s = a * a + b * b, r = c * c + d * d;
        keys.push_back({s - r, a * c + b * d, s + r});
        if (keys.size() > 2 * opt.max_points) throw ResourceError("orbit enumeration exceeds the point cap");
    };
    for (std::int64_t b = -isqrt(N2 - 2); b <= isqrt(N2 - 2); ++b) emit(1, b, 0, 1);
    for (std::int64_t c = 1; c * c + 1 <= N2; ++c) {
        const std::int64_t D = isqrt(N2 - 1 - c * c);
        for (std::int64_t d = -D; d <= D; ++d) {
            if (std::gcd(c, d) != 1) continue;
            // a0 d - b0 c = 1 from the extended Euclidean algorithm on (d, c)
            std::int64_t r0 = d, r1 = c, s0 = 1, s1 = 0, t0 = 0, t1 = 1;
            while (r1 != 0) {
                const std::int64_t q = r0 / r1;
                std::tie(r0, r1) = std::make_pair(r1, r0 - q * r1);
                std::tie(s0, s1) = std::make_pair(s1, s0 - q * s1);
                std::tie(t0, t1) = std::make_pair(t1, t0 - q * t1);
            }
            // s0 d + t0 c = r0 = +-1
            std::int64_t a0 = s0 * r0, b0 = -t0 * r0;
            const std::int64_t r = c * c + d * d;
            const std::int64_t budget = N2 - r;
            const double jc = -static_cast<double>(a0 * c + b0 * d) / static_cast<double>(r);
            const std::int64_t jstar = static_cast<std::int64_t>(std::llround(jc));
            a0 += jstar * c;
            b0 += jstar * d;
            for (std::int64_t j = 0;; ++j) {
                const std::int64_t a = a0 + j * c, b = b0 + j * d;
                if (a * a + b * b > budget) break;
                emit(a, b, c, d);
            }
            for (std::int64_t j = -1;; --j) {
                const std::int64_t a = a0 + j * c, b = b0 + j * d;
                if (a * a + b * b > budget) break;
                emit(a, b, c, d);
            }
        }
    }
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    std::vector<std::int64_t> exact;
    std::vector<double> coords;
    exact.reserve(keys.size() * 3);
    coords.reserve(keys.size() * 3);
    for (const Key& k : keys) {
        exact.insert(exact.end(), {k.x1, k.x2, k.x3});
        coords.insert(coords.end(), {0.5 * k.x1, static_cast<double>(k.x2), 0.5 * k.x3});
    }
    return make_dataset(2, Q, 2, "psl2z", std::move(coords), std::move(exact), {2, 1, 2});
}

OrbitDataset cone_filter(const OrbitDataset& ds, const Cone& cone) {
    if (static_cast<int>(cone.axis.size()) != ds.n) throw UsageError("cone axis dimension differs from n");
    const std::size_t dim = ds.n + 1;
    OrbitDataset out;
    out.n = ds.n;
    out.Q = ds.Q;
    out.V_eff = ds.V_eff;
    out.w = ds.w;
    out.source = ds.source;
    out.cone = cone;
    out.denom = ds.denom;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.is_base(i)) continue;
        if (cone.theta < std::numbers::pi && !(vector_angle(ds.dir(i), cone.axis.data(), ds.n) < cone.theta)) continue;
        out.coords.insert(out.coords.end(), ds.point(i), ds.point(i) + dim);
        if (ds.is_exact())
            out.exact.insert(out.exact.end(), ds.exact.begin() + i * dim, ds.exact.begin() + (i + 1) * dim);
        out.t.push_back(ds.t[i]);
        out.dirs.insert(out.dirs.end(), ds.dir(i), ds.dir(i) + ds.n);
    }
    return out;
}

std::uint64_t LevelCounts::total_within(double Qp) const {
    const std::int64_t X = std::min(level_cap(Qp), x_max());
    std::uint64_t s = 0;
    for (std::int64_t x = 1; x <= X; ++x) s += count[x];
    return s;
}

LevelCounts lorentz_level_counts(int n, std::int64_t x_max) {
    if (n < 2) throw UsageError("n must be >= 2");
    if (x_max < 1) throw UsageError("x_max must be >= 1");
    const std::int64_t M = x_max * x_max - 1;
    if (M > 400'000'000) throw ResourceError("level table too large");
    // r_2(m) for every m <= M
    std::vector<std::uint16_t> r2(M + 1, 0);
    for (std::int64_t a = 0; a * a <= M; ++a)
        for (std::int64_t b = 0; a * a + b * b <= M; ++b)
            r2[a * a + b * b] += static_cast<std::uint16_t>((a > 0 ? 2 : 1) * (b > 0 ? 2 : 1));
    LevelCounts lc;
    lc.n = n;
    lc.count.assign(x_max + 1, 0);
    if (n == 2) {
        for (std::int64_t x = 1; x <= x_max; ++x) lc.count[x] = r2[x * x - 1];
        return lc;
    }
    // r_j for 3 <= j <= n-1 as full tables, then the last sum per level
    std::vector<std::uint64_t> prev, cur;
    if (n >= 4) {
        const double cost = std::pow(static_cast<double>(M), 1.5) * (n - 3);
        if (cost > 2e10) throw ResourceError("level counting for this n and cutoff is too expensive");
        prev.assign(r2.begin(), r2.end());
        for (int j = 3; j <= n - 1; ++j) {
            cur.assign(M + 1, 0);
            for (std::int64_t m = 0; m <= M; ++m) {
                std::uint64_t s = 0;
                for (std::int64_t a = 0; a * a <= m; ++a) s += (a > 0 ? 2 : 1) * prev[m - a * a];
                cur[m] = s;
            }
            prev.swap(cur);
        }
    }
    for (std::int64_t x = 1; x <= x_max; ++x) {
        const std::int64_t m = x * x - 1;
        std::uint64_t s = 0;
        for (std::int64_t a = 0; a * a <= m; ++a)
            s += (a > 0 ? 2 : 1) * (n == 3 ? r2[m - a * a] : prev[m - a * a]);
        lc.count[x] = s;
    }
    return lc;
}

CovolumeFit fit_covolume(const std::function<double(double)>& count, int n, double Q_lo,
                         double Q_hi, int samples) {
    if (!(Q_lo > 0.0 && Q_hi > Q_lo) || samples < 2) throw UsageError("invalid calibration range");
    if (count(Q_lo) < 100.0) throw PreconditionError("fewer than 100 points below Q_lo");
    CovolumeFit fit;
    std::vector<double> a;
    for (int i = 0; i < samples; ++i) {
        const double q = Q_lo * std::pow(Q_hi / Q_lo, i / (samples - 1.0));
        fit.q.push_back(q);
        a.push_back(count(q) / vol_ball(q, n));
    }
    // minimize sum (V a_i - 1)^2
    double s1 = 0.0, s2 = 0.0;
    for (double v : a) {
        s1 += v;
        s2 += v * v;
    }
    fit.V = s1 / s2;
    double ss = 0.0;
    for (double v : a) {
        const double r = fit.V * v - 1.0;
        fit.ratio.push_back(fit.V * v);
        ss += r * r;
        fit.max_rel = std::max(fit.max_rel, std::fabs(r));
    }
    fit.rel_rms = std::sqrt(ss / samples);
    return fit;
}

CovolumeFit effective_covolume(OrbitDataset& ds, double Q_lo, double Q_hi, int samples) {
    if (ds.size() < 2) throw PreconditionError("dataset has too few points to calibrate");
    if (Q_hi > ds.Q * (1.0 + 1e-12)) throw PreconditionError("calibration range exceeds dataset cutoff");
    CovolumeFit fit = fit_covolume(
        [&](double q) { return static_cast<double>(ds.count_within(q)); }, ds.n, Q_lo, Q_hi, samples);
    ds.V_eff = fit.V;
    return fit;
}

DistanceSpectrum distance_spectrum(const OrbitDataset& ds, double t_max) {
    const double tQ = std::acosh(std::max(1.0, 0.5 * ds.Q * ds.Q));
    if (t_max > tQ * (1.0 + 1e-12) + 1e-12)
        throw PreconditionError("t_max exceeds the dataset cutoff arccosh(Q^2/2)");
    DistanceSpectrum spec;
    spec.source = ds.source;
    spec.exact = ds.is_exact();
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.is_base(i) || ds.t[i] > t_max || ds.t[i] <= 1e-9) continue;
        if (!spec.entries.empty()) {
            auto& back = spec.entries.back();
            const bool same = spec.exact ? back.cosh_t == ds.last(i) : ds.t[i] - back.t <= 1e-9;
            if (same) {
                ++back.multiplicity;
                continue;
            }
        }
        spec.entries.push_back({ds.t[i], 1, ds.last(i)});
    }
    return spec;
}

DistanceSpectrum distance_spectrum(const LevelCounts& lc, double t_max) {
    DistanceSpectrum spec;
    spec.source = "lorentz-levels";
    spec.exact = true;
    for (std::int64_t x = 2; x <= lc.x_max(); ++x) {
        const double t = std::acosh(static_cast<double>(x));
        if (t > t_max) break;
        if (lc.count[x] > 0) spec.entries.push_back({t, lc.count[x], static_cast<double>(x)});
    }
    return spec;
}

}  // namespace hyperangle
