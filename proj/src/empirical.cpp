#include <algorithm>
#include <cmath>
#include <numeric>

#include "hyperangle/empirical.hpp"
#include "hyperangle/errors.hpp"
#include "hyperangle/geometry.hpp"
#include "hyperangle/parallel.hpp"

namespace hyperangle {

namespace {

void check_grid(const std::vector<double>& xi_grid, double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw UsageError("k must be positive");
    if (xi_grid.empty()) throw UsageError("xi grid is empty");
    for (std::size_t i = 0; i < xi_grid.size(); ++i) {
        if (!(xi_grid[i] > 0.0) || !std::isfinite(xi_grid[i])) throw UsageError("xi grid values must be positive");
        if (i > 0 && !(xi_grid[i] > xi_grid[i - 1])) throw UsageError("xi grid must be strictly increasing");
    }
}

std::vector<double> thresholds(const OrbitDataset& ds, const std::vector<double>& xi_grid, double k) {
    std::vector<double> th(xi_grid.size());
    for (std::size_t i = 0; i < th.size(); ++i) th[i] = 2.0 * k * xi_grid[i] / (ds.Q * ds.Q);
    return th;
}

std::vector<double> base_direction(int n) {
    std::vector<double> e(n, 0.0);
    e[0] = 1.0;
    return e;
}

PairCorrCurve empty_curve(const OrbitDataset& ds, const std::vector<double>& xi_grid, double k,
                          const PairCountOptions& opt) {
    PairCorrCurve c;
    c.xi_grid = xi_grid;
    c.r2q.assign(xi_grid.size(), 0.0);
    c.pairs.assign(xi_grid.size(), 0);
    c.base_pairs.assign(xi_grid.size(), 0);
    c.Q = ds.Q;
    c.k = k;
    c.point_count = ds.size();
    c.mode = ds.cone ? "cone" : "full";
    c.base_included = opt.base == BaseMode::g_N;
    return c;
}

// Turns per-bin hits (bin j = first threshold above the angle) into cumulative counts.
std::vector<std::uint64_t> cumulate(const std::vector<std::uint64_t>& bins, std::size_t m) {
    std::vector<std::uint64_t> out(m, 0);
    std::uint64_t run = 0;
    for (std::size_t i = 0; i < m; ++i) {
        run += bins[i];
        out[i] = run;
    }
    return out;
}

void finish(PairCorrCurve& c, const std::vector<std::uint64_t>& bins, const std::vector<std::uint64_t>& base_bins) {
    const std::size_t m = c.xi_grid.size();
    c.pairs = cumulate(bins, m);
    c.base_pairs = cumulate(base_bins, m);
    for (std::size_t i = 0; i < m; ++i) {
        if (c.base_included) c.pairs[i] += c.base_pairs[i];
        c.r2q[i] = static_cast<double>(c.pairs[i]) / static_cast<double>(c.point_count);
    }
}

std::size_t bin_of(const std::vector<double>& th, double angle) {
    return std::upper_bound(th.begin(), th.end(), angle) - th.begin();
}

// Ordered pairs (base, p) and (p, base) under the g_N convention.
std::vector<std::uint64_t> base_bins(const OrbitDataset& ds, const std::vector<double>& th) {
    std::vector<std::uint64_t> bins(th.size() + 1, 0);
    if (ds.base_index < 0) return bins;
    const auto e1 = base_direction(ds.n);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.is_base(i)) continue;
        bins[bin_of(th, vector_angle(e1.data(), ds.dir(i), ds.n))] += 2;
    }
    return bins;
}

}  // namespace

PairCorrCurve pair_correlation(const OrbitDataset& ds, const std::vector<double>& xi_grid, double k,
                               const PairCountOptions& opt) {
    check_grid(xi_grid, k);
    PairCorrCurve c = empty_curve(ds, xi_grid, k, opt);
    if (ds.size() < 2) {
        c.warning = true;
        return c;
    }
    const auto th = thresholds(ds, xi_grid, k);
    const NeighborIndex index = build_neighbor_index(ds, th.back());
    const std::size_t m = th.size();
    const int threads = resolve_threads(opt.threads);
    std::vector<std::vector<std::uint64_t>> local(threads, std::vector<std::uint64_t>(m + 1, 0));
    parallel_blocks(ds.size(), threads, [&](std::size_t b, std::size_t e, int w) {
        std::vector<std::pair<std::uint32_t, double>> hits;
        auto& bins = local[w];
        for (std::size_t i = b; i < e; ++i) {
            if (ds.is_base(i)) continue;
            hits.clear();
            index.query(ds.dir(i), th.back(), hits);
            for (const auto& [id, a] : hits)
                if (id != i) ++bins[bin_of(th, a)];
        }
    });
    std::vector<std::uint64_t> bins(m + 1, 0);
    for (const auto& l : local)
        for (std::size_t j = 0; j <= m; ++j) bins[j] += l[j];
    finish(c, bins, base_bins(ds, th));
    return c;
}

PairCorrCurve pair_correlation_bruteforce(const OrbitDataset& ds, const std::vector<double>& xi_grid,
                                          double k, const PairCountOptions& opt) {
    check_grid(xi_grid, k);
    PairCorrCurve c = empty_curve(ds, xi_grid, k, opt);
    if (ds.size() < 2) {
        c.warning = true;
        return c;
    }
    const auto th = thresholds(ds, xi_grid, k);
    std::vector<std::uint64_t> bins(th.size() + 1, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.is_base(i)) continue;
        for (std::size_t j = 0; j < ds.size(); ++j) {
            if (j == i || ds.is_base(j)) continue;
            ++bins[bin_of(th, vector_angle(ds.dir(i), ds.dir(j), ds.n))];
        }
    }
    finish(c, bins, base_bins(ds, th));
    return c;
}

Histogram empirical_g2(const PairCorrCurve& curve) {
    Histogram h;
    if (curve.xi_grid.size() < 2) return h;
    h.edges = curve.xi_grid;
    h.values.resize(curve.xi_grid.size() - 1);
    for (std::size_t i = 0; i + 1 < curve.xi_grid.size(); ++i)
        h.values[i] = (curve.r2q[i + 1] - curve.r2q[i]) / (curve.xi_grid[i + 1] - curve.xi_grid[i]);
    return h;
}

Histogram empirical_g2(const OrbitDataset& ds, const std::vector<double>& xi_bins, double k,
                       const PairCountOptions& opt) {
    check_grid(xi_bins, k);
    if (xi_bins.size() < 2) throw UsageError("histogram needs at least two bin edges");
    if (ds.size() == 0) return {};
    return empirical_g2(pair_correlation(ds, xi_bins, k, opt));
}

DistancePairCounts pairs_by_distance(const OrbitDataset& ds, double xi, double k,
                                     const DistanceSpectrum& t_list, const PairCountOptions& opt) {
    check_grid({xi}, k);
    t_list.validate();
    DistancePairCounts out;
    out.Q = ds.Q;
    out.xi = xi;
    out.k = k;
    const std::size_t m = t_list.entries.size();
    out.t.resize(m);
    for (std::size_t j = 0; j < m; ++j) out.t[j] = t_list.entries[j].t;
    out.pair_count.assign(m, 0);
    if (ds.size() < 2) return out;

    const int n = ds.n;
    const std::size_t dim = n + 1;
    const double radius = 2.0 * k * xi / (ds.Q * ds.Q);

    // Exact matching: -<p,q> scaled by L^2 is an integer when every
    // coordinate is a numerator over a divisor of L.
    const bool exact = ds.is_exact() && t_list.exact;
    std::int64_t L = 1;
    std::vector<std::int64_t> scale;
    std::vector<std::int64_t> keys;
    if (exact) {
        for (auto d : ds.denom) L = std::lcm(L, d);
        for (auto d : ds.denom) scale.push_back(L / d);
        for (const auto& e : t_list.entries) keys.push_back(std::llround(e.cosh_t * static_cast<double>(L * L)));
    }
    auto match_exact = [&](std::size_t p, std::size_t q) -> std::size_t {
        __int128 s = 0;
        const std::int64_t* a = ds.exact.data() + p * dim;
        const std::int64_t* b = ds.exact.data() + q * dim;
        for (int j = 0; j < n; ++j) s -= static_cast<__int128>(a[j] * scale[j]) * (b[j] * scale[j]);
        s += static_cast<__int128>(a[n] * scale[n]) * (b[n] * scale[n]);
        if (s > static_cast<__int128>(INT64_MAX)) return m;
        auto it = std::lower_bound(keys.begin(), keys.end(), static_cast<std::int64_t>(s));
        return (it != keys.end() && *it == static_cast<std::int64_t>(s)) ? static_cast<std::size_t>(it - keys.begin()) : m;
    };
    auto match_float = [&](const double* p, const double* q) -> std::size_t {
        // d = 2 asinh(|p - q|_M / 2) keeps small distances accurate
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += (p[j] - q[j]) * (p[j] - q[j]);
        s -= (p[n] - q[n]) * (p[n] - q[n]);
        const double d = 2.0 * std::asinh(std::sqrt(std::max(0.0, s)) / 2.0);
        auto it = std::lower_bound(out.t.begin(), out.t.end(), d);
        std::size_t best = m;
        double gap = 1e300;
        for (auto c : {it, it == out.t.begin() ? it : it - 1}) {
            if (c == out.t.end()) continue;
            const double g = std::fabs(*c - d);
            if (g < gap) {
                gap = g;
                best = c - out.t.begin();
            }
        }
        return gap <= 1e-9 * std::max(1.0, d) ? best : m;
    };

    const NeighborIndex index = build_neighbor_index(ds, radius);
    const int threads = resolve_threads(opt.threads);
    std::vector<std::vector<std::uint64_t>> local(threads, std::vector<std::uint64_t>(m + 1, 0));
    parallel_blocks(ds.size(), threads, [&](std::size_t b, std::size_t e, int w) {
        std::vector<std::pair<std::uint32_t, double>> hits;
        auto& bins = local[w];
        for (std::size_t i = b; i < e; ++i) {
            if (ds.is_base(i)) continue;
            hits.clear();
            index.query(ds.dir(i), radius, hits);
            for (const auto& [id, a] : hits) {
                if (id == i) continue;
                ++bins[exact ? match_exact(i, id) : match_float(ds.point(i), ds.point(id))];
            }
        }
    });
    std::vector<std::uint64_t> bins(m + 1, 0);
    for (const auto& l : local)
        for (std::size_t j = 0; j <= m; ++j) bins[j] += l[j];
    if (opt.base == BaseMode::g_N && ds.base_index >= 0) {
        const auto e1 = base_direction(n);
        const auto bi = static_cast<std::size_t>(ds.base_index);
        for (std::size_t i = 0; i < ds.size(); ++i) {
            if (ds.is_base(i) || !(vector_angle(e1.data(), ds.dir(i), n) < radius)) continue;
            bins[exact ? match_exact(bi, i) : match_float(ds.point(bi), ds.point(i))] += 2;
        }
    }
    std::copy_n(bins.begin(), m, out.pair_count.begin());
    out.overflow = bins[m];
    out.total = std::accumulate(bins.begin(), bins.end(), std::uint64_t{0});
    return out;
}

}  // namespace hyperangle
