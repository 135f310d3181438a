#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "hyperangle/empirical.hpp"
#include "hyperangle/errors.hpp"
#include "hyperangle/geometry.hpp"
#include "support.hpp"

using namespace hyperangle;
using std::numbers::pi;

namespace {

std::vector<std::uint32_t> brute_query(const std::vector<double>& dirs, int n, const double* q, double radius) {
    std::vector<std::uint32_t> ids;
    for (std::size_t i = 0; i < dirs.size() / n; ++i)
        if (vector_angle(q, dirs.data() + i * n, n) < radius) ids.push_back(static_cast<std::uint32_t>(i));
    return ids;
}

std::vector<double> random_dirs(int n, std::size_t count, std::mt19937_64& r) {
    std::vector<double> d;
    for (std::size_t i = 0; i < count; ++i) {
        const auto u = support::unit_vector(n, r);
        d.insert(d.end(), u.begin(), u.end());
    }
    return d;
}

std::vector<std::uint32_t> iota_ids(std::size_t count) {
    std::vector<std::uint32_t> ids(count);
    std::iota(ids.begin(), ids.end(), 0u);
    return ids;
}

std::vector<double> random_grid(std::mt19937_64& r, double hi) {
    std::vector<double> g;
    double x = support::uniform(r, 0.01, 0.2);
    while (x < hi) {
        g.push_back(x);
        x += support::uniform(r, 0.05, 0.8);
    }
    return g;
}

// A float copy of an exact dataset.
OrbitDataset as_float(const OrbitDataset& ds) {
    return make_dataset(ds.n, ds.Q, ds.w, ds.source, ds.coords);
}

}  // namespace

TEST_CASE("neighbor index matches brute force") {
    auto r = support::rng(61);
    for (int n : {2, 3, 4, 5}) {
        const auto dirs = random_dirs(n, 2000, r);
        for (double max_radius : {0.02, 0.3, 2.0}) {
            const NeighborIndex idx(dirs, iota_ids(2000), n, max_radius);
            CHECK(idx.size() == 2000);
            for (int q = 0; q < 100; ++q) {
                const auto u = support::unit_vector(n, r);
                const double radius = support::uniform(r, 0.0, max_radius);
                REQUIRE(idx.query_ids(u.data(), radius) == brute_query(dirs, n, u.data(), radius));
            }
        }
    }
}

TEST_CASE("neighbor index edge cases") {
    auto r = support::rng(62);
    for (int n : {2, 3, 4}) {
        const auto dirs = random_dirs(n, 500, r);
        const NeighborIndex idx(dirs, iota_ids(500), n, pi + 0.1);
        const auto u = support::unit_vector(n, r);
        CHECK(idx.query_ids(u.data(), pi + 0.1).size() == 500);
        CHECK(idx.query_ids(dirs.data(), 0.0).empty());
        const NeighborIndex small(dirs, iota_ids(500), n, 0.1);
        CHECK_THROWS_AS(small.query_ids(u.data(), 0.2), UsageError);
    }
    // points at the poles and on the seam of the n = 3 grid
    std::vector<double> seam{0, 0, 1, 0, 0, -1, -1, 1e-12, 0, -1, -1e-12, 0, 0.6, 0, 0.8};
    const NeighborIndex g(seam, iota_ids(5), 3, 0.5);
    CHECK(g.kind() == NeighborIndex::Kind::grid);
    const double west[3] = {-1, 0, 0};
    CHECK(g.query_ids(west, 1e-6) == std::vector<std::uint32_t>{2, 3});
    const double north[3] = {0.1, 0, 0.99498743710662};
    CHECK(g.query_ids(north, 0.5) == brute_query(seam, 3, north, 0.5));
    CHECK_THROWS_AS(NeighborIndex(seam, iota_ids(5), 3, 0.5, NeighborIndex::Kind::circle), UsageError);
    const NeighborIndex tree(seam, iota_ids(5), 3, 0.5, NeighborIndex::Kind::cap_tree);
    CHECK(tree.query_ids(west, 1e-6) == std::vector<std::uint32_t>{2, 3});
}

TEST_CASE("pair correlation examples") {
    const auto one = make_dataset(2, 10, 1, "one", {0, 0, 1});
    const auto c1 = pair_correlation(one, {0.5, 1.0}, 1.0);
    CHECK(c1.warning);
    CHECK(c1.r2q == std::vector<double>{0.0, 0.0});

    const double t = 1.0, a = 1e-9;
    const auto two = make_dataset(2, 10, 1, "two",
                                  {std::sinh(t), 0, std::cosh(t), std::sinh(t) * std::cos(a), std::sinh(t) * std::sin(a), std::cosh(t)});
    const auto c2 = pair_correlation(two, {1e-6}, 1.0);  // threshold 2e-8 > 1e-9
    CHECK(c2.pairs[0] == 2);
    CHECK(c2.r2q[0] == 1.0);

    CHECK_THROWS_AS(pair_correlation(two, {1.0, 0.5}, 1.0), UsageError);
    CHECK_THROWS_AS(pair_correlation(two, {1.0}, 0.0), UsageError);
    CHECK_THROWS_AS(pair_correlation(two, {}, 1.0), UsageError);
}

TEST_CASE("property: indexed counts equal brute force") {
    auto r = support::rng(63);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = support::uniform_int(r, 2, 5);
        OrbitDataset ds;
        if (trial % 4 == 0) ds = psl2z_orbit(support::uniform(r, 20, 35));
        else if (trial % 4 == 1) ds = enumerate_lorentz(n, n == 2 ? 60.0 : (n == 3 ? 8.0 : (n == 4 ? 4.0 : 3.0)));
        else ds = support::random_dataset(n, support::uniform(r, 5, 60), support::uniform_int(r, 50, 1999), r);
        REQUIRE(ds.size() <= 2000);
        const double k = support::uniform(r, 0.3, 3.0);
        const double scale = ds.Q * ds.Q * (ds.n == 2 ? 0.05 : 0.3);
        const auto grid = random_grid(r, scale);
        PairCountOptions opt;
        opt.base = trial % 2 ? BaseMode::g_N : BaseMode::exclude;
        opt.threads = support::uniform_int(r, 1, 4);
        const auto fast = pair_correlation(ds, grid, k, opt);
        const auto slow = pair_correlation_bruteforce(ds, grid, k, opt);
        REQUIRE(fast.pairs == slow.pairs);
        REQUIRE(fast.base_pairs == slow.base_pairs);
        for (std::size_t i = 1; i < grid.size(); ++i) REQUIRE(fast.r2q[i] >= fast.r2q[i - 1]);
    }
}

TEST_CASE("property: counts are independent of labels and threads") {
    auto r = support::rng(64);
    const auto ds = support::random_dataset(3, 40, 1500, r);
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), r);
    std::vector<double> coords;
    for (auto i : order) coords.insert(coords.end(), ds.point(i), ds.point(i) + 4);
    const auto shuffled = make_dataset(3, ds.Q, 1, "shuffled", coords);
    const std::vector<double> grid{1, 10, 100, 400};
    PairCountOptions one, many;
    one.threads = 1;
    many.threads = 4;
    const auto a = pair_correlation(ds, grid, 1.0, one);
    CHECK(a.pairs == pair_correlation(shuffled, grid, 1.0, many).pairs);
    CHECK(a.pairs == pair_correlation(ds, grid, 1.0, many).pairs);
}

TEST_CASE("cone with full opening") {
    const auto ds = psl2z_orbit(60);
    const std::vector<double> grid{0.5, 1, 2, 4};
    const auto cone = cone_filter(ds, Cone({1.0, 0.0}, pi));
    PairCountOptions gn;
    gn.base = BaseMode::g_N;
    const auto full = pair_correlation(ds, grid, 1.0, gn);
    const auto restricted = pair_correlation(cone, grid, 1.0);
    CHECK(restricted.mode == "cone");
    CHECK(restricted.point_count == ds.size() - 1);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(restricted.pairs[i] == full.pairs[i] - full.base_pairs[i]);
    CHECK(pair_correlation(ds, grid, 1.0).pairs == restricted.pairs);
}

TEST_CASE("empirical density histogram") {
    const auto ds = psl2z_orbit(80);
    const std::vector<double> edges{0.2, 0.5, 1, 1.5, 2, 3};
    const auto h = empirical_g2(ds, edges, 1.0);
    const auto c = pair_correlation(ds, edges, 1.0);
    REQUIRE(h.values.size() == 5);
    double s = 0.0;
    for (std::size_t i = 0; i < h.values.size(); ++i) {
        CHECK(h.values[i] >= 0.0);
        s += h.values[i] * (edges[i + 1] - edges[i]);
    }
    CHECK(s == doctest::Approx(c.r2q.back() - c.r2q.front()).epsilon(1e-12));
    const auto empty = make_dataset(2, 10, 1, "empty", {});
    CHECK(empirical_g2(empty, edges, 1.0).values.empty());
    CHECK_THROWS_AS(empirical_g2(ds, {1.0}, 1.0), UsageError);
}

TEST_CASE("pairs by distance") {
    const auto ds = psl2z_orbit(50);
    const auto spec = distance_spectrum(ds, std::acosh(1250.0));
    // lattice points can share a direction exactly; those pairs have angle 0
    // and qualify for every xi > 0
    std::uint64_t collinear = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        for (std::size_t j = 0; j < ds.size(); ++j)
            if (i != j && !ds.is_base(i) && !ds.is_base(j)) {
                const std::int64_t* p = ds.exact.data() + 3 * i;
                const std::int64_t* q = ds.exact.data() + 3 * j;
                collinear += p[0] * q[1] == p[1] * q[0] && p[0] * q[0] + p[1] * q[1] > 0;
            }
    CHECK(pairs_by_distance(ds, 1e-12, 1.0, spec).total == collinear);
    auto r = support::rng(65);
    const auto rnd = support::random_dataset(3, 30, 1000, r);
    CHECK(pairs_by_distance(rnd, 1e-12, 1.0, distance_spectrum(rnd, 5.0)).total == 0);
    for (double xi : {0.5, 2.0}) {
        for (auto mode : {BaseMode::exclude, BaseMode::g_N}) {
            PairCountOptions opt;
            opt.base = mode;
            const auto d = pairs_by_distance(ds, xi, 1.0, spec, opt);
            const auto c = pair_correlation(ds, {xi}, 1.0, opt);
            std::uint64_t s = d.overflow;
            for (auto v : d.pair_count) s += v;
            CHECK(s == d.total);
            CHECK(d.total == c.pairs[0]);
            // float matching reproduces the exact matching
            const auto f = as_float(ds);
            DistanceSpectrum fs = distance_spectrum(f, std::acosh(1250.0));
            CHECK_FALSE(fs.exact);
            const auto df = pairs_by_distance(f, xi, 1.0, fs, opt);
            CHECK(df.pair_count == d.pair_count);
            CHECK(df.overflow == d.overflow);
        }
    }
}
