#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "doctest.h"
#include "hyperangle/density.hpp"
#include "hyperangle/errors.hpp"
#include "hyperangle/geometry.hpp"
#include "hyperangle/lattice.hpp"
#include "support.hpp"

using namespace hyperangle;
using std::numbers::pi;

namespace {

std::vector<std::vector<std::int64_t>> exact_rows(const OrbitDataset& ds) {
    std::vector<std::vector<std::int64_t>> rows;
    const std::size_t dim = ds.n + 1;
    for (std::size_t i = 0; i < ds.size(); ++i)
        rows.emplace_back(ds.exact.begin() + i * dim, ds.exact.begin() + (i + 1) * dim);
    return rows;
}

HyperboloidPoint point_of(const OrbitDataset& ds, std::size_t i) {
    return HyperboloidPoint(LorentzVector(Eigen::Map<const Eigen::VectorXd>(ds.point(i), ds.n + 1)));
}

// Inverse of the half-plane embedding: y = 1/(X3 - X1), x = X2 y.
std::complex<double> half_plane(const double* X) {
    const double y = 1.0 / (X[2] - X[0]);
    return {X[1] * y, y};
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("hyperangle_test_" + name);
}

}  // namespace

TEST_CASE("integer enumeration examples") {
    const auto d2 = enumerate_lorentz(2, std::sqrt(6.0));
    REQUIRE(d2.size() == 5);
    CHECK(d2.w == 8);
    std::set<std::vector<std::int64_t>> want{{0, 0, 1}, {-2, -2, 3}, {-2, 2, 3}, {2, -2, 3}, {2, 2, 3}};
    const auto rows = exact_rows(d2);
    CHECK(std::set<std::vector<std::int64_t>>(rows.begin(), rows.end()) == want);
    CHECK(rows.front() == std::vector<std::int64_t>{0, 0, 1});
    CHECK(std::is_sorted(rows.begin() + 1, rows.end()));

    const auto d3 = enumerate_lorentz(3, 2.0);
    REQUIRE(d3.size() == 9);
    CHECK(d3.w == 48);
    for (const auto& r : exact_rows(d3))
        if (r[3] == 2) CHECK((std::abs(r[0]) == 1 && std::abs(r[1]) == 1 && std::abs(r[2]) == 1));

    CHECK_THROWS_AS(enumerate_lorentz(1, 3.0), UsageError);
    CHECK_THROWS_AS(enumerate_lorentz(2, 1.0), UsageError);
    EnumerateOptions tiny;
    tiny.max_points = 10;
    CHECK_THROWS_AS(enumerate_lorentz(3, 20.0, tiny), ResourceError);
}

TEST_CASE("property: integer solutions satisfy the quadric and the symmetry") {
    for (int n : {2, 3, 4}) {
        const auto ds = enumerate_lorentz(n, n == 4 ? 9.0 : 14.0);
        const auto rows = exact_rows(ds);
        std::set<std::vector<std::int64_t>> all(rows.begin(), rows.end());
        CHECK(all.size() == rows.size());
        auto r = support::rng(30 + n);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), r);
            std::vector<int> sign(n);
            for (auto& s : sign) s = support::uniform_int(r, 0, 1) ? 1 : -1;
            for (const auto& row : rows) {
                __int128 q = -static_cast<__int128>(row[n]) * row[n];
                std::vector<std::int64_t> img(row);
                for (int j = 0; j < n; ++j) {
                    q += static_cast<__int128>(row[j]) * row[j];
                    img[j] = sign[j] * row[perm[j]];
                }
                REQUIRE(q == -1);
                REQUIRE(all.count(img) == 1);
            }
        }
    }
}

TEST_CASE("level counts agree with enumeration") {
    for (int n : {2, 3, 4}) {
        const std::int64_t X = n == 4 ? 30 : 80;
        const auto lc = lorentz_level_counts(n, X);
        const auto ds = enumerate_lorentz(n, std::sqrt(2.0 * X));
        std::vector<std::uint64_t> per(X + 1, 0);
        for (std::size_t i = 0; i < ds.size(); ++i) ++per[static_cast<std::size_t>(ds.last(i))];
        for (std::int64_t x = 1; x <= X; ++x) REQUIRE(lc.count[x] == per[x]);
        CHECK(lc.total_within(std::sqrt(2.0 * X)) == ds.size());
    }
}

TEST_CASE("modular orbit examples") {
    const auto ds = psl2z_orbit(2.0);
    CHECK(ds.w == 2);
    CHECK_FALSE(ds.V_eff.has_value());
    REQUIRE(ds.base_index >= 0);
    bool found = false;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const double* p = ds.point(i);
        found |= p[0] == 0.5 && p[1] == 1.0 && p[2] == 1.5;
    }
    CHECK(found);
    CHECK(minkowski_inner(LorentzVector{0.5, 1.0, 1.5}, LorentzVector{0.5, 1.0, 1.5}) == -1.0);

    const auto big = psl2z_orbit(100.0);
    CHECK(static_cast<double>(big.size()) / (1.5 * (1e4 - 2)) == doctest::Approx(1.0).epsilon(0.02));
    CHECK_THROWS_AS(psl2z_orbit(1.0), UsageError);
}

TEST_CASE("property: modular embedding is isometric and angle preserving") {
    const auto ds = psl2z_orbit(40.0);
    auto r = support::rng(41);
    const std::complex<double> I(0, 1);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t a = r() % ds.size(), b = r() % ds.size();
        if (a == b) continue;
        const auto z = half_plane(ds.point(a)), w = half_plane(ds.point(b));
        const double dh = std::acosh(1 + std::norm(z - w) / (2 * z.imag() * w.imag()));
        REQUIRE(std::fabs(dh - hyperbolic_distance(point_of(ds, a), point_of(ds, b))) <= 1e-9 * std::max(1.0, dh));
        if (ds.is_base(a) || ds.is_base(b)) continue;
        // angle at i via the Cayley map to the disk
        double half = std::fabs(std::arg((z - I) / (z + I)) - std::arg((w - I) / (w + I)));
        if (half > pi) half = 2 * pi - half;
        REQUIRE(std::fabs(half - angle_at_base(point_of(ds, a), point_of(ds, b)).radians) <= 1e-8);
    }
}

TEST_CASE("datasets reject bad input") {
    std::vector<double> coords{0, 0, 1, 0, 0, 1};
    CHECK_THROWS_AS(make_dataset(2, 10, 1, "x", coords), InvariantError);
    CHECK_THROWS_AS(make_dataset(2, 10, 1, "x", {1, 0, 1}), InvariantError);
    CHECK_THROWS_AS(make_dataset(2, 2, 1, "x", {2, 2, 3}), InvariantError);
    CHECK_THROWS_AS(make_dataset(2, 10, 1, "x", {1, 0}), UsageError);
}

TEST_CASE("file round trip") {
    const auto path = temp_file("roundtrip.csv");
    for (const auto& ds : {enumerate_lorentz(3, 8.0), psl2z_orbit(20.0)}) {
        save_orbit(ds, path.string());
        const auto back = load_orbit(path.string());
        CHECK(back.n == ds.n);
        CHECK(back.w == ds.w);
        CHECK(back.Q == ds.Q);
        CHECK(back.coords == ds.coords);
        CHECK(back.exact == ds.exact);
        CHECK(back.source == ds.source);
    }
    auto ds = psl2z_orbit(30.0);
    effective_covolume(ds, 10.0, 30.0);
    save_orbit(ds, path.string());
    CHECK(load_orbit(path.string()).V_eff.value() == ds.V_eff.value());
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_orbit(path.string()), UsageError);
    CHECK_THROWS_AS(load_orbit(path.string(), "json"), UsageError);
}

TEST_CASE("file errors carry line numbers") {
    {
        std::istringstream in("#hyperangle orbit v1 n=2 q=10 veff=na w=1 source=t\n0,0,1\n# note\n1,1,1\n");
        try {
            read_orbit(in);
            FAIL("expected InvariantError");
        } catch (const InvariantError& e) {
            CHECK(std::string(e.what()).find("line 4") != std::string::npos);
        }
    }
    {
        std::istringstream in("#hyperangle orbit v1 n=3 q=10 veff=na w=1 source=t\n0,0,1\n");
        try {
            read_orbit(in);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line() == 2);
        }
    }
    {
        std::istringstream in("#hyperangle orbit v1 n=2 q=10 veff=na w=1 source=t\n0,zero,1\n");
        CHECK_THROWS_AS(read_orbit(in), ParseError);
    }
    {
        std::istringstream in("x,y,z\n");
        CHECK_THROWS_AS(read_orbit(in), ParseError);
    }
}

TEST_CASE("cone filter") {
    const auto ds = enumerate_lorentz(2, 20.0);
    const auto half = cone_filter(ds, Cone({1.0, 0.0}, pi / 2));
    std::size_t want = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) want += ds.point(i)[0] > 0;
    CHECK(half.size() == want);
    for (std::size_t i = 0; i < half.size(); ++i) CHECK(half.point(i)[0] > 0);
    CHECK(half.cone.has_value());
    CHECK(half.base_index == -1);

    CHECK(cone_filter(ds, Cone({1.0, 0.0}, pi)).size() == ds.size() - 1);
    CHECK(cone_filter(ds, Cone({std::cos(0.123), std::sin(0.123)}, 1e-9)).size() == 0);
    CHECK_THROWS_AS(Cone({1.0, 0.0}, 0.0), UsageError);
    CHECK_THROWS_AS(Cone({0.0, 0.0}, 1.0), UsageError);
    CHECK_THROWS_AS(cone_filter(ds, Cone({1.0, 0.0, 0.0}, 1.0)), UsageError);
}

TEST_CASE("covolume calibration") {
    // planted: n = 2, cosh t stratified uniformly (density of sinh t dt), V = 0.5
    const double Q = 200, V = 0.5;
    const auto N = static_cast<std::size_t>(vol_ball(Q, 2) / V);
    auto r = support::rng(51);
    std::vector<double> coords{0, 0, 1};
    for (std::size_t i = 0; i < N; ++i) {
        const double c = 1 + (i + 0.5) / N * (Q * Q / 2 - 1), s = std::sqrt((c - 1) * (c + 1));
        const double a = support::uniform(r, 0, 2 * pi);
        coords.insert(coords.end(), {s * std::cos(a), s * std::sin(a), c});
    }
    auto planted = make_dataset(2, Q, 1, "planted", std::move(coords));
    const auto fit = effective_covolume(planted, 50, 200);
    CHECK(fit.V == doctest::Approx(V).epsilon(0.01));
    CHECK(planted.V_eff.value() == fit.V);

    auto modular = psl2z_orbit(150);
    CHECK(effective_covolume(modular, 50, 150).V == doctest::Approx(2 * pi / 3).epsilon(0.02));

    auto one = make_dataset(2, 10, 1, "one", {0, 0, 1});
    CHECK_THROWS_AS(effective_covolume(one, 2, 10), PreconditionError);
    CHECK_THROWS_AS(effective_covolume(modular, 50, 300), PreconditionError);
}

TEST_CASE("distance spectrum") {
    const auto ds = enumerate_lorentz(2, std::sqrt(6.0));
    const auto s = distance_spectrum(ds, std::acosh(3.0));
    REQUIRE(s.entries.size() == 1);
    CHECK(s.entries[0].t == doctest::Approx(std::acosh(3.0)));
    CHECK(s.entries[0].multiplicity == 4);
    CHECK(s.exact);

    const auto m = psl2z_orbit(60);
    const auto full = distance_spectrum(m, std::acosh(1800.0));
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < full.entries.size(); ++i) {
        total += full.entries[i].multiplicity;
        CHECK(full.entries[i].t > 1e-9);
        if (i > 0) CHECK(full.entries[i].t > full.entries[i - 1].t);
    }
    CHECK(total == m.size() - 1);
    CHECK_THROWS_AS(distance_spectrum(m, 10.0), PreconditionError);

    const auto lc = lorentz_level_counts(3, 50);
    const auto ls = distance_spectrum(lc, std::acosh(50.0));
    const auto es = distance_spectrum(enumerate_lorentz(3, 10.0), std::acosh(50.0));
    REQUIRE(ls.entries.size() == es.entries.size());
    for (std::size_t i = 0; i < ls.entries.size(); ++i) CHECK(ls.entries[i].multiplicity == es.entries[i].multiplicity);
}

TEST_CASE("count within") {
    const auto ds = enumerate_lorentz(3, 10.0);
    std::size_t brute = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) brute += 2 * ds.last(i) <= 36.0;
    CHECK(ds.count_within(6.0) == brute);
}
