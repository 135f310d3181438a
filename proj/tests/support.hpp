#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "hyperangle/geometry.hpp"
#include "hyperangle/lattice.hpp"

namespace support {

using hyperangle::GroupElement;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {
    return std::uniform_int_distribution<int>(lo, hi)(g);
}

// k1 a_t k2 with t drawn uniformly from [lo, hi].
inline GroupElement element(int n, std::mt19937_64& g, double lo = 0.05, double hi = 3.0) {
    return hyperangle::random_element(n, uniform(g, lo, hi), g);
}

inline std::vector<double> unit_vector(int n, std::mt19937_64& g) {
    std::normal_distribution<double> z;
    std::vector<double> v(n);
    double s = 0.0;
    for (auto& x : v) {
        x = z(g);
        s += x * x;
    }
    for (auto& x : v) x /= std::sqrt(s);
    return v;
}

// Float dataset of `count` points at random heights t <= acosh(Q^2/2) and
// random directions, plus the base point.
inline hyperangle::OrbitDataset random_dataset(int n, double Q, std::size_t count, std::mt19937_64& g) {
    std::vector<double> coords(n + 1, 0.0);
    coords[n] = 1.0;
    const double tmax = 0.999 * std::acosh(Q * Q / 2.0);
    for (std::size_t i = 0; i < count; ++i) {
        const double t = uniform(g, 1e-3, tmax);
        const auto u = unit_vector(n, g);
        for (int j = 0; j < n; ++j) coords.push_back(std::sinh(t) * u[j]);
        coords.push_back(std::cosh(t));
    }
    return hyperangle::make_dataset(n, Q, 1, "random", std::move(coords));
}

}  // namespace support
