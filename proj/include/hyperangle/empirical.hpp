#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hyperangle/density.hpp"
#include "hyperangle/lattice.hpp"

namespace hyperangle {

// Exact fixed-angular-radius retrieval on S^{n-1}: a query returns precisely
// the points whose vector_angle to the query direction is < radius.
// n = 2 sorts by polar angle, n = 3 uses latitude bands split into longitude
// cells, n >= 4 uses a tree of spherical caps.
class NeighborIndex {
public:
    enum class Kind { circle, grid, cap_tree };

    // dirs: unit vectors of length n, ids[i] labels dirs[i*n .. i*n+n).
    NeighborIndex(std::vector<double> dirs, std::vector<std::uint32_t> ids, int n,
                  double max_radius, std::optional<Kind> kind = std::nullopt);
    ~NeighborIndex();
    NeighborIndex(NeighborIndex&&) noexcept;
    NeighborIndex& operator=(NeighborIndex&&) noexcept;

    Kind kind() const;
    double max_radius() const;
    std::size_t size() const;

    // Appends (id, angle) for every point strictly inside the cap. Radii above
    // max_radius are rejected with UsageError (rebuild with a larger radius).
    void query(const double* dir, double radius,
               std::vector<std::pair<std::uint32_t, double>>& out) const;
    std::vector<std::uint32_t> query_ids(const double* dir, double radius) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

NeighborIndex build_neighbor_index(const OrbitDataset& ds, double max_radius);

enum class BaseMode { exclude, g_N };

struct PairCountOptions {
    BaseMode base = BaseMode::exclude;
    int threads = 0;
};

struct PairCorrCurve {
    std::vector<double> xi_grid;
    std::vector<double> r2q;
    std::vector<std::uint64_t> pairs;       // ordered pairs counted at each xi
    std::vector<std::uint64_t> base_pairs;  // ordered pairs with the base point (g_N convention)
    double Q = 0.0;
    double k = 0.0;
    std::uint64_t point_count = 0;
    std::string mode = "full";
    bool base_included = false;
    bool warning = false;  // fewer than two points
};

PairCorrCurve pair_correlation(const OrbitDataset& ds, const std::vector<double>& xi_grid, double k,
                               const PairCountOptions& opt = {});
// O(N^2) reference with the same predicate.
PairCorrCurve pair_correlation_bruteforce(const OrbitDataset& ds, const std::vector<double>& xi_grid,
                                          double k, const PairCountOptions& opt = {});

struct Histogram {
    std::vector<double> edges;
    std::vector<double> values;  // one per bin
};
Histogram empirical_g2(const OrbitDataset& ds, const std::vector<double>& xi_bins, double k,
                       const PairCountOptions& opt = {});
Histogram empirical_g2(const PairCorrCurve& curve);

struct DistancePairCounts {
    std::vector<double> t;
    std::vector<std::uint64_t> pair_count;
    std::uint64_t overflow = 0;
    std::uint64_t total = 0;  // sum of pair_count plus overflow
    double Q = 0.0, xi = 0.0, k = 0.0;
};

DistancePairCounts pairs_by_distance(const OrbitDataset& ds, double xi, double k,
                                     const DistanceSpectrum& t_list, const PairCountOptions& opt = {});

}  // namespace hyperangle
