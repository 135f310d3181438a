#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hyperangle/density.hpp"

namespace hyperangle {

struct Cone {
    std::vector<double> axis;  // unit vector of length n
    double theta;              // opening angle in (0, pi]; pi keeps the whole sphere

    Cone(std::vector<double> axis, double theta);
};

// Orbit points stored column-major per point: coords[i*(n+1) + j]. When the
// backend is exact, `exact` holds integer numerators over per-coordinate
// denominators `denom`, and coords are their (exactly representable) values.
struct OrbitDataset {
    int n = 2;
    double Q = 0.0;
    std::optional<double> V_eff;
    std::int64_t w = 1;
    std::string source;
    std::optional<Cone> cone;

    std::vector<double> coords;
    std::vector<double> t;
    std::vector<double> dirs;  // unit directions, zero vector for the base point
    std::vector<std::int64_t> exact;
    std::vector<std::int64_t> denom;
    std::int64_t base_index = -1;

    std::size_t size() const { return t.size(); }
    bool is_exact() const { return !denom.empty(); }
    const double* point(std::size_t i) const { return coords.data() + i * (n + 1); }
    const double* dir(std::size_t i) const { return dirs.data() + i * n; }
    bool is_base(std::size_t i) const { return static_cast<std::int64_t>(i) == base_index; }
    double last(std::size_t i) const { return coords[i * (n + 1) + n]; }

    // Number of points with ||gamma||^2 = 2 p_{n+1} <= Qp^2, base point included.
    std::size_t count_within(double Qp) const;
};

// Builds a dataset from raw rows: sorts by p_{n+1} then lexicographically,
// derives t and directions, checks the hyperboloid and cutoff invariants, and
// rejects duplicate points.
OrbitDataset make_dataset(int n, double Q, std::int64_t w, std::string source,
                          std::vector<double> coords, std::vector<std::int64_t> exact = {},
                          std::vector<std::int64_t> denom = {});

struct EnumerateOptions {
    std::uint64_t max_points = 50'000'000;
    int threads = 0;
};

OrbitDataset enumerate_lorentz(int n, double Q, const EnumerateOptions& opt = {});
OrbitDataset psl2z_orbit(double Q, const EnumerateOptions& opt = {});

OrbitDataset cone_filter(const OrbitDataset& ds, const Cone& cone);

// Per-level point counts of the integer solution set, without materializing it:
// count[x] = #{v in Z^n : |v|^2 = x^2 - 1}.
struct LevelCounts {
    int n = 2;
    std::vector<std::uint64_t> count;  // indexed by x = p_{n+1}; count[0] unused

    std::int64_t x_max() const { return static_cast<std::int64_t>(count.size()) - 1; }
    std::uint64_t total_within(double Qp) const;
};
LevelCounts lorentz_level_counts(int n, std::int64_t x_max);

struct CovolumeFit {
    double V = 0.0;
    double rel_rms = 0.0;
    double max_rel = 0.0;
    std::vector<double> q;      // sampled cutoffs
    std::vector<double> ratio;  // count * V / vol_ball at each cutoff
};

CovolumeFit fit_covolume(const std::function<double(double)>& count, int n, double Q_lo,
                         double Q_hi, int samples);
CovolumeFit effective_covolume(OrbitDataset& ds, double Q_lo, double Q_hi, int samples = 40);

DistanceSpectrum distance_spectrum(const OrbitDataset& ds, double t_max);
DistanceSpectrum distance_spectrum(const LevelCounts& lc, double t_max);

// Orbit file format v1 (CSV with a `#hyperangle orbit v1 ...` header).
OrbitDataset read_orbit(std::istream& in);
OrbitDataset load_orbit(const std::string& path, const std::string& format = "csv-v1");
void write_orbit(const OrbitDataset& ds, std::ostream& out);
void save_orbit(const OrbitDataset& ds, const std::string& path);

}  // namespace hyperangle
