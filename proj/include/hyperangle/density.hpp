#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hyperangle/quadrature.hpp"

namespace hyperangle {

// omega_j = 2 pi^{j/2} / Gamma(j/2), the area of the unit sphere in R^j.
double sphere_volume(int j);
// V_j = omega_j / j, the volume of the unit ball in R^j.
double unit_ball_volume(int j);

struct DensityContext {
    int n = 2;
    double V_eff = 1.0;
    double k = 1.0;
    QuadSettings quad;
    int threads = 0;

    // k = ((n-1) V_eff / V_{n-1})^{1/(n-1)}
    static DensityContext make(int n, double V_eff, QuadSettings quad = {}, int threads = 0);
};

struct ABC {
    double A, B, C;
};
ABC abc_of(double l);

struct Interval {
    double lo, hi;
    bool lo_closed, hi_closed;
};

struct IntervalUnion {
    std::vector<Interval> intervals;
    double total_length() const;
    bool contains(double y) const;
};

enum class Branch { small, middle, large };  // xi <= C, C < xi <= B, B < xi
Branch branch_of(double xi, double l);

IntervalUnion interval_set(double xi, double l);

enum class FMethod { automatic, closed_form, quadrature };

double f_xi(double xi, double l, const DensityContext& ctx, FMethod method = FMethod::automatic);
// Closed forms for n = 2, 3 (UsageError otherwise).
double f_xi_closed(double xi, double l, int n);
double f_xi_quadrature(double xi, double l, int n, const QuadSettings& quad);

// int_0^xi f_zeta(l) dzeta through the (I_1, I_2) representation.
double F_cumulative(double xi, double l, const DensityContext& ctx);
// The same quantity by quadrature in zeta; slower, used as an oracle.
double F_cumulative_by_zeta(double xi, double l, const DensityContext& ctx);

double big_F(double xi, double t, const DensityContext& ctx);

std::pair<double, double> kink_locations(double l);

struct SpectrumEntry {
    double t;
    std::uint64_t multiplicity;
    double cosh_t;  // exact for integer-valued backends
};

struct DistanceSpectrum {
    std::vector<SpectrumEntry> entries;
    std::string source;
    bool exact = false;

    void validate() const;
    double max_t() const { return entries.empty() ? 0.0 : entries.back().t; }
};

// ||M|| for an element with Cartan parameter t.
double norm_of_t(double t);

struct SumResult {
    double value = 0.0;
    double tail_estimate = 0.0;  // +inf when the decay bound does not apply
    double truncation = 0.0;     // the norm cutoff T actually used
    std::size_t terms = 0;
};

SumResult g2_theoretical(double xi, const DistanceSpectrum& spec, const DensityContext& ctx,
                         std::optional<double> T = std::nullopt);
SumResult r2_theoretical(double xi, const DistanceSpectrum& spec, const DensityContext& ctx,
                         std::optional<double> T = std::nullopt);
SumResult g2_zero_limit_n2(const DistanceSpectrum& spec, double V_eff, int n = 2);

double vol_ball(double Q, int n);

struct VolumeEstimate {
    double value = 0.0;
    double error_scale = 0.0;  // size of the error term with unit constant; not added
    double achieved_error = 0.0;
};
VolumeEstimate vol_RM_main(double Q, double xi, double t_M, const DensityContext& ctx);
VolumeEstimate vol_RM_numeric(double Q, double xi, double t_M, const DensityContext& ctx);

struct GIntegral {
    double value = 0.0;
    double tail_bound = 0.0;
    double L = 0.0;
};
GIntegral integral_f_over_G(double xi, const DensityContext& ctx);

// Frozen constants of the decay bounds f <= kappa1 xi^{-n} (1+l) and, for
// xi <= C(l), f <= kappa2 xi^{n-2} B^{-2(n-1)}.
double kappa1(int n);
double kappa2(int n);
// Fitting routines that produced the frozen tables (coarse grid, 25% margin).
double fit_kappa1(int n, int grid = 16);
double fit_kappa2(int n, int grid = 16);

struct RecoverOptions {
    double xi_lo = 0.05;
    double xi_hi = 8.0;
    int grid_points = 2400;
    double spike_factor = 10.0;
    double integer_tolerance = 0.1;
    bool allow_partial = false;
};

struct RecoveredKink {
    double xi_star;
    double t;
    double jump_ratio;
    bool second_kink_seen;
};

struct RecoveryResult {
    DistanceSpectrum spectrum;
    std::vector<RecoveredKink> kinks;
    bool exhausted = false;
};

RecoveryResult recover_length_spectrum(const std::function<double(double)>& g2_samples,
                                       double V_eff, int n, int depth,
                                       const RecoverOptions& opt = {},
                                       const QuadSettings& quad = {});

}  // namespace hyperangle
