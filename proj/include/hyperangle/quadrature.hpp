#pragma once

#include <functional>
#include <vector>

namespace hyperangle {

struct QuadSettings {
    double abs_tol = 1e-12;
    double rel_tol = 1e-10;
    int max_subdiv = 200;
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int intervals = 0;
    bool converged = true;
};

// Globally adaptive 7/15-point Gauss-Kronrod on the partition given by
// `points` (sorted, at least two entries). Never throws on non-convergence.
QuadResult integrate_adaptive(const std::function<double(double)>& f,
                              const std::vector<double>& points,
                              const QuadSettings& s);

// Same, but throws NumericalError when the tolerance is not met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadSettings& s, const std::vector<double>& breakpoints = {});

QuadResult integrate_checked(const std::function<double(double)>& f, double a, double b,
                             const QuadSettings& s,
                             const std::vector<double>& breakpoints = {});

}  // namespace hyperangle
