#include "hyperangle/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "hyperangle/errors.hpp"

namespace hyperangle {

namespace {

constexpr double xgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double wgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Piece {
    double a, b, value, error;
    bool operator<(const Piece& o) const { return error < o.error; }
};

// QUADPACK qk15 error heuristics.
Piece gk15(const std::function<double(double)>& f, double a, double b) {
    const double eps = std::numeric_limits<double>::epsilon();
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv1[7], fv2[7];
    const double fc = f(c);
    double resg = fc * wg[3];
    double resk = fc * wgk[7];
    double resabs = std::fabs(resk);
    for (int j = 0; j < 3; ++j) {
        const int jj = 2 * j + 1;
        const double dx = h * xgk[jj];
        const double f1 = f(c - dx), f2 = f(c + dx);
        fv1[jj] = f1;
        fv2[jj] = f2;
        resg += wg[j] * (f1 + f2);
        resk += wgk[jj] * (f1 + f2);
        resabs += wgk[jj] * (std::fabs(f1) + std::fabs(f2));
    }
    for (int j = 0; j < 4; ++j) {
        const int jj = 2 * j;
        const double dx = h * xgk[jj];
        const double f1 = f(c - dx), f2 = f(c + dx);
        fv1[jj] = f1;
        fv2[jj] = f2;
        resk += wgk[jj] * (f1 + f2);
        resabs += wgk[jj] * (std::fabs(f1) + std::fabs(f2));
    }
    const double mean = resk * 0.5;
    double resasc = wgk[7] * std::fabs(fc - mean);
    for (int j = 0; j < 7; ++j)
        resasc += wgk[j] * (std::fabs(fv1[j] - mean) + std::fabs(fv2[j] - mean));
    const double ah = std::fabs(h);
    resasc *= ah;
    resabs *= ah;
    double err = std::fabs((resk - resg) * h);
    if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);
    return {a, b, resk * h, err};
}

}  // namespace

QuadResult integrate_adaptive(const std::function<double(double)>& f,
                              const std::vector<double>& points, const QuadSettings& s) {
    QuadResult out;
    if (points.size() < 2) return out;
    std::priority_queue<Piece> heap;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        if (!(points[i + 1] > points[i])) continue;
        heap.push(gk15(f, points[i], points[i + 1]));
    }
    auto totals = [&](double& v, double& e) {
        // copy so the summation order is the same on every call
        std::vector<Piece> all;
        auto h = heap;
        while (!h.empty()) {
            all.push_back(h.top());
            h.pop();
        }
        std::sort(all.begin(), all.end(), [](const Piece& x, const Piece& y) { return x.a < y.a; });
        v = 0.0;
        e = 0.0;
        for (const auto& p : all) {
            v += p.value;
            e += p.error;
        }
    };
    double value = 0.0, error = 0.0;
    totals(value, error);
    int splits = 0;
    while (!heap.empty() && error > std::max(s.abs_tol, s.rel_tol * std::fabs(value)) &&
           splits < s.max_subdiv) {
        Piece worst = heap.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;
        heap.pop();
        const Piece l = gk15(f, worst.a, mid);
        const Piece r = gk15(f, mid, worst.b);
        heap.push(l);
        heap.push(r);
        value += l.value + r.value - worst.value;
        error += l.error + r.error - worst.error;
        ++splits;
    }
    totals(value, error);
    out.value = value;
    out.error = error;
    out.intervals = static_cast<int>(heap.size());
    out.converged = error <= std::max(s.abs_tol, s.rel_tol * std::fabs(value));
    return out;
}

QuadResult integrate_checked(const std::function<double(double)>& f, double a, double b,
                             const QuadSettings& s, const std::vector<double>& breakpoints) {
    std::vector<double> pts{a};
    for (double p : breakpoints)
        if (p > a && p < b) pts.push_back(p);
    pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    QuadResult r = integrate_adaptive(f, pts, s);
    if (!r.converged) throw NumericalError("adaptive quadrature did not converge", r.error);
    return r;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadSettings& s, const std::vector<double>& breakpoints) {
    if (b == a) return 0.0;
    if (b < a) return -integrate_checked(f, b, a, s, breakpoints).value;
    return integrate_checked(f, a, b, s, breakpoints).value;
}

}  // namespace hyperangle
