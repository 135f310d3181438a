#include "hyperangle/geometry.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <string>

#include "hyperangle/errors.hpp"

namespace hyperangle {

namespace {

std::atomic<std::uint64_t> g_clamp_count{0};
std::atomic<double> g_clamp_max{0.0};

void note_clamp(double violation) {
    g_clamp_count.fetch_add(1, std::memory_order_relaxed);
    double cur = g_clamp_max.load(std::memory_order_relaxed);
    while (violation > cur && !g_clamp_max.compare_exchange_weak(cur, violation)) {
    }
}

constexpr double kDomainSlack = 1e-6;

Eigen::MatrixXd lorentz_J(int n) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Identity(n + 1, n + 1);
    J(n, n) = -1.0;
    return J;
}

}  // namespace

double clamped_acosh(double x) {
    if (x >= 1.0) return std::acosh(x);
    const double v = 1.0 - x;
    if (!(v <= kDomainSlack))
        throw InvariantError("acosh argument " + std::to_string(x) + " below 1 beyond tolerance");
    note_clamp(v);
    return 0.0;
}

double clamped_acos(double x) {
    if (x >= -1.0 && x <= 1.0) return std::acos(x);
    const double v = std::fabs(x) - 1.0;
    if (!(v <= kDomainSlack))
        throw InvariantError("acos argument " + std::to_string(x) + " outside [-1, 1] beyond tolerance");
    note_clamp(v);
    return x > 0 ? 0.0 : std::numbers::pi;
}

ClampStats clamp_stats() { return {g_clamp_count.load(), g_clamp_max.load()}; }

void reset_clamp_stats() {
    g_clamp_count.store(0);
    g_clamp_max.store(0.0);
}

LorentzVector::LorentzVector(Eigen::VectorXd coords) : c_(std::move(coords)) {
    if (c_.size() < 3) throw UsageError("Lorentz vectors need n >= 2 (length >= 3)");
}

LorentzVector::LorentzVector(std::initializer_list<double> coords)
    : LorentzVector(Eigen::Map<const Eigen::VectorXd>(coords.begin(), coords.size())) {}

HyperboloidPoint::HyperboloidPoint(const LorentzVector& v, double tol) : LorentzVector(v) {
    const double q = minkowski_inner(v, v);
    const double last = v[v.n()];
    // rounding in <x,x> grows with the size of the coordinates
    const double scale = std::max(1.0, last * last);
    if (!(std::fabs(q + 1.0) <= tol * scale) || !(last > 0.0))
        throw InvariantError("point is not on the upper hyperboloid sheet (<x,x> = " +
                             std::to_string(q) + ")");
}

HyperboloidPoint::HyperboloidPoint(std::initializer_list<double> coords)
    : HyperboloidPoint(LorentzVector(coords)) {}

GroupElement::GroupElement(Eigen::MatrixXd m, double tol) : m_(std::move(m)) {
    if (m_.rows() != m_.cols() || m_.rows() < 3)
        throw UsageError("group elements are square matrices of size n+1 >= 3");
    const int n = static_cast<int>(m_.rows()) - 1;
    const double corner = m_(n, n);
    if (!(corner >= 1.0 - 1e-12))
        throw InvariantError("g_{n+1,n+1} < 1: not in the identity component");
    const double scale = std::max(1.0, corner * corner);
    const Eigen::MatrixXd J = lorentz_J(n);
    const double form_err = (m_.transpose() * J * m_ - J).cwiseAbs().maxCoeff();
    if (!(form_err <= tol * scale))
        throw InvariantError("matrix does not preserve the Minkowski form (max error " +
                             std::to_string(form_err) + ")");
    const double det = m_.determinant();
    if (!(std::fabs(det - 1.0) <= tol * scale))
        throw InvariantError("determinant " + std::to_string(det) + " is not 1");
    t_ = clamped_acosh(std::max(corner, 1.0 - 1e-12));
}

GroupElement GroupElement::operator*(const GroupElement& o) const {
    if (o.n() != n()) throw UsageError("dimension mismatch in group product");
    return GroupElement(m_ * o.m_, 1e-8);
}

GroupElement GroupElement::inverse() const {
    const Eigen::MatrixXd J = lorentz_J(n());
    return GroupElement(J * m_.transpose() * J);
}

HyperboloidPoint GroupElement::apply(const HyperboloidPoint& x) const {
    if (x.n() != n()) throw UsageError("dimension mismatch applying group element");
    return HyperboloidPoint(LorentzVector(m_ * x.coords()), 1e-8);
}

HyperboloidPoint GroupElement::orbit_point() const {
    return HyperboloidPoint(LorentzVector(Eigen::VectorXd(m_.col(n()))), 1e-8);
}

double minkowski_inner(const LorentzVector& x, const LorentzVector& y) {
    if (x.n() != y.n()) throw UsageError("dimension mismatch in Minkowski form");
    const int n = x.n();
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += x[i] * y[i];
    return s - x[n] * y[n];
}

double hyperbolic_distance(const HyperboloidPoint& x, const HyperboloidPoint& y) {
    return clamped_acosh(-minkowski_inner(x, y));
}

double group_norm_sq(const GroupElement& g) { return 2.0 * g.matrix()(g.n(), g.n()); }

double cartan_t(const GroupElement& g) {
    const double c = g.matrix()(g.n(), g.n());
    if (c < 1.0 - 1e-9) throw InvariantError("g_{n+1,n+1} < 1");
    return clamped_acosh(c);
}

GroupElement identity_element(int n) {
    if (n < 2) throw UsageError("n must be >= 2");
    return GroupElement(Eigen::MatrixXd::Identity(n + 1, n + 1));
}

GroupElement make_translation(double t, int n) {
    if (n < 2) throw UsageError("n must be >= 2");
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n + 1, n + 1);
    m(0, 0) = m(n, n) = std::cosh(t);
    m(0, n) = m(n, 0) = std::sinh(t);
    return GroupElement(std::move(m));
}

GroupElement make_rotation(int n, int i, int j, double angle) {
    if (n < 2 || i < 0 || j < 0 || i >= n || j >= n || i == j)
        throw UsageError("rotation plane must be two distinct axes among the first n");
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n + 1, n + 1);
    const double c = std::cos(angle), s = std::sin(angle);
    m(i, i) = c;
    m(j, j) = c;
    m(i, j) = -s;
    m(j, i) = s;
    return GroupElement(std::move(m));
}

GroupElement random_rotation(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(-std::numbers::pi, std::numbers::pi);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n + 1, n + 1);
    // a few sweeps of Givens rotations over all coordinate planes
    for (int sweep = 0; sweep < 2; ++sweep)
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) m = make_rotation(n, i, j, ang(rng)).matrix() * m;
    return GroupElement(std::move(m));
}

GroupElement random_element(int n, double t, std::mt19937_64& rng) {
    const GroupElement k1 = random_rotation(n, rng);
    const GroupElement k2 = random_rotation(n, rng);
    return GroupElement(k1.matrix() * make_translation(t, n).matrix() * k2.matrix(), 1e-8);
}

HyperboloidPoint base_point(int n) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
    v[n] = 1.0;
    return HyperboloidPoint(LorentzVector(v));
}

LorentzVector point_N(int n) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n + 1);
    v[0] = 1.0;
    v[n] = std::numbers::sqrt2;
    return LorentzVector(v);
}

GroupElement g_N(int n) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n + 1, n + 1);
    m(0, 0) = m(n, n) = std::numbers::sqrt2;
    m(0, n) = m(n, 0) = 1.0;
    return GroupElement(std::move(m));
}

double vector_angle(const double* u, const double* v, int dim) {
    double nu = 0.0, nv = 0.0;
    for (int i = 0; i < dim; ++i) {
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    nu = std::sqrt(nu);
    nv = std::sqrt(nv);
    double dm = 0.0, dp = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double a = u[i] / nu, b = v[i] / nv;
        dm += (a - b) * (a - b);
        dp += (a + b) * (a + b);
    }
    return 2.0 * std::atan2(std::sqrt(dm), std::sqrt(dp));
}

namespace {

double spatial_norm(const LorentzVector& x) {
    double s = 0.0;
    for (int i = 0; i < x.n(); ++i) s += x[i] * x[i];
    return std::sqrt(s);
}

}  // namespace

AngleValue angle_at_base(const HyperboloidPoint& x, const HyperboloidPoint& y) {
    if (x.n() != y.n()) throw UsageError("dimension mismatch in angle_at_base");
    if (spatial_norm(x) <= 1e-12 || spatial_norm(y) <= 1e-12)
        throw DegenerateInputError("angle at the base point is undefined for the base point itself");
    return {vector_angle(x.coords().data(), y.coords().data(), x.n())};
}

AngleValue angle_at_base_total(const HyperboloidPoint& x, const HyperboloidPoint& y) {
    if (x.n() != y.n()) throw UsageError("dimension mismatch in angle_at_base_total");
    const LorentzVector N = point_N(x.n());
    const double* u = spatial_norm(x) <= 1e-12 ? N.coords().data() : x.coords().data();
    const double* v = spatial_norm(y) <= 1e-12 ? N.coords().data() : y.coords().data();
    return {vector_angle(u, v, x.n())};
}

AngleValue theta_of(const GroupElement& g) {
    const double t = g.t();
    if (t <= 1e-12) throw DegenerateInputError("theta is undefined for elements of K");
    const int n = g.n();
    Eigen::VectorXd u = g.matrix().col(n).head(n);
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(n);
    e1[0] = 1.0;
    return {vector_angle(u.data(), e1.data(), n)};
}

namespace {

// v = pi - v(g^{-1}, M), the angle entering the right-multiplication formulas.
double rightmult_v(const GroupElement& g, const GroupElement& M) {
    const HyperboloidPoint a = g.inverse().orbit_point();
    const HyperboloidPoint b = M.orbit_point();
    return std::numbers::pi - angle_at_base(a, b).radians;
}

}  // namespace

double right_mult_norm_sq(const GroupElement& g, const GroupElement& M) {
    if (g.n() != M.n()) throw UsageError("dimension mismatch in right_mult_norm_sq");
    const double tg = g.t(), tm = M.t();
    if (tg <= 1e-12 || tm <= 1e-12) return 2.0 * std::cosh(tg) * std::cosh(tm);
    const double v = rightmult_v(g, M);
    return 2.0 * (std::cosh(tg) * std::cosh(tm) + std::cos(v) * std::sinh(tg) * std::sinh(tm));
}

AngleValue right_mult_angle(const GroupElement& g, const GroupElement& M) {
    if (g.n() != M.n()) throw UsageError("dimension mismatch in right_mult_angle");
    const double tg = g.t(), tm = M.t();
    if (!(tg > tm)) throw PreconditionError("right_mult_angle requires t(g) > t(M)");
    if (tm <= 1e-12) return {0.0};
    const double v = rightmult_v(g, M);
    const double num = std::sin(v) * std::sinh(tm);
    const double den = std::cosh(tm) * std::sinh(tg) + std::cos(v) * std::cosh(tg) * std::sinh(tm);
    return {std::atan2(num, den)};
}

}  // namespace hyperangle
