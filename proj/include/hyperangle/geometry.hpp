#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace hyperangle {

// A vector of R^{n+1} with the Minkowski form of signature (n, 1).
class LorentzVector {
public:
    explicit LorentzVector(Eigen::VectorXd coords);
    LorentzVector(std::initializer_list<double> coords);

    int n() const { return static_cast<int>(c_.size()) - 1; }
    const Eigen::VectorXd& coords() const { return c_; }
    double operator[](int i) const { return c_[i]; }

private:
    Eigen::VectorXd c_;
};

// Upper sheet of <x,x> = -1.
class HyperboloidPoint : public LorentzVector {
public:
    explicit HyperboloidPoint(const LorentzVector& v, double tol = 1e-9);
    HyperboloidPoint(std::initializer_list<double> coords);
};

class GroupElement {
public:
    explicit GroupElement(Eigen::MatrixXd m, double tol = 1e-9);

    int n() const { return static_cast<int>(m_.rows()) - 1; }
    const Eigen::MatrixXd& matrix() const { return m_; }
    double t() const { return t_; }

    GroupElement operator*(const GroupElement& o) const;
    GroupElement inverse() const;
    HyperboloidPoint apply(const HyperboloidPoint& x) const;
    HyperboloidPoint orbit_point() const;  // g e_{n+1}

private:
    Eigen::MatrixXd m_;
    double t_;
};

struct AngleValue {
    double radians;
};

double minkowski_inner(const LorentzVector& x, const LorentzVector& y);
double hyperbolic_distance(const HyperboloidPoint& x, const HyperboloidPoint& y);

double group_norm_sq(const GroupElement& g);
double cartan_t(const GroupElement& g);

GroupElement identity_element(int n);
GroupElement make_translation(double t, int n);
// Rotation by `angle` in the (i, j) coordinate plane, 0 <= i, j < n.
GroupElement make_rotation(int n, int i, int j, double angle);
GroupElement random_rotation(int n, std::mt19937_64& rng);
GroupElement random_element(int n, double t, std::mt19937_64& rng);

HyperboloidPoint base_point(int n);
LorentzVector point_N(int n);
GroupElement g_N(int n);

AngleValue angle_at_base(const HyperboloidPoint& x, const HyperboloidPoint& y);
// Total variant: a point at the base is replaced by N = g_N e_{n+1}, which has
// direction e_1. Not used by any statistic.
AngleValue angle_at_base_total(const HyperboloidPoint& x, const HyperboloidPoint& y);
AngleValue theta_of(const GroupElement& g);

double right_mult_norm_sq(const GroupElement& g, const GroupElement& M);
AngleValue right_mult_angle(const GroupElement& g, const GroupElement& M);

// Angle between two nonzero Euclidean vectors of length `dim`:
// 2 atan2(|u^ - v^|, |u^ + v^|), accurate also near 0 and pi.
double vector_angle(const double* u, const double* v, int dim);

// Domain-clamped inverse functions. Arguments outside the domain by more than
// 1e-6 throw InvariantError; smaller excursions are clamped and counted.
double clamped_acosh(double x);
double clamped_acos(double x);

struct ClampStats {
    std::uint64_t activations;
    double max_violation;
};
ClampStats clamp_stats();
void reset_clamp_stats();

}  // namespace hyperangle
