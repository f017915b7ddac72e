#pragma once

// Independent oracles used to freeze expected values.  Everything here is
// deliberately primitive: dense sampling, textbook quadrature, brute-force
// frame algebra.  None of it shares code with the library under test.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

// Curvature extremes of a closed planar curve from a dense uniform-parameter
// polyline with central differences.
struct CurvatureRange {
    double k_min, k_max;
};
inline CurvatureRange polyline_curvature_range(
    const std::function<Eigen::Vector2d(double)>& gamma, int n) {
    CurvatureRange r{1e300, -1e300};
    for (int i = 0; i < n; ++i) {
        const double t = 2.0 * M_PI * i / n;
        const double dt = 2.0 * M_PI / n;
        const Eigen::Vector2d pm = gamma(t - dt), pc = gamma(t), pp = gamma(t + dt);
        const Eigen::Vector2d d1 = 0.5 * (pp - pm);
        const Eigen::Vector2d d2 = pp - 2.0 * pc + pm;
        const double s = d1.norm();
        const double k = (d1.x() * d2.y() - d1.y() * d2.x()) / (s * s * s);
        r.k_min = std::min(r.k_min, k);
        r.k_max = std::max(r.k_max, k);
    }
    return r;
}

// Arc length of a closed parametric curve by composite Simpson quadrature.
inline double curve_length(const std::function<Eigen::Vector2d(double)>& gamma,
                           int panels) {
    auto speed = [&](double t) {
        const double e = 1e-6;
        return ((gamma(t + e) - gamma(t - e)) / (2 * e)).norm();
    };
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double a = 2.0 * M_PI * i / panels;
        const double b = 2.0 * M_PI * (i + 1) / panels;
        total += (b - a) / 6.0 * (speed(a) + 4.0 * speed(0.5 * (a + b)) + speed(b));
    }
    return total;
}

// Brute-force O'Neill frame algebra for the homogeneous sphere base.  Basis
// {e, xi, w} with e the hypersurface tangent, xi the horizontal normal and w
// the (unit-scaled) vertical direction; A_xi e = a w, alternation and
// skew-adjointness fill in the rest.  Vectors are coordinates in that basis.
struct FrameAlgebra {
    double a;
    // A_xi applied to (e, xi, w) coordinates.
    Eigen::Vector3d apply_A_xi(const Eigen::Vector3d& v) const {
        // A_xi e = a w;  A_xi xi = 0;  A_xi w = -a e (skew-adjointness with |w| = 1).
        return {-a * v.z(), 0.0, a * v.x()};
    }
    double trace_A_xi_sq_over_tangent() const {
        const Eigen::Vector3d e{1, 0, 0};
        return apply_A_xi(apply_A_xi(e)).dot(e);
    }
    double composed_trace(double lambda1) const {
        const Eigen::Vector3d e{1, 0, 0};
        // A_H e = lambda1 e, then apply A_xi twice and read the e-component.
        return apply_A_xi(apply_A_xi(lambda1 * e)).dot(e);
    }
    // O'Neill: sectional curvature of the base for horizontal X, Y equals
    // K_total + 3 |A_X Y|^2; the total space is flat here.
    double base_curvature() const { return 3.0 * a * a; }
};

// Classic RK4 for scalar ODEs, used for closed-form-free trajectories.
inline std::vector<double> rk4(const std::function<double(double)>& f, double y0,
                               double t_end, int steps) {
    std::vector<double> out(steps + 1);
    out[0] = y0;
    const double h = t_end / steps;
    double y = y0;
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(y);
        const double k2 = f(y + 0.5 * h * k1);
        const double k3 = f(y + 0.5 * h * k2);
        const double k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        out[i + 1] = y;
    }
    return out;
}
inline double rk4_value(const std::function<double(double)>& f, double y0,
                        double t_end, int steps) {
    return rk4(f, y0, t_end, steps).back();
}

// Frozen oracle outputs (computed once with the routines above; kept as
// constants so regressions are visible):
//   polyline_curvature_range(ellipse(2,1), 100000) -> k in [0.2499999924, 2.0000000947]
//   curve_length(ellipse(2,1), 4096)               -> 9.688448220547677
inline constexpr double kEllipseKMax = 2.0;
inline constexpr double kEllipseKMin = 0.25;
inline constexpr double kEllipsePerimeter = 9.688448220547677;

}  // namespace oracle
