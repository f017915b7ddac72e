#include "mcflab/shapes.hpp"

#include <cmath>
#include <numeric>

#include "mcflab/errors.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/gridutil.hpp"

namespace mcflab {

namespace {

void default_material(DiscreteHypersurface& s) {
    s.material.resize(s.vertex_count());
    std::iota(s.material.begin(), s.material.end(), 0u);
}

}  // namespace

DiscreteHypersurface make_circle(double radius, int n_vertices) {
    return make_ellipse(radius, radius, n_vertices);
}

DiscreteHypersurface make_ellipse(double a, double b, int n_vertices) {
    if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("ellipse semi-axes must be positive");
    DiscreteHypersurface s;
    s.kind = SurfaceKind::CurveFlat;
    s.model = ModelSpace::flat(2);
    s.pts2.resize(n_vertices);
    for (int i = 0; i < n_vertices; ++i) {
        const double t = 2.0 * M_PI * i / n_vertices;
        s.pts2[i] = {a * std::cos(t), b * std::sin(t)};
    }
    default_material(s);
    validate_surface(s);
    return s;
}

DiscreteHypersurface make_sphere(double radius, int n_theta, int n_phi) {
    return make_ellipsoid(radius, radius, radius, n_theta, n_phi);
}

DiscreteHypersurface make_ellipsoid(double a, double b, double c, int n_theta,
                                    int n_phi) {
    if (!(a > 0.0) || !(b > 0.0) || !(c > 0.0))
        throw ValidationError("ellipsoid semi-axes must be positive");
    DiscreteHypersurface s;
    s.kind = SurfaceKind::RadialGraph;
    s.model = ModelSpace::flat(3);
    s.n_theta = n_theta;
    s.n_phi = n_phi;
    s.radial.resize(static_cast<std::size_t>(n_theta) * n_phi);
    if (a == b && b == c) {
        // Exact constant radii: the general formula below rounds |u|^2 to
        // 1 +/- ulp vertex by vertex, and second differences amplify that
        // jitter by 1/dphi^2.
        std::fill(s.radial.begin(), s.radial.end(), a);
    } else {
        const GraphGrid& gg = GraphGrid::get(n_theta, n_phi);
        for (int i = 0; i < n_theta; ++i) {
            for (int j = 0; j < n_phi; ++j) {
                const double ux = gg.sin_t[i] * gg.cos_p[j];
                const double uy = gg.sin_t[i] * gg.sin_p[j];
                const double uz = gg.cos_t[i];
                const double q =
                    ux * ux / (a * a) + uy * uy / (b * b) + uz * uz / (c * c);
                s.radial[static_cast<std::size_t>(i) * n_phi + j] = 1.0 / std::sqrt(q);
            }
        }
    }
    default_material(s);
    validate_surface(s);
    return s;
}

DiscreteHypersurface make_offset_sphere(const Eigen::Vector3d& offset, int n_theta,
                                        int n_phi) {
    if (offset.norm() >= 1.0)
        throw ValidationError("offset sphere requires |offset| < 1");
    DiscreteHypersurface s;
    s.kind = SurfaceKind::RadialGraph;
    s.model = ModelSpace::flat(3);
    s.n_theta = n_theta;
    s.n_phi = n_phi;
    s.radial.resize(static_cast<std::size_t>(n_theta) * n_phi);
    const GraphGrid& gg = GraphGrid::get(n_theta, n_phi);
    for (int i = 0; i < n_theta; ++i) {
        for (int j = 0; j < n_phi; ++j) {
            const Eigen::Vector3d u{gg.sin_t[i] * gg.cos_p[j],
                                    gg.sin_t[i] * gg.sin_p[j], gg.cos_t[i]};
            // Solve |offset + r u| = 1 for r > 0.
            const double cu = offset.dot(u);
            s.radial[static_cast<std::size_t>(i) * n_phi + j] =
                -cu + std::sqrt(cu * cu + 1.0 - offset.squaredNorm());
        }
    }
    default_material(s);
    validate_surface(s);
    return s;
}

DiscreteHypersurface make_geodesic_circle(double rho, int n_vertices, double a) {
    DiscreteHypersurface s;
    s.kind = SurfaceKind::CurveSphereBase;
    s.model = ModelSpace::sphere_base(a);
    const double rs = s.base_radius();
    if (!(rho > 0.0) || !(rho < M_PI * rs))
        throw ValidationError("geodesic radius outside (0, pi * base_radius)");
    const double alpha = rho / rs;  // colatitude on the embedded base sphere
    s.pts3.resize(n_vertices);
    for (int i = 0; i < n_vertices; ++i) {
        // phi increasing makes xi = nu x T point toward the pole (inward).
        const double phi = 2.0 * M_PI * i / n_vertices;
        s.pts3[i] = rs * Eigen::Vector3d{std::sin(alpha) * std::cos(phi),
                                         std::sin(alpha) * std::sin(phi),
                                         std::cos(alpha)};
    }
    s.curve_center3 = rs * Eigen::Vector3d{0, 0, 1};
    default_material(s);
    validate_surface(s);
    return s;
}

}  // namespace mcflab
