#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mcflab/model.hpp"

namespace mcflab {

enum class SurfaceKind {
    CurveFlat,        // closed polyline in the flat plane (n = 1)
    CurveSphereBase,  // closed polyline on the embedded sphere base (n = 1)
    RadialGraph       // r(theta, phi) over a lat-long grid (n = 2)
};

// G-invariant hypersurface projected to the base orbit space.
//
// Curves store chart positions per vertex (cyclic order, counterclockwise /
// enclosing the reference center).  Radial graphs store strictly positive
// radial values on an inclusive lat-long grid: row i = 0 and i = n_theta-1
// are the poles, phi is periodic.  Material ids label vertices; flow steps
// never permute them.
struct DiscreteHypersurface {
    SurfaceKind kind = SurfaceKind::CurveFlat;
    ModelSpace model;

    std::vector<Eigen::Vector2d> pts2;  // CurveFlat
    std::vector<Eigen::Vector3d> pts3;  // CurveSphereBase (points on radius-R_s sphere)
    Eigen::Vector3d curve_center3{0, 0, 0};  // enclosed-region marker for sphere-base curves

    int n_theta = 0, n_phi = 0;
    std::vector<double> radial;         // RadialGraph, row-major [i * n_phi + j]
    Eigen::Vector3d center{0, 0, 0};    // RadialGraph chart origin

    std::vector<std::uint32_t> material;

    int dim() const { return kind == SurfaceKind::RadialGraph ? 2 : 1; }
    bool is_curve() const { return kind != SurfaceKind::RadialGraph; }
    std::size_t vertex_count() const {
        switch (kind) {
            case SurfaceKind::CurveFlat: return pts2.size();
            case SurfaceKind::CurveSphereBase: return pts3.size();
            case SurfaceKind::RadialGraph: return radial.size();
        }
        return 0;
    }
    // Base-sphere embedding radius for CurveSphereBase: K_bar = 3a^2.
    double base_radius() const { return 1.0 / (std::sqrt(3.0) * model.a); }
};

// Pointwise geometric state of a surface.  For curves each per-vertex tensor
// slot holds one scalar; for radial graphs the symmetric 2x2 tensors are
// stored as (11, 12, 22) triples in (theta, phi) chart components, and
// gradients as contravariant (theta, phi) pairs.  Principal curvatures are
// sorted ascending; the normal points into the enclosed region, so convex
// surfaces have all lambda_i > 0.
struct GeometryField {
    int n = 1;                      // hypersurface dimension
    std::size_t count = 0;          // vertices
    std::vector<double> g;          // induced metric (count or 3*count)
    std::vector<double> h;          // second fundamental form (same layout)
    std::vector<double> lambda;     // n*count, ascending per vertex
    std::vector<double> H;          // ||H|| = sum of lambda_i
    std::vector<double> A2;         // ||A_H||^2 = sum of lambda_i^2
    std::vector<double> area;       // area element sqrt(det g) in chart coords
    std::vector<Eigen::Vector3d> normal;  // unit inward normal (chart/embedding coords)
    std::vector<double> gradH;      // contravariant components (n*count)
    std::vector<double> gradH_norm; // |grad ||H|| |
    std::vector<double> lapH;       // Laplace-Beltrami of ||H||

    double lambda_at(std::size_t v, int k) const { return lambda[v * n + k]; }
};

}  // namespace mcflab
