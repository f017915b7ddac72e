#pragma once

#include "mcflab/types.hpp"

namespace mcflab {

// Initial-condition factories.  Curves are sampled counterclockwise; graphs
// use the inclusive lat-long grid of types.hpp.  All outputs pass
// validate_surface.

DiscreteHypersurface make_circle(double radius, int n_vertices);
DiscreteHypersurface make_ellipse(double a, double b, int n_vertices);
DiscreteHypersurface make_sphere(double radius, int n_theta, int n_phi);
// Semi-axes (a, b, c) along (x, y, z).
DiscreteHypersurface make_ellipsoid(double a, double b, double c, int n_theta,
                                    int n_phi);
// Radial graph of a unit sphere whose center is offset from the chart origin;
// exact curvatures are identically 1, which makes it a convergence oracle.
DiscreteHypersurface make_offset_sphere(const Eigen::Vector3d& offset, int n_theta,
                                        int n_phi);
// Geodesic circle of geodesic radius rho about the north pole of the
// homogeneous sphere base with parameter a.
DiscreteHypersurface make_geodesic_circle(double rho, int n_vertices, double a);

}  // namespace mcflab
