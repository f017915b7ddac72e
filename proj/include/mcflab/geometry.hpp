#pragma once

#include "mcflab/types.hpp"

namespace mcflab {

// Validates structural invariants: minimum resolution (curves >= 16 vertices,
// graphs >= 16 x 32), positive radial values, distinct adjacent vertices and
// simplicity (no self-intersection) for curves.  Throws DegenerateGeometry /
// DimensionMismatch.
void validate_surface(const DiscreteHypersurface& s);

// Evaluates the full pointwise geometry of a surface.  Second-order central
// stencils everywhere; on radial graphs the two pole rows are replaced by the
// mean of the adjacent latitude row after evaluation (the chart is singular
// there).  Throws DegenerateGeometry on non-positive area elements.
GeometryField compute_geometry(const DiscreteHypersurface& s);

// Divergence-form Laplace-Beltrami of a per-vertex scalar field.  On graphs
// the pole rows are closed with a finite-volume cap balance, which makes the
// operator exactly conservative against quadrature_weights.
std::vector<double> laplace_beltrami(const DiscreteHypersurface& s,
                                     const GeometryField& geom,
                                     const std::vector<double>& f);

// Contravariant surface gradient of a scalar field (n components per vertex)
// and its pointwise norm.
struct GradientField {
    std::vector<double> comps;  // n * count
    std::vector<double> norm;   // count
};
GradientField intrinsic_gradient(const DiscreteHypersurface& s,
                                 const GeometryField& geom,
                                 const std::vector<double>& f);

// Quadrature weight per vertex (chart cell measure, without the area element).
std::vector<double> quadrature_weights(const DiscreteHypersurface& s);

// Total n-volume: sum of area element times cell weight.
double total_volume(const DiscreteHypersurface& s, const GeometryField& geom);

// Integral of a per-vertex density against the area measure.
double integrate(const DiscreteHypersurface& s, const GeometryField& geom,
                 const std::vector<double>& f);

// Minimum metric vertex spacing used by the CFL rule.  For curves the minimum
// chord; for graphs the minimum of theta edge lengths and effective
// (stabilized) phi edge lengths; see flow.hpp for the polar mode cap.
double min_vertex_spacing(const DiscreteHypersurface& s, const GeometryField& geom);

// Serial reference implementations used by tests and the kernel benchmark.
// Straight-line single-threaded code, independent of the production kernels.
namespace reference {
GeometryField compute_geometry(const DiscreteHypersurface& s);
std::vector<double> laplace_beltrami(const DiscreteHypersurface& s,
                                     const GeometryField& geom,
                                     const std::vector<double>& f);
}  // namespace reference

}  // namespace mcflab
