#pragma once

#include <string>
#include <vector>

#include "mcflab/geometry.hpp"
#include "mcflab/model.hpp"

namespace mcflab {

// One record of every monitored scalar for a snapshot.  Field order is the
// CSV column contract (cli-io serializes in exactly this order, with one
// psi column per configured delta).  The ratio fields are meaningful for the
// convex states this laboratory runs; they are reported raw otherwise.
struct DiagnosticsRow {
    double t = 0.0;
    double dt = 0.0;
    double H_max = 0.0;
    double H_min = 0.0;
    double collapse_ratio = 0.0;  // H_max / H_min
    double lambda_max = 0.0;      // global extrema over vertices
    double lambda_min = 0.0;
    double eigen_ratio = 0.0;  // sup over vertices of lambda_max(x)/lambda_min(x)
    double epsilon_sharp = 0.0;
    double convexity_margin = 0.0;
    std::vector<double> psi_sup;  // sup psi_delta, one per configured delta
    double vol = 0.0;
    double grad_ratio = 0.0;
    bool sobolev_1 = false;
    bool sobolev_2 = false;
    double ricci_bound = 0.0;
    double intrinsic_diameter = 0.0;
    double myers_bound = 0.0;
};

struct PinchingField {
    std::vector<double> values;
    double sup = 0.0;
};

// psi_delta = (||A||^2 - ||H||^2/n) / ||H||^(2-delta); identically zero for
// curves (single principal curvature).  Throws ZeroMeanCurvature unless
// ||H|| > 0 everywhere.
PinchingField pinching_psi(const GeometryField& geom, double delta);

// Largest epsilon with ||H||^2 lambda_min >= n^2 L + eps ||H||^3 at every
// vertex, clamped to <= 1 for comparability with the pinching formulas; may
// be <= 0 and is reported as-is then.
double epsilon_sharp(const GeometryField& geom, const ModelSpace& model);
double epsilon_sharp(const GeometryField& geom, double L);

// min over vertices of ||H||^2 lambda_min - 2 n^2 L; positive iff the state
// is inside the convexity-preserving regime.
double convexity_margin(const GeometryField& geom, const ModelSpace& model);
double convexity_margin(const GeometryField& geom, double L);

// sup over vertices of ||grad ||H|| ||^2 / ||H||^4.
double gradient_ratio(const GeometryField& geom);

// Margin of the pointwise inequality
//   ||H|| Tr(A^3) - ||A||^4 >= n eps^2 ||H||^2 (||A||^2 - ||H||^2/n),
// normalized per-vertex by ||H||^4 (the common homogeneity scale of both
// sides) and minimized over vertices; nonnegative up to rounding for convex
// states with eps from epsilon_sharp.
double pinching_inequality_margin(const GeometryField& geom, double eps);

struct SobolevCheck {
    bool cond1 = false;
    bool cond2 = false;
    double value1 = 0.0;  // left-hand side of the volume condition
    double value2 = 0.0;  // length scale compared against R_bar / 2
};

// Volume and injectivity-radius admissibility conditions; b = sqrt(K_bar).
// Throws ArcsinDomain when b * (volume scale) exceeds 1 in condition 2.
SobolevCheck sobolev_conditions(const DiscreteHypersurface& s, const GeometryField& geom,
                                const ModelSpace& model, double alpha);

struct RicciMyers {
    double ricci_lb = 0.0;   // (n-1) (min lambda_1)^2
    double diameter = 0.0;   // intrinsic, via shortest paths on the grid graph
    double myers_bound = 0.0;
    bool ok = true;
};

// Curves report the exact diameter (half the length) and pass trivially;
// graphs run Dijkstra with the pole rows collapsed to single nodes and accept
// diameter <= myers_bound * (1 + 2 * grid_tol), grid_tol = 4 dtheta^2.
RicciMyers ricci_myers(const DiscreteHypersurface& s, const GeometryField& geom);

// Exhaustive max over all vertex pairs (O(V) Dijkstra runs); test oracle for
// the seeded farthest-point sweep used by ricci_myers.
double intrinsic_diameter_all_pairs(const DiscreteHypersurface& s, const GeometryField& geom);

// Assemble the full row.  An ArcsinDomain from the Sobolev check is recorded
// as condition 2 failing rather than propagated.
DiagnosticsRow diagnostics_row(double t, double dt, const DiscreteHypersurface& s,
                               const GeometryField& geom, const ModelSpace& model,
                               const std::vector<double>& deltas, double alpha);

}  // namespace mcflab
