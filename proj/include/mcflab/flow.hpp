#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mcflab/diagnostics.hpp"
#include "mcflab/geometry.hpp"

namespace mcflab {

// Initial-condition request: a factory name plus named parameters.
// Supported names (parameters):
//   circle (radius) | ellipse (a, b)                  -- flat curves
//   geodesic_circle (rho)                             -- sphere-base curve
//   sphere (radius) | ellipsoid (a, b, c)             -- radial graphs
//   offset_sphere (ox, oy, oz)                        -- radial graph
struct ShapeSpec {
    std::string name;
    std::map<std::string, double> params;
};

struct FlowConfig {
    ModelSpace model = ModelSpace::flat(2);
    ShapeSpec shape{"circle", {{"radius", 1.0}}};
    int n_vertices = 256;             // curves
    int n_theta = 32, n_phi = 64;     // graphs

    double cfl = 0.2;                 // c in (0, 1]
    double h_stop_factor = 50.0;      // stop when H_max >= factor * initial H_max
    double min_volume_fraction = 1e-3;
    int cadence = 10;                 // record diagnostics every k steps
    std::vector<double> deltas{0.1, 0.25, 0.5};
    double alpha = 0.5;
    bool redistribute = true;         // curves: uniform-arclength respacing
    bool polar_filter = true;         // graphs: high-mode damping near the poles
    bool keep_geometry = false;       // cache GeometryField per snapshot
    std::uint64_t seed = 0;

    void validate() const;  // throws ValidationError
};

enum class StopReason { None, HStop, MinVolume, DtUnderflow };

struct Snapshot {
    double t = 0.0;
    double dt = 0.0;  // step size used to reach this state (0 for the initial one)
    DiscreteHypersurface surface;
    DiagnosticsRow row;
    std::optional<GeometryField> geom;  // populated when keep_geometry is set
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
    StopReason stop = StopReason::None;
    double T_hat = 0.0;      // last t plus first-order remaining-volume extrapolation
    long steps = 0;
    double initial_H_max = 0.0;
    double initial_volume = 0.0;
    // Times at which curve vertices were respaced; material identity is broken
    // across these instants, so residual windows must not straddle them.
    std::vector<double> redistribution_times;
};

DiscreteHypersurface make_initial(const FlowConfig& cfg);

// One explicit Euler step of the normal motion by ||H||.  Curves move their
// vertices by dt * ||H|| * xi (sphere-base curves are reprojected onto the
// base sphere); radial graphs update r by dt * ||H|| / <u, xi>.  Material
// identifiers are preserved.  Throws StepRejected when a radial value turns
// nonpositive, the graph loses star-shapedness (|<u, xi>| < 0.1), or the
// post-step state fails geometry evaluation.
DiscreteHypersurface flow_step(const DiscreteHypersurface& s, const ModelSpace& model,
                               double dt);

// Variant reusing an already-computed geometry field; performs only the cheap
// pointwise checks and leaves full validation to the caller's next geometry
// evaluation (run_flow folds that into its retry loop).
DiscreteHypersurface flow_step_cached(const DiscreteHypersurface& s,
                                      const GeometryField& geom, double dt);

// Overwrite the two degenerate pole rows of a radial graph with the even
// quartic extrapolation of the phi-averaged profile through the three nearest
// rings, (15 r1 - 6 r2 + r3) / 10.  Exact on spheres, O(dtheta^6) on smooth
// surfaces; called after every graph step so the pole carries no independent
// degree of freedom (evolving it by its own replaced curvature is an unstable
// feedback loop with the adjacent row's stencil).
void fill_pole_rows(DiscreteHypersurface& s);

// Parabolic step limit c * h^2 / max(1, lambda_max^2 h^2) with h the minimum
// metric vertex spacing.  When the polar filter is active the phi spacing of
// each latitude row is the stability length of the kept band,
// 2 sqrt(G) / m_keep(i), rather than the raw grid spacing.  Throws
// DtUnderflow below 1e-14.
double cfl_dt(const DiscreteHypersurface& s, const GeometryField& geom,
              const FlowConfig& cfg);

// Number of Fourier modes kept at latitude row i by the polar filter:
// max(2, floor(2 sin(theta_i) / dtheta)); rows where this reaches np/2 are
// left untouched.
int polar_filter_modes(const DiscreteHypersurface& s, int row);

// Project each latitude row of a radial graph onto its kept Fourier band.
// Stabilizes the shrinking phi spacing near the poles so the step size is
// governed by the theta resolution; a no-op for curves.
void apply_polar_filter(DiscreteHypersurface& s);

// Respace curve vertices to uniform arclength with a periodic chordal
// Catmull-Rom interpolant.  Geometry-preserving to interpolation order; the
// enclosed volume changes by less than (max spacing)^3 per call.  Identifiers
// are left in place (this is exactly why verifier windows forbid it).
DiscreteHypersurface redistribute(const DiscreteHypersurface& s);

// Integrate until a stop threshold fires.  Records a diagnostics row for the
// initial state, every cadence-th step, and the final state.  Propagates
// StepRejected exhaustion (20 halvings) as FlowStalled.
Trajectory run_flow(const FlowConfig& cfg);

}  // namespace mcflab
