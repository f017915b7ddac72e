#pragma once

#include <random>
#include <string>
#include <vector>

#include "mcflab/flow.hpp"

namespace mcflab {

// ---------------------------------------------------------------------------
// Evolution-equation residuals
//
// Every dynamic identity of the geometry (metric, mean curvature, area
// element, second-form norm) is checked the same way: integrate a short
// fixed-step window, form the time derivative of the discrete field by
// central differences across recorded states, subtract the discrete spatial
// operators evaluated on the middle state, and report the invariant norm of
// what is left.  Graph snapshots are sampled at fixed chart points while the
// equations hold along material trajectories, so the graph residuals include
// the tangential-drift correction (the Lie/advective term of the chart
// velocity); curves carry their identifiers with the motion and need none.
//
// On round data (circles, spheres, geodesic circles) every spatial operator
// involved is exact, so the residual is purely the time-stepping defect:
// first order in dt, and below `round_ceiling` once dt is small enough.
// ---------------------------------------------------------------------------

struct VerifierConfig {
    double round_ceiling = 1e-6;   // exact-solution windows: pure time error
    double window_ceiling = 5e-2;  // generic curved windows: truncation backstop
    double anorm_ceiling = 1e-4;   // ||A||^2 law, whose quartic terms are noisier
    double simons_round_ceiling = 1e-8;  // static identity on round spheres
    double factor_slack = 0.30;    // accepted relative band around expected factors
    int polar_margin = 3;          // minimum graph rows excluded at each pole;
                                   // the effective margin grows with the grid
                                   // (max(polar_margin, n_theta / 8)) so the
                                   // excluded cap is a fixed physical region
};

struct ResidualReport {
    std::string equation;        // metric | mean_curvature | volume |
                                 // second_form_norm | simons
    double t0 = 0.0, t1 = 0.0;   // window covered (both zero for static checks)
    double max_residual = 0.0;   // sup of the invariant residual norm
    double l2_residual = 0.0;    // area-weighted RMS over the window
    double integrated_residual = 0.0;  // volume law: max relative integral defect
    double form_agreement = 0.0;       // mean-curvature law on a curved base:
                                       // sup gap between the composed right-hand
                                       // side and its classical expansion
    int space_order = 2;
    int time_order = 1;
    std::vector<double> factors;       // refinement decay factors (empty when the
                                       // report covers a single window)
    double expected_factor = 0.0;      // 2 per dt halving, 4 per grid doubling
    double ceiling = 0.0;
    bool pass = false;  // residual below the ceiling and every factor within
                        // `factor_slack` of the expected one
};

// Integrate `steps` explicit Euler steps of size dt from s0, recording every
// state together with its geometry.  Redistribution and polar filtering stay
// off so vertex identity is preserved across the whole window; diagnostics
// rows are left empty.  Throws WindowTooShort for steps < 2 and propagates
// StepRejected / DegenerateGeometry from the flow.
Trajectory integrate_window(const DiscreteHypersurface& s0, int steps, double dt);

// d/dt g_ab = -2 ||H|| h_ab (plus the chart-drift Lie term for graphs).
ResidualReport verify_metric_evolution(const Trajectory& traj, double t0, double t1,
                                       const VerifierConfig& cfg = {});

// d/dt ||H|| = lap ||H|| + ||H|| ||A||^2 - 3 ||H|| Tr((A^phi_xi)^2)_H.
// On a curved base the report also carries `form_agreement`, the pointwise gap
// against the classical scalar expansion lap k + k^3 + 3 a^2 k; disagreement
// beyond rounding fails the report regardless of the residual size.
ResidualReport verify_mean_curvature_evolution(const Trajectory& traj, double t0,
                                               double t1,
                                               const VerifierConfig& cfg = {});

// d/dt d(mu) = -||H||^2 d(mu), checked both per vertex (log of the area
// element, with the chart divergence correction for graphs) and in integrated
// form  d/dt Vol = -int ||H||^2 dmu  (reported relatively in
// `integrated_residual`).
ResidualReport verify_volume_evolution(const Trajectory& traj, double t0, double t1,
                                       const VerifierConfig& cfg = {});

// d/dt ||A||^2 = lap ||A||^2 - 2 ||nabla A||^2 + 2 ||A||^4 on the flat model.
ResidualReport verify_second_form_evolution(const Trajectory& traj, double t0,
                                            double t1,
                                            const VerifierConfig& cfg = {});

// Static identity  lap h_ab = (nabla d||H||)_ab + ||H|| (A^2)_ab - ||A||^2 h_ab
// for surfaces in the flat model (n = 2).  On round spheres every term cancels
// exactly in the discretization and the residual is pure rounding.
ResidualReport verify_simons_identity(const DiscreteHypersurface& s,
                                      const VerifierConfig& cfg = {});

enum class EvolutionLaw { Metric, MeanCurvature, Volume, SecondFormNorm };

// Temporal Richardson study: the same physical window integrated at dt, dt/2
// and dt/4 (steps, 2*steps, 4*steps).  Residual fields are evaluated at the
// shared interior times and the decay factor is measured on the
// *level-to-level field differences*, which isolates the first-order time
// component even when a resolution-limited spatial floor dominates the raw
// norms.  Expected factor: 2 per halving.  The absolute statistics in the
// report come from the finest level and are judged against the generic window
// ceiling (the tight round ceiling applies to single windows at a dt tuned
// against the differencing floor, not to refinement studies).
ResidualReport time_refinement(EvolutionLaw law, const DiscreteHypersurface& s0,
                               int steps, double dt, const VerifierConfig& cfg = {});

// Spatial study of the static identity: one report per grid level plus a
// combined one whose factors are the successive max-residual ratios
// (expected 4 per doubling).
ResidualReport simons_refinement(const std::vector<DiscreteHypersurface>& levels,
                                 const VerifierConfig& cfg = {});

// ---------------------------------------------------------------------------
// Polynomial-type reaction maps and maximum-principle runs
//
// Reaction terms are built only from the five fibrewise primitives: tensoring
// with a fixed section on the left or right, the k-fold tensor power of the
// argument, metric contraction of two covariant slots, and the trace of a
// once-raised slot (realized on all-covariant components as a metric
// contraction against the raising slot).  A map is a sum of coefficient-
// weighted chains of such steps; symmetric rank-2 output is symmetrized after
// summation.  Everything evaluates pointwise against the frozen background
// metric, so positivity questions reduce to linear algebra per vertex.
// ---------------------------------------------------------------------------

struct PolynomialTypeMap {
    struct Step {
        enum class Kind { TensorWithSection, TensorPower, MetricContraction, RaisedTrace };
        Kind kind = Kind::TensorPower;

        // TensorWithSection: chart components of the section, either one set
        // of n^rank values (constant) or count * n^rank (per vertex).
        std::vector<double> section;
        int section_rank = 0;
        bool on_left = false;  // B (x) T instead of T (x) B

        int k = 2;             // TensorPower

        int i = 0, j = 1;      // MetricContraction slots (i < j); RaisedTrace
                               // contracts slot i against the raised slot.
    };
    struct Chain {
        std::vector<Step> steps;  // applied in order; an empty chain is the identity
        double coeff = 1.0;
    };

    std::vector<Chain> chains;  // an empty sum is the zero map
    int input_rank = 0;         // 0 (scalar) or 2 (symmetric bilinear)

    // Common output rank of all chains.  Throws IllTypedMap when a step is
    // inapplicable to the rank it receives or the chains disagree.
    int output_rank() const;

    static PolynomialTypeMap zero(int input_rank);
    static PolynomialTypeMap scale(int input_rank, double coeff);
    // coeff * S^k: the k-th power composed through the metric (S^2 = S g^-1 S
    // for rank 2, the plain k-th power for scalars).
    static PolynomialTypeMap power(int input_rank, int k, double coeff);
    // S Q + Q S + c S for a fixed symmetric section Q (packed chart components,
    // 3 per vertex).  Satisfies the null-eigenvector condition whenever
    // 2 Q + c g is positive semidefinite at every point.
    static PolynomialTypeMap sandwich(std::vector<double> q_field, double c);
};

struct MaxPrincipleResult {
    std::vector<double> times;      // steps + 1 entries
    std::vector<double> min_value;  // per entry: field minimum (scalar runs) or
    std::vector<double> max_value;  // smallest/largest generalized eigenvalue
    std::vector<double> integral;   // scalar runs: quadrature mass per entry
    std::vector<double> final_state;  // the evolved field after the last step
};

// Largest stable step for the background's diffusion operator plus an upwind
// drift: the reciprocal of  max_v (|diagonal_v| + sum_a |X^a_v| / h_a).
// `drift` may be empty (none) or hold dim() contravariant components per
// vertex.  The tensor operator shares the scalar flux conductances, so the
// same bound serves both runs.
double mp_cfl_dt(const DiscreteHypersurface& background,
                 const std::vector<double>& drift);

// Explicit Euler for  d rho/dt = lap rho + X(rho) + P(rho)  on the frozen
// background, with the conservative flux-form Laplacian, upwind drift in
// chart coordinates, and a pointwise polynomial-type reaction (P must map
// scalars to scalars).  Graph backgrounds must have an orthogonal chart
// (axisymmetric), which makes the operator an M-matrix under the CFL bound
// and turns min/max preservation into a convex-combination argument; the
// polar cap is one aggregated cell, so pole rows are averaged at entry and a
// drift must vanish there.  Throws CflViolation when dt exceeds the bound.
MaxPrincipleResult mp_scalar_run(const DiscreteHypersurface& background,
                                 const std::vector<double>& rho0,
                                 const std::vector<double>& drift,
                                 const PolynomialTypeMap& reaction, int steps,
                                 double dt);

// Explicit Euler for  d S/dt = lap S + nabla_X S + P(S)  on symmetric
// 2-tensors over an orthogonal-chart graph background.  The Laplacian is the
// flux form applied through per-edge congruence transports
// S |-> M^T S M,  M = A_w^-1 R A_v,  A = g^(1/2),  R the polar factor of the
// first-order parallel transport conjugated into frames, so every transport
// is an exact g-isometry: the background metric is an exact fixed point,
// conformal fields reduce to the scalar operator, and each update is a convex
// combination of positivity-preserving pullbacks plus the reaction.  Pole
// rows are slaved to the mean of the adjacent ring after every step.
MaxPrincipleResult mp_tensor_run(const DiscreteHypersurface& background,
                                 const std::vector<double>& S0,
                                 const std::vector<double>& drift,
                                 const PolynomialTypeMap& reaction, int steps,
                                 double dt);

// Constructive generators for property fuzzing (no rejection sampling).
//
// Tensor reaction S -> S Q + Q S + c S with Q = A Qf A, A = g^(1/2), Qf a
// random constant frame tensor and c >= -2 lambda_min(Qf), so that
// 2 Q + c g = A (2 Qf + c I) A  is positive semidefinite everywhere and the
// null-eigenvector condition holds by construction.
PolynomialTypeMap random_psd_sandwich(const DiscreteHypersurface& background,
                                      std::mt19937& rng);

// Scalar reaction: a short random sum of pure powers c_i rho^(k_i) with
// k_i >= 1, so P(0) = 0 and the zero level stays a barrier for nonnegative
// data.
PolynomialTypeMap random_scalar_reaction(std::mt19937& rng);

}  // namespace mcflab
