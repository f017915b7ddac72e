#pragma once

#include <vector>

#include "mcflab/geometry.hpp"

namespace mcflab {

// Discrete covariant calculus in the surface chart (vertex index for curves,
// (theta, phi) for graphs), built from the same central differences as the
// metric itself.  Because every partial below is the *same* linear operator,
// the Christoffel construction is exactly metric-compatible: the discrete
// covariant derivative of g is identically zero, and tensor identities that
// rest on nabla g = 0 hold to rounding, not just to truncation order.
//
// Layouts (all row-major per vertex):
//   curves:  christoffels 1/vertex (Gamma^1_11); symmetric 2-tensors 1/vertex.
//   graphs:  symmetric 2-tensors 3/vertex as (tt, tp, pp);
//            christoffels 6/vertex as [6v + 3c + m] with upper index c in
//            {theta, phi} and m indexing (tt, tp, pp);
//            first covariant derivatives 6/vertex as [6v + 3a + m] meaning
//            nabla_a T_m.
// Graph pole rows carry copies of the adjacent interior row (same convention
// as GeometryField); consumers that need controlled accuracy must stay away
// from a polar margin.

// Christoffel symbols of the induced metric from central differences of g.
std::vector<double> christoffel_symbols(const DiscreteHypersurface& s,
                                        const GeometryField& geom);

// First covariant derivative of a symmetric 2-tensor field.
std::vector<double> covariant_derivative_sym2(const DiscreteHypersurface& s,
                                              const GeometryField& geom,
                                              const std::vector<double>& gamma,
                                              const std::vector<double>& T);

// Covariant Hessian (nabla d f)_{ab} of a scalar, via nested first passes.
std::vector<double> hessian(const DiscreteHypersurface& s, const GeometryField& geom,
                            const std::vector<double>& gamma,
                            const std::vector<double>& f);

// Rough (trace) Laplacian g^{cd} nabla_c nabla_d T_{ab} of a symmetric
// 2-tensor, as two nested covariant passes; exactly zero for T = g.
std::vector<double> tensor_laplacian_sym2(const DiscreteHypersurface& s,
                                          const GeometryField& geom,
                                          const std::vector<double>& gamma,
                                          const std::vector<double>& T);

// Pointwise ||nabla A||^2 = g^{ad} g^{be} g^{cf} nabla_a h_{bc} nabla_d h_{ef}
// for the second fundamental form of the surface; (dk/ds)^2 for curves.
std::vector<double> second_form_gradient_norm2(const DiscreteHypersurface& s,
                                               const GeometryField& geom);

// Symmetrised covariant gradient nabla_a V_b + nabla_b V_a of a tangent field
// given in contravariant chart components (n per vertex); output packed like a
// symmetric 2-tensor.
std::vector<double> symmetric_gradient(const DiscreteHypersurface& s,
                                       const GeometryField& geom,
                                       const std::vector<double>& gamma,
                                       const std::vector<double>& v_contra);

// Covariant divergence nabla_a V^a of a contravariant tangent field.
std::vector<double> divergence(const DiscreteHypersurface& s, const GeometryField& geom,
                               const std::vector<double>& gamma,
                               const std::vector<double>& v_contra);

// Eigenvalues of T relative to g (roots of det(T - mu g)), ascending,
// n per vertex; the invariant spectrum used for positivity tracking.
std::vector<double> generalized_eigenvalues_sym2(const DiscreteHypersurface& s,
                                                 const GeometryField& geom,
                                                 const std::vector<double>& T);

}  // namespace mcflab
