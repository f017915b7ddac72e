#pragma once

#include <vector>

#include "mcflab/errors.hpp"

namespace mcflab {

enum class ModelKind {
    FlatEuclidean,         // flat base, trivial submersion data
    HomogeneousSphereBase  // 2-dimensional base of constant curvature 3a^2
};

// Curvature/submersion data of the ambient base space.
//   FlatEuclidean(dim):          base R^dim (dim = n+1 in {2,3}); a = 0.
//   HomogeneousSphereBase(a):    base dim 2 (hypersurfaces are curves, n = 1);
//                                fibre twist |A^phi_e xi| = a.
struct ModelSpace {
    ModelKind kind = ModelKind::FlatEuclidean;
    int base_dim = 2;    // dimension of the base manifold N
    double a = 0.0;      // O'Neill tensor magnitude

    static ModelSpace flat(int dim) {
        if (dim != 2 && dim != 3)
            throw DimensionMismatch("flat model supports base dimension 2 or 3");
        return ModelSpace{ModelKind::FlatEuclidean, dim, 0.0};
    }
    static ModelSpace sphere_base(double a) {
        if (!(a > 0.0))
            throw ValidationError("sphere-base model requires a > 0");
        return ModelSpace{ModelKind::HomogeneousSphereBase, 2, a};
    }

    int hypersurface_dim() const { return base_dim - 1; }
};

// Bounds used by the Sobolev/Myers diagnostics.
struct AmbientExposure {
    double L;        // sup of the vertical-correction term in the pinching margin
    double K;        // fibre curvature scale K = a^2
    double K_bar;    // upper sectional curvature bound of the base
    double R_bar;    // injectivity-radius lower bound (infinity for flat)
};

// Tr((A^phi_xi)^2)_H: trace of the squared O'Neill operator over the
// hypersurface tangent directions.  Flat: 0.  Sphere base (n = 1): -a^2.
double oneill_trace_xi(const ModelSpace& model, int n);

// Per-vertex Tr((A^phi_xi)^2 ∘ A_H) given the sorted principal curvatures.
// Flat: all zeros.  Sphere base (n = 1): -a^2 * lambda_1.
std::vector<double> oneill_composed_trace(const ModelSpace& model,
                                          const std::vector<double>& lambda,
                                          int n);

// Trace of the curvature correction operator curly-R acting on the shape
// tensor.  Identically zero for both supported models; any other request
// raises UnsupportedModel.
double curly_r_trace(const ModelSpace& model, int n);

AmbientExposure ambient_exposure(const ModelSpace& model);

}  // namespace mcflab
