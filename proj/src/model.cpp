#include "mcflab/model.hpp"

#include <cmath>
#include <limits>

namespace mcflab {

namespace {

void check_dim(const ModelSpace& model, int n) {
    if (n != model.hypersurface_dim())
        throw DimensionMismatch("hypersurface dimension does not match model base");
}

}  // namespace

double oneill_trace_xi(const ModelSpace& model, int n) {
    check_dim(model, n);
    switch (model.kind) {
        case ModelKind::FlatEuclidean:
            return 0.0;
        case ModelKind::HomogeneousSphereBase:
            // Single horizontal direction e orthogonal to xi contributes
            // <A_xi(A_xi e), e> = -|A_xi e|^2 = -a^2; xi contributes 0 by
            // alternation.
            return -model.a * model.a;
    }
    throw UnsupportedModel("unknown model kind");
}

std::vector<double> oneill_composed_trace(const ModelSpace& model,
                                          const std::vector<double>& lambda,
                                          int n) {
    check_dim(model, n);
    if (lambda.size() % static_cast<std::size_t>(n) != 0)
        throw DimensionMismatch("principal-curvature array not a multiple of n");
    const std::size_t count = lambda.size() / static_cast<std::size_t>(n);
    std::vector<double> out(count, 0.0);
    if (model.kind == ModelKind::HomogeneousSphereBase) {
        const double a2 = model.a * model.a;
        for (std::size_t i = 0; i < count; ++i) out[i] = -a2 * lambda[i * n];
    }
    return out;
}

double curly_r_trace(const ModelSpace& model, int n) {
    check_dim(model, n);
    switch (model.kind) {
        case ModelKind::FlatEuclidean:
        case ModelKind::HomogeneousSphereBase:
            // Both models have totally geodesic fibres with parallel O'Neill
            // tensor along the flow directions; the correction operator is
            // trace-free (in fact zero).
            return 0.0;
    }
    throw UnsupportedModel("unknown model kind");
}

AmbientExposure ambient_exposure(const ModelSpace& model) {
    switch (model.kind) {
        case ModelKind::FlatEuclidean:
            return AmbientExposure{0.0, 0.0, 0.0,
                                   std::numeric_limits<double>::infinity()};
        case ModelKind::HomogeneousSphereBase: {
            const double a2 = model.a * model.a;
            return AmbientExposure{0.0, a2, 3.0 * a2, M_PI / std::sqrt(3.0 * a2)};
        }
    }
    throw UnsupportedModel("unknown model kind");
}

}  // namespace mcflab
