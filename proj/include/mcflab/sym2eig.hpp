#pragma once

#include <cmath>
#include <utility>

namespace mcflab {

// Eigenvalues (ascending) of the symmetric 2x2 pencil T v = lambda g v with
// g = [E F; F G] positive definite and T = [a b; b d].
//
// Computed by congruence to an orthonormal frame of g (Cholesky), where the
// discriminant is a sum of squares.  The textbook quadratic formula loses
// half the digits at a double root (the discriminant is cancellation noise,
// its square root ~1e-8); here proportional tensors give a gap that is
// exactly the rounding of the frame change, so umbilic states come out clean.
inline std::pair<double, double> pencil_eigenvalues(double E, double F, double G,
                                                    double a, double b, double d) {
    const double f_over_e = F / E;
    const double s2 = G - F * f_over_e;  // det g / E
    const double p = std::sqrt(E);
    const double s = std::sqrt(s2);
    const double t11 = a / E;
    const double t12 = (b - a * f_over_e) / (p * s);
    const double t22 = ((a * f_over_e - 2.0 * b) * f_over_e + d) / s2;
    const double mean = 0.5 * (t11 + t22);
    const double gap = std::hypot(0.5 * (t11 - t22), t12);
    return {mean - gap, mean + gap};
}

}  // namespace mcflab
