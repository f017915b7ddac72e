#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mcflab/shapes.hpp"
#include "mcflab/tensorcalc.hpp"

using namespace mcflab;

namespace {

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

// Max over a middle latitude band, away from the poles where chart components
// are coordinate-singular.
double band_max(const DiscreteHypersurface& s, const std::vector<double>& f, int comps,
                const std::function<double(int, int, int)>& want) {
    double m = 0.0;
    for (int i = s.n_theta / 4; i < s.n_theta - s.n_theta / 4; ++i)
        for (int j = 0; j < s.n_phi; ++j)
            for (int k = 0; k < comps; ++k)
                m = std::max(m, std::abs(f[(static_cast<std::size_t>(i) * s.n_phi + j) * comps + k] -
                                         want(i, j, k)));
    return m;
}

}  // namespace

TEST_CASE("covariant derivative of the metric vanishes identically") {
    // Algebraic property of building Christoffels and derivatives from the
    // same difference operator; holds to rounding on any surface.
    const auto se = make_ellipse(2.0, 1.0, 64);
    const auto ge = compute_geometry(se);
    const auto gme = christoffel_symbols(se, ge);
    CHECK(max_abs(covariant_derivative_sym2(se, ge, gme, ge.g)) <= 1e-12);

    const auto sg = make_ellipsoid(2.0, 1.0, 1.0, 32, 64);
    const auto gg = compute_geometry(sg);
    const auto gmg = christoffel_symbols(sg, gg);
    CHECK(max_abs(covariant_derivative_sym2(sg, gg, gmg, gg.g)) <= 1e-10);
}

TEST_CASE("tensor laplacian of h vanishes on the round sphere") {
    // h = g / r exactly on the sphere graph, and nabla g = 0 discretely.
    const auto s = make_sphere(1.3, 32, 64);
    const auto g = compute_geometry(s);
    const auto gm = christoffel_symbols(s, g);
    CHECK(max_abs(tensor_laplacian_sym2(s, g, gm, g.h)) <= 1e-10);
}

TEST_CASE("hessian of the height function on the unit sphere") {
    // nabla d (cos theta) = -cos(theta) g on the unit sphere.
    auto err_at = [](int nt) {
        const auto s = make_sphere(1.0, nt, 2 * nt);
        const auto g = compute_geometry(s);
        const auto gm = christoffel_symbols(s, g);
        std::vector<double> z(g.count);
        const double dth = M_PI / (nt - 1);
        for (int i = 0; i < nt; ++i)
            for (int j = 0; j < 2 * nt; ++j) z[i * 2 * nt + j] = std::cos(i * dth);
        const auto hess = hessian(s, g, gm, z);
        return band_max(s, hess, 3, [&](int i, int, int k) {
            return -std::cos(i * dth) * g.g[3 * (static_cast<std::size_t>(i) * 2 * nt) + k];
        });
    };
    CHECK(err_at(48) <= 5e-3);
    CHECK(err_at(24) / err_at(48) >= 3.5);

    // Hessian of a constant is exactly zero.
    const auto s = make_sphere(1.0, 24, 48);
    const auto g = compute_geometry(s);
    const auto gm = christoffel_symbols(s, g);
    CHECK(max_abs(hessian(s, g, gm, std::vector<double>(g.count, 2.5))) == 0.0);
}

TEST_CASE("second-form gradient norm on round shapes is zero") {
    const auto sc = make_circle(1.7, 128);
    const auto gc = compute_geometry(sc);
    CHECK(max_abs(second_form_gradient_norm2(sc, gc)) <= 1e-12);

    const auto ss = make_sphere(0.8, 32, 64);
    const auto gs = compute_geometry(ss);
    CHECK(max_abs(second_form_gradient_norm2(ss, gs)) <= 1e-10);
}

TEST_CASE("second-form gradient norm matches the ellipse closed form") {
    // k(t) = ab / w^3, w^2 = a^2 sin^2 t + b^2 cos^2 t, and
    // dk/ds = -3ab(a^2-b^2) sin t cos t / w^6.
    const double a = 2.0, b = 1.0;
    auto err_at = [&](int n) {
        const auto s = make_ellipse(a, b, n);
        const auto g = compute_geometry(s);
        const auto got = second_form_gradient_norm2(s, g);
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            const double t = 2.0 * M_PI * i / n;
            const double w2 = a * a * std::sin(t) * std::sin(t) + b * b * std::cos(t) * std::cos(t);
            const double dkds = -3.0 * a * b * (a * a - b * b) * std::sin(t) * std::cos(t) /
                                (w2 * w2 * w2);
            e = std::max(e, std::abs(got[i] - dkds * dkds));
        }
        return e;
    };
    CHECK(err_at(256) <= 3.0e-2);  // well under 1% of the peak value of (dk/ds)^2
    CHECK(err_at(128) / err_at(256) >= 3.5);
}

TEST_CASE("rotation field on the sphere is killing") {
    // V = d/dphi: the symmetrised gradient and the divergence cancel
    // algebraically against the Christoffels from the same differences.
    const auto s = make_sphere(1.0, 32, 64);
    const auto g = compute_geometry(s);
    const auto gm = christoffel_symbols(s, g);
    std::vector<double> v(2 * g.count, 0.0);
    for (std::size_t q = 0; q < g.count; ++q) v[2 * q + 1] = 1.0;
    CHECK(max_abs(symmetric_gradient(s, g, gm, v)) <= 1e-12);
    CHECK(max_abs(divergence(s, g, gm, v)) <= 1e-12);
}

TEST_CASE("divergence of the meridian field approaches cot theta") {
    auto err_at = [](int nt) {
        const auto s = make_sphere(1.0, nt, 2 * nt);
        const auto g = compute_geometry(s);
        const auto gm = christoffel_symbols(s, g);
        std::vector<double> v(2 * g.count, 0.0);
        for (std::size_t q = 0; q < g.count; ++q) v[2 * q] = 1.0;
        const auto div = divergence(s, g, gm, v);
        const double dth = M_PI / (nt - 1);
        return band_max(s, div, 1,
                        [&](int i, int, int) { return std::cos(i * dth) / std::sin(i * dth); });
    };
    CHECK(err_at(48) <= 5e-3);
    CHECK(err_at(24) / err_at(48) >= 3.5);
}

TEST_CASE("generalized eigenvalues of h against the geometry eigenvalues") {
    const auto s = make_ellipsoid(2.0, 1.0, 1.0, 32, 64);
    const auto g = compute_geometry(s);
    const auto mu = generalized_eigenvalues_sym2(s, g, g.h);
    REQUIRE(mu.size() == g.lambda.size());
    // Interior rows only: pole rows store row-1 *means* of lambda, and taking
    // eigenvalues does not commute with averaging the tensors.
    for (int i = 1; i < s.n_theta - 1; ++i)
        for (int j = 0; j < s.n_phi; ++j)
            for (int k = 0; k < 2; ++k) {
                const std::size_t q = 2 * (static_cast<std::size_t>(i) * s.n_phi + j) + k;
                CHECK(mu[q] == doctest::Approx(g.lambda[q]).epsilon(1e-13));
            }

    // Eigenvalues of g relative to g are exactly one.
    const auto ones = generalized_eigenvalues_sym2(s, g, g.g);
    for (double x : ones) CHECK(x == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("tensor calculus rejects mis-sized input") {
    const auto s = make_sphere(1.0, 16, 32);
    const auto g = compute_geometry(s);
    const auto gm = christoffel_symbols(s, g);
    CHECK_THROWS_AS(covariant_derivative_sym2(s, g, gm, std::vector<double>(7)),
                    DimensionMismatch);
    CHECK_THROWS_AS(hessian(s, g, std::vector<double>(3), std::vector<double>(g.count)),
                    DimensionMismatch);
    CHECK_THROWS_AS(divergence(s, g, gm, std::vector<double>(3)), DimensionMismatch);
}
