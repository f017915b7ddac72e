#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "mcflab/diagnostics.hpp"
#include "mcflab/geometry.hpp"
#include "mcflab/shapes.hpp"

using namespace mcflab;

namespace {

// Uniform dilation of a radial graph: same grid, radii scaled.
DiscreteHypersurface scaled(DiscreteHypersurface s, double rho) {
    for (double& r : s.radial) r *= rho;
    return s;
}

// Synthetic pointwise state for exercising the explicit-constant overloads.
GeometryField constant_state(int n, std::size_t count, std::vector<double> lambda_per_vertex) {
    GeometryField g;
    g.n = n;
    g.count = count;
    for (std::size_t v = 0; v < count; ++v) {
        double H = 0.0;
        for (double l : lambda_per_vertex) {
            g.lambda.push_back(l);
            H += l;
        }
        g.H.push_back(H);
    }
    return g;
}

}  // namespace

TEST_CASE("round sphere reports the textbook pinching state") {
    const auto s = make_sphere(1.0, 32, 64);
    const auto geom = compute_geometry(s);
    // lambda = 1 and H = 2 hold to rounding on the discrete sphere, so the
    // derived scalars are essentially exact.
    CHECK(epsilon_sharp(geom, s.model) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(convexity_margin(geom, s.model) == doctest::Approx(4.0).epsilon(1e-12));
    for (double d : {0.1, 0.25, 0.5}) CHECK(pinching_psi(geom, d).sup <= 1e-16);
    CHECK(gradient_ratio(geom) <= 1e-16);

    const auto row =
        diagnostics_row(0.0, 0.0, s, geom, s.model, {0.1, 0.25, 0.5}, 0.5);
    CHECK(row.collapse_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(row.eigen_ratio == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(row.lambda_min == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(row.lambda_max == doctest::Approx(1.0).epsilon(1e-12));
    // Flat model: the volume condition degenerates to 0 <= 1 and the radius
    // condition compares a finite scale against an infinite radius.
    CHECK(row.sobolev_1);
    CHECK(row.sobolev_2);
}

TEST_CASE("curves collapse the sharp epsilon to one") {
    const auto s = make_circle(1.0, 256);
    const auto geom = compute_geometry(s);
    // (k^2 * k - 0) / k^3 = 1 at every vertex regardless of k, so the
    // discretization error cancels entirely.
    CHECK(epsilon_sharp(geom, s.model) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(convexity_margin(geom, s.model) == doctest::Approx(1.0).epsilon(2e-3));

    const auto psi = pinching_psi(geom, 0.25);
    CHECK(psi.sup == 0.0);
    for (double x : psi.values) CHECK(x == 0.0);

    const auto rm = ricci_myers(s, geom);
    CHECK(rm.diameter == doctest::Approx(0.5 * total_volume(s, geom)).epsilon(1e-15));
    CHECK(rm.myers_bound == std::numeric_limits<double>::infinity());
    CHECK(rm.ok);
    CHECK(rm.ricci_lb == 0.0);
}

TEST_CASE("explicit-constant overloads hit the threshold boundary") {
    // Unit circle against a synthetic correction constant L = 1/2: the
    // convexity margin 1 - 2*1*L lands exactly on the boundary.
    const auto unit = constant_state(1, 4, {1.0});
    CHECK(convexity_margin(unit, 0.5) == 0.0);
    CHECK(epsilon_sharp(unit, 0.5) == 0.5);
    CHECK(epsilon_sharp(unit, 0.0) == 1.0);

    // The reported epsilon is clamped to <= 1 but negative values pass
    // through untouched.
    auto inflated = constant_state(2, 1, {2.0, 3.0});
    inflated.H[0] = 1.0;  // deliberately inconsistent with lambda
    CHECK(epsilon_sharp(inflated, 0.0) == 1.0);
    CHECK(epsilon_sharp(constant_state(1, 1, {1.0}), 2.0) == -1.0);
}

TEST_CASE("pinching density scales like rho^(-delta) under dilation") {
    const auto s = make_ellipsoid(1.7, 1.0, 0.8, 32, 64);
    const auto base = compute_geometry(s);
    for (double rho : {2.0, 0.5}) {
        const auto big = scaled(s, rho);
        const auto gb = compute_geometry(big);
        for (double delta : {0.1, 0.5}) {
            // The difference stencils commute with dilation exactly, so the
            // scaling law holds to rounding, not just to truncation order.
            const double want = std::pow(rho, -delta) * pinching_psi(base, delta).sup;
            CHECK(pinching_psi(gb, delta).sup == doctest::Approx(want).epsilon(1e-10));
        }
    }
}

TEST_CASE("pointwise pinching inequality holds with the sharp epsilon") {
    {
        const auto s = make_ellipsoid(1.7, 1.0, 0.8, 32, 64);
        const auto geom = compute_geometry(s);
        const double eps = epsilon_sharp(geom, s.model);
        CHECK(eps > 0.0);
        CHECK(pinching_inequality_margin(geom, eps) >= -1e-9);
    }
    {
        const auto s = make_sphere(1.0, 32, 64);
        const auto geom = compute_geometry(s);
        CHECK(pinching_inequality_margin(geom, epsilon_sharp(geom, s.model)) >= -1e-12);
    }
    {
        // n = 1: both sides vanish identically.
        const auto s = make_circle(1.0, 128);
        const auto geom = compute_geometry(s);
        CHECK(std::abs(pinching_inequality_margin(geom, 1.0)) <= 1e-15);
    }
}

TEST_CASE("sobolev conditions reproduce the homogeneous-base example") {
    // Geodesic circle on the curvature-3 base with length 0.1: the volume
    // condition evaluates to 3 * 0.1^2 = 0.03 and both conditions hold.
    const double R = 1.0 / std::sqrt(3.0);
    const double rho = R * std::asin(0.1 / (2.0 * M_PI * R));
    const auto s = make_geodesic_circle(rho, 512, 1.0);
    const auto geom = compute_geometry(s);
    CHECK(total_volume(s, geom) == doctest::Approx(0.1).epsilon(1e-4));

    const auto sc = sobolev_conditions(s, geom, s.model, 0.5);
    CHECK(sc.value1 == doctest::Approx(0.03).epsilon(1e-3));
    CHECK(sc.value2 == doctest::Approx(std::asin(std::sqrt(3.0) * 0.1) / std::sqrt(3.0))
                           .epsilon(1e-3));
    CHECK(sc.cond1);
    CHECK(sc.cond2);

    CHECK_THROWS_AS(sobolev_conditions(s, geom, s.model, 1.5), ValidationError);
}

TEST_CASE("sobolev radius condition rejects an over-large volume") {
    // Length 0.7 pushes b*q = sqrt(3)*0.7 past 1: the arcsin is undefined,
    // and the row assembly records both flags as failed instead of throwing.
    const double R = 1.0 / std::sqrt(3.0);
    const double rho = R * std::asin(0.7 / (2.0 * M_PI * R));
    const auto s = make_geodesic_circle(rho, 512, 1.0);
    const auto geom = compute_geometry(s);
    CHECK_THROWS_AS(sobolev_conditions(s, geom, s.model, 0.5), ArcsinDomain);

    const auto row = diagnostics_row(0.0, 0.0, s, geom, s.model, {0.1}, 0.5);
    CHECK(!row.sobolev_1);
    CHECK(!row.sobolev_2);
}

TEST_CASE("myers bound and the sphere diameter agree") {
    {
        const auto s = make_sphere(1.0, 64, 128);
        const auto geom = compute_geometry(s);
        const auto rm = ricci_myers(s, geom);
        // The pole-to-pole meridian path is a straight chain of exact dtheta
        // edges, so the discrete diameter equals pi to rounding.
        CHECK(rm.diameter == doctest::Approx(M_PI).epsilon(1e-12));
        CHECK(rm.myers_bound == doctest::Approx(M_PI).epsilon(1e-12));
        CHECK(rm.ricci_lb == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(rm.ok);
    }
    {
        const auto s = make_sphere(0.5, 32, 64);
        const auto geom = compute_geometry(s);
        const auto rm = ricci_myers(s, geom);
        CHECK(rm.diameter == doctest::Approx(0.5 * M_PI).epsilon(1e-12));
        CHECK(rm.myers_bound == doctest::Approx(0.5 * M_PI).epsilon(1e-12));
        CHECK(rm.ok);
    }
}

TEST_CASE("seeded diameter sweep matches the all-pairs oracle") {
    const auto s = make_ellipsoid(1.7, 1.0, 0.8, 24, 48);
    const auto geom = compute_geometry(s);
    const double sweep = ricci_myers(s, geom).diameter;
    const double oracle = intrinsic_diameter_all_pairs(s, geom);
    CHECK(sweep == doctest::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("convex ellipsoid sits strictly inside its myers bound") {
    const auto s = make_ellipsoid(1.7, 1.0, 0.8, 32, 64);
    const auto geom = compute_geometry(s);
    const auto rm = ricci_myers(s, geom);
    CHECK(rm.ok);
    CHECK(rm.diameter < rm.myers_bound);
    double lam1 = 1e300;
    for (std::size_t v = 0; v < geom.count; ++v) lam1 = std::min(lam1, geom.lambda_at(v, 0));
    CHECK(rm.ricci_lb == doctest::Approx(lam1 * lam1).epsilon(1e-14));
    CHECK(rm.myers_bound == doctest::Approx(M_PI / lam1).epsilon(1e-14));
}

TEST_CASE("diagnostics row assembles every column consistently") {
    const auto s = make_ellipsoid(1.7, 1.0, 0.8, 32, 64);
    const auto geom = compute_geometry(s);
    const std::vector<double> deltas{0.1, 0.25, 0.5};
    const auto row = diagnostics_row(0.125, 1e-4, s, geom, s.model, deltas, 0.5);

    CHECK(row.t == 0.125);
    CHECK(row.dt == 1e-4);
    CHECK(row.H_min > 0.0);
    CHECK(row.H_max > row.H_min);
    CHECK(row.collapse_ratio == row.H_max / row.H_min);
    double lmin = 1e300, lmax = -1e300;
    for (double l : geom.lambda) {
        lmin = std::min(lmin, l);
        lmax = std::max(lmax, l);
    }
    CHECK(row.lambda_min == lmin);
    CHECK(row.lambda_max == lmax);
    CHECK(row.eigen_ratio >= 1.0);
    CHECK(row.epsilon_sharp == epsilon_sharp(geom, s.model));
    CHECK(row.convexity_margin == convexity_margin(geom, s.model));
    REQUIRE(row.psi_sup.size() == deltas.size());
    for (std::size_t k = 0; k < deltas.size(); ++k) {
        CHECK(row.psi_sup[k] == pinching_psi(geom, deltas[k]).sup);
        CHECK(row.psi_sup[k] > 0.0);
    }
    CHECK(row.vol == total_volume(s, geom));
    CHECK(row.grad_ratio == gradient_ratio(geom));
    CHECK(row.sobolev_1);
    CHECK(row.sobolev_2);
    const auto rm = ricci_myers(s, geom);
    CHECK(row.ricci_bound == rm.ricci_lb);
    CHECK(row.intrinsic_diameter == rm.diameter);
    CHECK(row.myers_bound == rm.myers_bound);
}

TEST_CASE("vanishing mean curvature is rejected") {
    auto geom = constant_state(1, 3, {1.0});
    geom.H[1] = 0.0;
    CHECK_THROWS_AS(pinching_psi(geom, 0.25), ZeroMeanCurvature);
    CHECK_THROWS_AS(epsilon_sharp(geom, 0.0), ZeroMeanCurvature);
}
