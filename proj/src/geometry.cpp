#include "mcflab/geometry.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <tuple>

#include "mcflab/gridutil.hpp"
#include "mcflab/parallel.hpp"
#include "mcflab/sym2eig.hpp"

namespace mcflab {

const GraphGrid& GraphGrid::get(int nt, int np) {
    static std::map<std::pair<int, int>, GraphGrid> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({nt, np});
    if (it != cache.end()) return it->second;
    GraphGrid g;
    g.nt = nt;
    g.np = np;
    g.dth = M_PI / (nt - 1);
    g.dph = 2.0 * M_PI / np;
    g.theta.resize(nt);
    g.sin_t.resize(nt);
    g.cos_t.resize(nt);
    for (int i = 0; i < nt; ++i) {
        g.theta[i] = i * g.dth;
        g.sin_t[i] = std::sin(g.theta[i]);
        g.cos_t[i] = std::cos(g.theta[i]);
    }
    g.sin_p.resize(np);
    g.cos_p.resize(np);
    for (int j = 0; j < np; ++j) {
        g.sin_p[j] = std::sin(j * g.dph);
        g.cos_p[j] = std::cos(j * g.dph);
    }
    return cache.emplace(std::make_pair(nt, np), std::move(g)).first->second;
}

namespace {

constexpr int kMinCurveVertices = 16;
constexpr int kMinTheta = 16;
constexpr int kMinPhi = 32;

template <class Vec>
bool segments_intersect(const Vec& p1, const Vec& p2, const Vec& q1, const Vec& q2) {
    auto cross = [](const Vec& a, const Vec& b) { return a.x() * b.y() - a.y() * b.x(); };
    const double d1 = cross(q2 - q1, p1 - q1);
    const double d2 = cross(q2 - q1, p2 - q1);
    const double d3 = cross(p2 - p1, q1 - p1);
    const double d4 = cross(p2 - p1, q2 - p1);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

void validate_curve_flat(const DiscreteHypersurface& s) {
    const auto& p = s.pts2;
    const int n = static_cast<int>(p.size());
    if (n < kMinCurveVertices)
        throw DegenerateGeometry("curve needs at least 16 vertices");
    double signed_area = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& cur = p[i];
        const auto& nxt = p[(i + 1) % n];
        if ((nxt - cur).norm() == 0.0)
            throw DegenerateGeometry("duplicate adjacent curve vertices");
        signed_area += cur.x() * nxt.y() - nxt.x() * cur.y();
    }
    if (signed_area <= 0.0)
        throw DegenerateGeometry("curve vertices must run counterclockwise");
    // Simplicity at input resolution: non-adjacent segments must not cross.
    for (int i = 0; i < n; ++i) {
        for (int j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;
            if (segments_intersect(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n]))
                throw DegenerateGeometry("curve is self-intersecting");
        }
    }
}

void validate_curve_sphere(const DiscreteHypersurface& s) {
    const auto& p = s.pts3;
    const int n = static_cast<int>(p.size());
    if (n < kMinCurveVertices)
        throw DegenerateGeometry("curve needs at least 16 vertices");
    const double rs = s.base_radius();
    for (int i = 0; i < n; ++i) {
        if ((p[(i + 1) % n] - p[i]).norm() == 0.0)
            throw DegenerateGeometry("duplicate adjacent curve vertices");
        if (std::abs(p[i].norm() - rs) > 1e-9 * rs)
            throw DegenerateGeometry("sphere-base curve vertex off the base sphere");
    }
}

void validate_graph(const DiscreteHypersurface& s) {
    if (s.n_theta < kMinTheta || s.n_phi < kMinPhi)
        throw DegenerateGeometry("radial graph needs at least a 16 x 32 grid");
    if (s.radial.size() != static_cast<std::size_t>(s.n_theta) * s.n_phi)
        throw DimensionMismatch("radial array does not match grid resolution");
    for (double r : s.radial)
        if (!(r > 0.0)) throw DegenerateGeometry("non-positive radial value");
}

// ---------------------------------------------------------------------------
// Curves.  Chart parameter u advances one unit per vertex; all derivatives are
// symmetric three-point stencils in u and metric factors convert to arclength.
// Curvature comes from the circumscribed circle of each vertex triple (the
// plane circle for flat curves, the small-circle geodesic curvature for
// sphere-base curves), which is second-order accurate on smooth curves and
// exact on round data at any resolution -- the property the evolution-equation
// residual ceilings rest on.

struct CurveDiff {
    Eigen::Vector3d e1, e2;  // edges into and out of the vertex
    Eigen::Vector3d d1, d2;
    double speed;
};

template <class PointAt>
CurveDiff curve_diff(const PointAt& at, int i, int n) {
    CurveDiff d;
    const Eigen::Vector3d prev = at((i + n - 1) % n);
    const Eigen::Vector3d next = at((i + 1) % n);
    const Eigen::Vector3d cur = at(i);
    d.e1 = cur - prev;
    d.e2 = next - cur;
    d.d1 = 0.5 * (next - prev);
    d.d2 = next - 2.0 * cur + prev;
    d.speed = d.d1.norm();
    return d;
}

GeometryField geometry_curve(const DiscreteHypersurface& s) {
    const int n = static_cast<int>(s.vertex_count());
    const bool flat = s.kind == SurfaceKind::CurveFlat;
    auto at = [&](int i) -> Eigen::Vector3d {
        if (flat) return {s.pts2[i].x(), s.pts2[i].y(), 0.0};
        return s.pts3[i];
    };

    GeometryField f;
    f.n = 1;
    f.count = n;
    f.g.resize(n);
    f.h.resize(n);
    f.lambda.resize(n);
    f.H.resize(n);
    f.A2.resize(n);
    f.area.resize(n);
    f.normal.resize(n);
    f.gradH.resize(n);
    f.gradH_norm.resize(n);
    f.lapH.resize(n);

    const double rs = flat ? 0.0 : s.base_radius();
    std::atomic<bool> degenerate{false};
    parallel_for(n, [&](std::size_t iv) {
        const int i = static_cast<int>(iv);
        const CurveDiff d = curve_diff(at, i, n);
        const double l1 = d.e1.norm(), l2 = d.e2.norm();
        if (!(d.speed > 0.0) || !(l1 > 0.0) || !(l2 > 0.0)) {
            degenerate.store(true);
            return;
        }
        const Eigen::Vector3d tang = d.d1 / d.speed;
        double k;
        Eigen::Vector3d xi;
        if (flat) {
            // Inward normal of a counterclockwise curve.  Curvature of the
            // circle through the vertex triple: 2 cross / (l1 l2 |e1 + e2|),
            // signed by the turn direction.
            xi = {-tang.y(), tang.x(), 0.0};
            const double cross = d.e1.x() * d.e2.y() - d.e1.y() * d.e2.x();
            k = cross / (l1 * l2 * d.speed);
        } else {
            // Geodesic curvature of the small circle through the triple:
            // k^2 = 1/R_c^2 - 1/rs^2 with R_c the 3d circumradius, signed by
            // the bend toward xi.  Exact on latitude rings of the base sphere.
            const Eigen::Vector3d nu = at(i) / rs;  // outward base-sphere normal
            xi = nu.cross(tang);
            const double inv_rc = d.e1.cross(d.e2).norm() / (l1 * l2 * d.speed);
            const double k2 = inv_rc * inv_rc - 1.0 / (rs * rs);
            k = std::copysign(std::sqrt(std::max(k2, 0.0)), d.d2.dot(xi));
        }
        f.g[i] = d.speed * d.speed;
        f.h[i] = k * f.g[i];
        f.lambda[i] = k;
        f.H[i] = k;
        f.A2[i] = k * k;
        f.area[i] = d.speed;
        f.normal[i] = xi;
    });
    if (degenerate.load())
        throw DegenerateGeometry("vanishing tangent on curve");

    parallel_for(n, [&](std::size_t iv) {
        const int i = static_cast<int>(iv);
        const int ip = (i + 1) % n, im = (i + n - 1) % n;
        const double dHdu = 0.5 * (f.H[ip] - f.H[im]);
        f.gradH[i] = dHdu / f.g[i];
        f.gradH_norm[i] = std::abs(dHdu) / f.area[i];
        const double wp = 0.5 * (f.area[i] + f.area[ip]);
        const double wm = 0.5 * (f.area[i] + f.area[im]);
        f.lapH[i] = ((f.H[ip] - f.H[i]) / wp - (f.H[i] - f.H[im]) / wm) / f.area[i];
    });
    return f;
}

// ---------------------------------------------------------------------------
// Radial graphs.  x(theta, phi) = center + r * u with u the unit sphere chart;
// all second-order stencils in chart coordinates, poles handled by row
// replacement afterwards.

struct GraphPointGeom {
    double E, F, G, area;
    double h11, h12, h22;
    double lam1, lam2, H, A2;
    Eigen::Vector3d normal;
    bool ok;
};

GraphPointGeom graph_point(const DiscreteHypersurface& s, const GraphGrid& gg,
                           int i, int j) {
    const int np = s.n_phi;
    const auto& r = s.radial;
    auto R = [&](int ii, int jj) { return r[ii * np + wrap(jj, np)]; };

    const double dth = gg.dth, dph = gg.dph;
    const double rc = R(i, j);
    const double r_t = (R(i + 1, j) - R(i - 1, j)) / (2 * dth);
    const double r_p = (R(i, j + 1) - R(i, j - 1)) / (2 * dph);
    const double r_tt = (R(i + 1, j) - 2 * rc + R(i - 1, j)) / (dth * dth);
    const double r_pp = (R(i, j + 1) - 2 * rc + R(i, j - 1)) / (dph * dph);
    const double r_tp = (R(i + 1, j + 1) - R(i + 1, j - 1) - R(i - 1, j + 1) +
                         R(i - 1, j - 1)) /
                        (4 * dth * dph);

    const double st = gg.sin_t[i], ct = gg.cos_t[i];
    const double sp = gg.sin_p[j], cp = gg.cos_p[j];
    const Eigen::Vector3d u{st * cp, st * sp, ct};
    const Eigen::Vector3d u_t{ct * cp, ct * sp, -st};
    const Eigen::Vector3d u_p{-st * sp, st * cp, 0.0};
    // u_tt = -u, u_tp = (ct/st) u_p, u_pp = -st^2 u - st*ct u_t.

    const Eigen::Vector3d x_t = r_t * u + rc * u_t;
    const Eigen::Vector3d x_p = r_p * u + rc * u_p;
    const Eigen::Vector3d x_tt = r_tt * u + 2 * r_t * u_t - rc * u;
    const Eigen::Vector3d x_tp = r_tp * u + r_t * u_p + r_p * u_t + rc * (ct / st) * u_p;
    const Eigen::Vector3d x_pp =
        r_pp * u + 2 * r_p * u_p - rc * (st * st * u + st * ct * u_t);

    GraphPointGeom o;
    o.E = x_t.squaredNorm();
    o.F = x_t.dot(x_p);
    o.G = x_p.squaredNorm();
    const double detg = o.E * o.G - o.F * o.F;
    o.ok = detg > 0.0;
    if (!o.ok) return o;
    o.area = std::sqrt(detg);

    o.normal = -x_t.cross(x_p).normalized();  // inward for a star-shaped graph
    o.h11 = x_tt.dot(o.normal);
    o.h12 = x_tp.dot(o.normal);
    o.h22 = x_pp.dot(o.normal);

    const double B = o.E * o.h22 + o.G * o.h11 - 2 * o.F * o.h12;
    std::tie(o.lam1, o.lam2) = pencil_eigenvalues(o.E, o.F, o.G, o.h11, o.h12, o.h22);
    o.H = B / detg;
    o.A2 = o.lam1 * o.lam1 + o.lam2 * o.lam2;
    return o;
}

// Overwrite both pole rows of per-vertex arrays with the mean of the adjacent
// latitude row.
template <class Row>
void replace_pole_rows(int nt, int np, const Row& apply) {
    apply(0, 1);
    apply(nt - 1, nt - 2);
}

void pole_mean_scalar(std::vector<double>& v, int nt, int np) {
    replace_pole_rows(nt, np, [&](int pole, int adj) {
        double m = 0.0;
        for (int j = 0; j < np; ++j) m += v[adj * np + j];
        m /= np;
        for (int j = 0; j < np; ++j) v[pole * np + j] = m;
    });
}

GeometryField geometry_graph(const DiscreteHypersurface& s) {
    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    const std::size_t count = static_cast<std::size_t>(nt) * np;

    GeometryField f;
    f.n = 2;
    f.count = count;
    f.g.resize(3 * count);
    f.h.resize(3 * count);
    f.lambda.resize(2 * count);
    f.H.resize(count);
    f.A2.resize(count);
    f.area.resize(count);
    f.normal.resize(count);
    f.gradH.resize(2 * count);
    f.gradH_norm.resize(count);
    f.lapH.resize(count);

    std::atomic<bool> degenerate{false};
    parallel_for(count, [&](std::size_t v) {
        const int i = static_cast<int>(v) / np;
        if (i == 0 || i == nt - 1) return;
        const int j = static_cast<int>(v) % np;
        const GraphPointGeom p = graph_point(s, gg, i, j);
        if (!p.ok) {
            degenerate.store(true);
            return;
        }
        f.g[3 * v] = p.E;
        f.g[3 * v + 1] = p.F;
        f.g[3 * v + 2] = p.G;
        f.h[3 * v] = p.h11;
        f.h[3 * v + 1] = p.h12;
        f.h[3 * v + 2] = p.h22;
        f.lambda[2 * v] = p.lam1;
        f.lambda[2 * v + 1] = p.lam2;
        f.H[v] = p.H;
        f.A2[v] = p.A2;
        f.area[v] = p.area;
        f.normal[v] = p.normal;
    });
    if (degenerate.load())
        throw DegenerateGeometry("degenerate induced metric on radial graph");

    // Pole rows: mean of the adjacent latitude row for every field.
    for (int c = 0; c < 3; ++c) {
        replace_pole_rows(nt, np, [&](int pole, int adj) {
            double m = 0.0;
            for (int j = 0; j < np; ++j) m += f.g[3 * (adj * np + j) + c];
            m /= np;
            for (int j = 0; j < np; ++j) f.g[3 * (pole * np + j) + c] = m;
        });
        replace_pole_rows(nt, np, [&](int pole, int adj) {
            double m = 0.0;
            for (int j = 0; j < np; ++j) m += f.h[3 * (adj * np + j) + c];
            m /= np;
            for (int j = 0; j < np; ++j) f.h[3 * (pole * np + j) + c] = m;
        });
    }
    for (int c = 0; c < 2; ++c) {
        replace_pole_rows(nt, np, [&](int pole, int adj) {
            double m = 0.0;
            for (int j = 0; j < np; ++j) m += f.lambda[2 * (adj * np + j) + c];
            m /= np;
            for (int j = 0; j < np; ++j) f.lambda[2 * (pole * np + j) + c] = m;
        });
    }
    pole_mean_scalar(f.H, nt, np);
    pole_mean_scalar(f.A2, nt, np);
    pole_mean_scalar(f.area, nt, np);
    replace_pole_rows(nt, np, [&](int pole, int adj) {
        Eigen::Vector3d m{0, 0, 0};
        for (int j = 0; j < np; ++j) m += f.normal[adj * np + j];
        m.normalize();
        for (int j = 0; j < np; ++j) f.normal[pole * np + j] = m;
    });

    // Intrinsic derivatives of ||H|| over the completed field.
    parallel_for(count, [&](std::size_t v) {
        const int i = static_cast<int>(v) / np;
        if (i == 0 || i == nt - 1) return;
        const int j = static_cast<int>(v) % np;
        auto F_ = [&](int ii, int jj) { return f.H[ii * np + wrap(jj, np)]; };
        const double f_t = (F_(i + 1, j) - F_(i - 1, j)) / (2 * gg.dth);
        const double f_p = (F_(i, j + 1) - F_(i, j - 1)) / (2 * gg.dph);
        const double E = f.g[3 * v], Fm = f.g[3 * v + 1], G = f.g[3 * v + 2];
        const double detg = E * G - Fm * Fm;
        f.gradH[2 * v] = (G * f_t - Fm * f_p) / detg;
        f.gradH[2 * v + 1] = (E * f_p - Fm * f_t) / detg;
        f.gradH_norm[v] =
            std::sqrt(std::max(f.gradH[2 * v] * f_t + f.gradH[2 * v + 1] * f_p, 0.0));
    });
    for (int c = 0; c < 2; ++c) {
        replace_pole_rows(nt, np, [&](int pole, int adj) {
            double m = 0.0;
            for (int j = 0; j < np; ++j) m += f.gradH[2 * (adj * np + j) + c];
            m /= np;
            for (int j = 0; j < np; ++j) f.gradH[2 * (pole * np + j) + c] = m;
        });
    }
    pole_mean_scalar(f.gradH_norm, nt, np);

    f.lapH = laplace_beltrami(s, f, f.H);
    return f;
}

}  // namespace

void validate_surface(const DiscreteHypersurface& s) {
    switch (s.kind) {
        case SurfaceKind::CurveFlat: validate_curve_flat(s); break;
        case SurfaceKind::CurveSphereBase: validate_curve_sphere(s); break;
        case SurfaceKind::RadialGraph: validate_graph(s); break;
    }
    if (!s.material.empty() && s.material.size() != s.vertex_count())
        throw DimensionMismatch("material id array does not match vertex count");
}

GeometryField compute_geometry(const DiscreteHypersurface& s) {
    if (s.is_curve()) return geometry_curve(s);
    return geometry_graph(s);
}

std::vector<double> laplace_beltrami(const DiscreteHypersurface& s,
                                     const GeometryField& geom,
                                     const std::vector<double>& f) {
    if (f.size() != geom.count)
        throw DimensionMismatch("field size does not match surface");

    if (s.is_curve()) {
        const int n = static_cast<int>(geom.count);
        std::vector<double> out(n);
        parallel_for(n, [&](std::size_t iv) {
            const int i = static_cast<int>(iv);
            const int ip = (i + 1) % n, im = (i + n - 1) % n;
            const double wp = 0.5 * (geom.area[i] + geom.area[ip]);
            const double wm = 0.5 * (geom.area[i] + geom.area[im]);
            out[i] = ((f[ip] - f[i]) / wp - (f[i] - f[im]) / wm) / geom.area[i];
        });
        return out;
    }

    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    const double dth = gg.dth, dph = gg.dph;
    const std::size_t count = geom.count;

    // Metric flux coefficients a = sqrt(g) g^tt, b = sqrt(g) g^tp, c = sqrt(g) g^pp.
    std::vector<double> ca(count), cb(count), cc(count);
    parallel_for(count, [&](std::size_t v) {
        const double E = geom.g[3 * v], F = geom.g[3 * v + 1], G = geom.g[3 * v + 2];
        const double sq = std::sqrt(std::max(E * G - F * F, 1e-300));
        ca[v] = G / sq;
        cb[v] = -F / sq;
        cc[v] = E / sq;
    });
    // At the poles the phi circles degenerate: G and F vanish, so the true
    // limits of these coefficients are zero.  The stored metric rows hold
    // copies of the adjacent row, so force the limit explicitly; otherwise the
    // staggered fluxes next to the poles come out a factor two too large.
    for (int j = 0; j < np; ++j) {
        ca[j] = cb[j] = 0.0;
        const std::size_t v = static_cast<std::size_t>(nt - 1) * np + j;
        ca[v] = cb[v] = 0.0;
    }

    auto fld = [&](int i, int j) { return f[i * np + wrap(j, np)]; };
    auto fphi = [&](int i, int j) {
        return (fld(i, j + 1) - fld(i, j - 1)) / (2 * dph);
    };
    // Central theta difference; valid for interior rows only.
    auto fth = [&](int i, int j) {
        return (fld(i + 1, j) - fld(i - 1, j)) / (2 * dth);
    };

    // Theta fluxes U[i][j] live at (i + 1/2, j) for i = 0..nt-2.
    std::vector<double> U(static_cast<std::size_t>(nt - 1) * np);
    parallel_for(U.size(), [&](std::size_t q) {
        const int i = static_cast<int>(q) / np;
        const int j = static_cast<int>(q) % np;
        const std::size_t v0 = static_cast<std::size_t>(i) * np + j;
        const std::size_t v1 = v0 + np;
        const double abar = 0.5 * (ca[v0] + ca[v1]);
        const double bbar = 0.5 * (cb[v0] + cb[v1]);
        const double dfdt = (fld(i + 1, j) - fld(i, j)) / dth;
        const double dfdp = 0.5 * (fphi(i, j) + fphi(i + 1, j));
        U[q] = abar * dfdt + bbar * dfdp;
    });

    std::vector<double> out(count, 0.0);
    parallel_for(count, [&](std::size_t v) {
        const int i = static_cast<int>(v) / np;
        if (i == 0 || i == nt - 1) return;
        const int j = static_cast<int>(v) % np;
        const int jp = wrap(j + 1, np), jm = wrap(j - 1, np);
        const std::size_t vp = static_cast<std::size_t>(i) * np + jp;
        const std::size_t vm = static_cast<std::size_t>(i) * np + jm;
        // Phi fluxes at (i, j +- 1/2).
        const double Wp = 0.5 * (cc[v] + cc[vp]) * (fld(i, j + 1) - fld(i, j)) / dph +
                          0.5 * (cb[v] + cb[vp]) * 0.5 * (fth(i, j) + fth(i, j + 1));
        const double Wm = 0.5 * (cc[vm] + cc[v]) * (fld(i, j) - fld(i, j - 1)) / dph +
                          0.5 * (cb[vm] + cb[v]) * 0.5 * (fth(i, j - 1) + fth(i, j));
        const double Uu = U[static_cast<std::size_t>(i) * np + j];
        const double Ud = U[static_cast<std::size_t>(i - 1) * np + j];
        out[v] = ((Uu - Ud) / dth + (Wp - Wm) / dph) / geom.area[v];
    });

    // Finite-volume closure of the polar caps.  The denominator is the cap
    // mass used by quadrature_weights (1/8 factor, see there), which keeps the
    // operator exactly conservative against those weights and makes the cap
    // value consistent with the continuum limit.
    {
        double flux = 0.0, mass = 0.0;
        for (int j = 0; j < np; ++j) {
            flux += U[j];
            mass += geom.area[j];
        }
        const double val = flux / (0.125 * dth * mass);
        for (int j = 0; j < np; ++j) out[j] = val;
    }
    {
        double flux = 0.0, mass = 0.0;
        for (int j = 0; j < np; ++j) {
            flux += U[static_cast<std::size_t>(nt - 2) * np + j];
            mass += geom.area[static_cast<std::size_t>(nt - 1) * np + j];
        }
        const double val = -flux / (0.125 * dth * mass);
        for (int j = 0; j < np; ++j) out[static_cast<std::size_t>(nt - 1) * np + j] = val;
    }
    return out;
}

GradientField intrinsic_gradient(const DiscreteHypersurface& s,
                                 const GeometryField& geom,
                                 const std::vector<double>& f) {
    if (f.size() != geom.count)
        throw DimensionMismatch("field size does not match surface");
    GradientField out;
    out.comps.resize(geom.count * geom.n);
    out.norm.resize(geom.count);

    if (s.is_curve()) {
        const int n = static_cast<int>(geom.count);
        parallel_for(n, [&](std::size_t iv) {
            const int i = static_cast<int>(iv);
            const double d = 0.5 * (f[(i + 1) % n] - f[(i + n - 1) % n]);
            out.comps[i] = d / geom.g[i];
            out.norm[i] = std::abs(d) / geom.area[i];
        });
        return out;
    }

    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    auto fld = [&](int i, int j) { return f[i * np + wrap(j, np)]; };
    parallel_for(geom.count, [&](std::size_t v) {
        const int i = static_cast<int>(v) / np;
        if (i == 0 || i == nt - 1) return;
        const int j = static_cast<int>(v) % np;
        const double f_t = (fld(i + 1, j) - fld(i - 1, j)) / (2 * gg.dth);
        const double f_p = (fld(i, j + 1) - fld(i, j - 1)) / (2 * gg.dph);
        const double E = geom.g[3 * v], F = geom.g[3 * v + 1], G = geom.g[3 * v + 2];
        const double detg = E * G - F * F;
        out.comps[2 * v] = (G * f_t - F * f_p) / detg;
        out.comps[2 * v + 1] = (E * f_p - F * f_t) / detg;
        out.norm[v] =
            std::sqrt(std::max(out.comps[2 * v] * f_t + out.comps[2 * v + 1] * f_p, 0.0));
    });
    for (int c = 0; c < 2; ++c) {
        replace_pole_rows(nt, np, [&](int pole, int adj) {
            double m = 0.0;
            for (int j = 0; j < np; ++j) m += out.comps[2 * (adj * np + j) + c];
            m /= np;
            for (int j = 0; j < np; ++j) out.comps[2 * (pole * np + j) + c] = m;
        });
    }
    pole_mean_scalar(out.norm, nt, np);
    return out;
}

std::vector<double> quadrature_weights(const DiscreteHypersurface& s) {
    if (s.is_curve()) return std::vector<double>(s.vertex_count(), 1.0);
    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    std::vector<double> w(static_cast<std::size_t>(nt) * np, gg.dth * gg.dph);
    // Pole rows carry the adjacent row's area element (the true one degenerates
    // to zero).  Near a pole sqrt(det g) grows linearly with colatitude, so the
    // half cell reaching the pole has mass  int_0^{dth/2} (area/dth) t dt
    // = (dth/8) * area, hence the 1/8 factor against the stored value.
    for (int j = 0; j < np; ++j) {
        w[j] *= 0.125;
        w[static_cast<std::size_t>(nt - 1) * np + j] *= 0.125;
    }
    return w;
}

double total_volume(const DiscreteHypersurface& s, const GeometryField& geom) {
    const std::vector<double> w = quadrature_weights(s);
    double v = 0.0;
    for (std::size_t i = 0; i < geom.count; ++i) v += w[i] * geom.area[i];
    if (!(v > 0.0)) throw DegenerateGeometry("non-positive total volume");
    return v;
}

double integrate(const DiscreteHypersurface& s, const GeometryField& geom,
                 const std::vector<double>& f) {
    if (f.size() != geom.count)
        throw DimensionMismatch("field size does not match surface");
    const std::vector<double> w = quadrature_weights(s);
    double v = 0.0;
    for (std::size_t i = 0; i < geom.count; ++i) v += w[i] * geom.area[i] * f[i];
    return v;
}

double min_vertex_spacing(const DiscreteHypersurface& s, const GeometryField& geom) {
    if (s.is_curve()) {
        const int n = static_cast<int>(s.vertex_count());
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double d = s.kind == SurfaceKind::CurveFlat
                                 ? (s.pts2[(i + 1) % n] - s.pts2[i]).norm()
                                 : (s.pts3[(i + 1) % n] - s.pts3[i]).norm();
            m = std::min(m, d);
        }
        return m;
    }
    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    double m = std::numeric_limits<double>::infinity();
    for (int i = 1; i < nt - 1; ++i) {
        for (int j = 0; j < np; ++j) {
            const std::size_t v = static_cast<std::size_t>(i) * np + j;
            m = std::min(m, std::sqrt(geom.g[3 * v]) * gg.dth);
            m = std::min(m, std::sqrt(geom.g[3 * v + 2]) * gg.dph);
        }
    }
    return m;
}

}  // namespace mcflab
