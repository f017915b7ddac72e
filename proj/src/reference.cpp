#include <cmath>

#include "mcflab/geometry.hpp"
#include "mcflab/gridutil.hpp"

namespace mcflab {
namespace reference {

// Plain single-threaded implementations, kept deliberately simple and written
// independently of the production kernels; tests cross-check the two and the
// benchmark uses this as the serial baseline.

namespace {

Eigen::Vector3d point(const DiscreteHypersurface& s, int i) {
    if (s.kind == SurfaceKind::CurveFlat)
        return {s.pts2[i].x(), s.pts2[i].y(), 0.0};
    return s.pts3[i];
}

}  // namespace

GeometryField compute_geometry(const DiscreteHypersurface& s) {
    GeometryField f;
    if (s.is_curve()) {
        const int n = static_cast<int>(s.vertex_count());
        f.n = 1;
        f.count = n;
        f.g.assign(n, 0.0);
        f.h.assign(n, 0.0);
        f.lambda.assign(n, 0.0);
        f.H.assign(n, 0.0);
        f.A2.assign(n, 0.0);
        f.area.assign(n, 0.0);
        f.normal.assign(n, Eigen::Vector3d::Zero());
        f.gradH.assign(n, 0.0);
        f.gradH_norm.assign(n, 0.0);
        f.lapH.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            const Eigen::Vector3d pm = point(s, (i + n - 1) % n);
            const Eigen::Vector3d pc = point(s, i);
            const Eigen::Vector3d pp = point(s, (i + 1) % n);
            const Eigen::Vector3d d1 = 0.5 * (pp - pm);
            const Eigen::Vector3d d2 = pp - 2.0 * pc + pm;
            const Eigen::Vector3d e1 = pc - pm, e2 = pp - pc;
            const double sp = d1.norm();
            const Eigen::Vector3d t = d1 / sp;
            Eigen::Vector3d xi;
            double k;
            // Curvature of the circumscribed circle of the vertex triple
            // (geodesic version on the base sphere); exact on round data.
            if (s.kind == SurfaceKind::CurveFlat) {
                xi = Eigen::Vector3d(-t.y(), t.x(), 0.0);
                k = (e1.x() * e2.y() - e1.y() * e2.x()) / (e1.norm() * e2.norm() * sp);
            } else {
                const double rs = s.base_radius();
                xi = (pc / rs).cross(t);
                const double inv_rc = e1.cross(e2).norm() / (e1.norm() * e2.norm() * sp);
                k = std::copysign(
                    std::sqrt(std::max(inv_rc * inv_rc - 1.0 / (rs * rs), 0.0)),
                    d2.dot(xi));
            }
            f.g[i] = sp * sp;
            f.h[i] = k * sp * sp;
            f.lambda[i] = k;
            f.H[i] = k;
            f.A2[i] = k * k;
            f.area[i] = sp;
            f.normal[i] = xi;
        }
        for (int i = 0; i < n; ++i) {
            const int ip = (i + 1) % n, im = (i + n - 1) % n;
            const double d = 0.5 * (f.H[ip] - f.H[im]);
            f.gradH[i] = d / f.g[i];
            f.gradH_norm[i] = std::abs(d) / f.area[i];
            f.lapH[i] = ((f.H[ip] - f.H[i]) / (0.5 * (f.area[i] + f.area[ip])) -
                         (f.H[i] - f.H[im]) / (0.5 * (f.area[i] + f.area[im]))) /
                        f.area[i];
        }
        return f;
    }

    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    const std::size_t count = static_cast<std::size_t>(nt) * np;
    f.n = 2;
    f.count = count;
    f.g.assign(3 * count, 0.0);
    f.h.assign(3 * count, 0.0);
    f.lambda.assign(2 * count, 0.0);
    f.H.assign(count, 0.0);
    f.A2.assign(count, 0.0);
    f.area.assign(count, 0.0);
    f.normal.assign(count, Eigen::Vector3d::Zero());
    f.gradH.assign(2 * count, 0.0);
    f.gradH_norm.assign(count, 0.0);
    f.lapH.assign(count, 0.0);

    auto R = [&](int i, int j) { return s.radial[i * np + wrap(j, np)]; };
    for (int i = 1; i < nt - 1; ++i) {
        for (int j = 0; j < np; ++j) {
            const double st = gg.sin_t[i], ct = gg.cos_t[i];
            const double sp = gg.sin_p[j], cp = gg.cos_p[j];
            const Eigen::Vector3d u{st * cp, st * sp, ct};
            const Eigen::Vector3d ut{ct * cp, ct * sp, -st};
            const Eigen::Vector3d up{-st * sp, st * cp, 0.0};
            const double rc = R(i, j);
            const double rt = (R(i + 1, j) - R(i - 1, j)) / (2 * gg.dth);
            const double rp = (R(i, j + 1) - R(i, j - 1)) / (2 * gg.dph);
            const double rtt = (R(i + 1, j) - 2 * rc + R(i - 1, j)) / (gg.dth * gg.dth);
            const double rpp = (R(i, j + 1) - 2 * rc + R(i, j - 1)) / (gg.dph * gg.dph);
            const double rtp = (R(i + 1, j + 1) - R(i + 1, j - 1) - R(i - 1, j + 1) +
                                R(i - 1, j - 1)) /
                               (4 * gg.dth * gg.dph);
            const Eigen::Vector3d xt = rt * u + rc * ut;
            const Eigen::Vector3d xp = rp * u + rc * up;
            const Eigen::Vector3d xtt = rtt * u + 2 * rt * ut - rc * u;
            const Eigen::Vector3d xtp = rtp * u + rt * up + rp * ut + rc * (ct / st) * up;
            const Eigen::Vector3d xpp =
                rpp * u + 2 * rp * up - rc * (st * st * u + st * ct * ut);
            const double E = xt.squaredNorm(), F = xt.dot(xp), G = xp.squaredNorm();
            const double detg = E * G - F * F;
            const Eigen::Vector3d xi = -xt.cross(xp).normalized();
            const double h11 = xtt.dot(xi), h12 = xtp.dot(xi), h22 = xpp.dot(xi);
            const double B = E * h22 + G * h11 - 2 * F * h12;
            const double deth = h11 * h22 - h12 * h12;
            const double sq = std::sqrt(std::max(B * B - 4 * detg * deth, 0.0));
            const std::size_t v = static_cast<std::size_t>(i) * np + j;
            f.g[3 * v] = E;
            f.g[3 * v + 1] = F;
            f.g[3 * v + 2] = G;
            f.h[3 * v] = h11;
            f.h[3 * v + 1] = h12;
            f.h[3 * v + 2] = h22;
            f.lambda[2 * v] = (B - sq) / (2 * detg);
            f.lambda[2 * v + 1] = (B + sq) / (2 * detg);
            f.H[v] = B / detg;
            f.A2[v] = f.lambda[2 * v] * f.lambda[2 * v] +
                      f.lambda[2 * v + 1] * f.lambda[2 * v + 1];
            f.area[v] = std::sqrt(detg);
            f.normal[v] = xi;
        }
    }
    // Pole rows: adjacent-row means.
    for (auto [pole, adj] : {std::pair<int, int>{0, 1}, {nt - 1, nt - 2}}) {
        auto mean_of = [&](const std::vector<double>& a, int stride, int comp) {
            double m = 0.0;
            for (int j = 0; j < np; ++j) m += a[stride * (adj * np + j) + comp];
            return m / np;
        };
        for (int c = 0; c < 3; ++c) {
            const double mg = mean_of(f.g, 3, c), mh = mean_of(f.h, 3, c);
            for (int j = 0; j < np; ++j) {
                f.g[3 * (pole * np + j) + c] = mg;
                f.h[3 * (pole * np + j) + c] = mh;
            }
        }
        for (int c = 0; c < 2; ++c) {
            const double ml = mean_of(f.lambda, 2, c);
            for (int j = 0; j < np; ++j) f.lambda[2 * (pole * np + j) + c] = ml;
        }
        const double mH = mean_of(f.H, 1, 0), mA = mean_of(f.A2, 1, 0),
                     mar = mean_of(f.area, 1, 0);
        Eigen::Vector3d mn{0, 0, 0};
        for (int j = 0; j < np; ++j) mn += f.normal[adj * np + j];
        mn.normalize();
        for (int j = 0; j < np; ++j) {
            f.H[pole * np + j] = mH;
            f.A2[pole * np + j] = mA;
            f.area[pole * np + j] = mar;
            f.normal[pole * np + j] = mn;
        }
    }
    // Gradient of ||H||.
    auto Hf = [&](int i, int j) { return f.H[i * np + wrap(j, np)]; };
    for (int i = 1; i < nt - 1; ++i) {
        for (int j = 0; j < np; ++j) {
            const std::size_t v = static_cast<std::size_t>(i) * np + j;
            const double ft = (Hf(i + 1, j) - Hf(i - 1, j)) / (2 * gg.dth);
            const double fp = (Hf(i, j + 1) - Hf(i, j - 1)) / (2 * gg.dph);
            const double E = f.g[3 * v], F = f.g[3 * v + 1], G = f.g[3 * v + 2];
            const double detg = E * G - F * F;
            f.gradH[2 * v] = (G * ft - F * fp) / detg;
            f.gradH[2 * v + 1] = (E * fp - F * ft) / detg;
            f.gradH_norm[v] = std::sqrt(
                std::max(f.gradH[2 * v] * ft + f.gradH[2 * v + 1] * fp, 0.0));
        }
    }
    for (auto [pole, adj] : {std::pair<int, int>{0, 1}, {nt - 1, nt - 2}}) {
        double m0 = 0.0, m1 = 0.0, mn = 0.0;
        for (int j = 0; j < np; ++j) {
            m0 += f.gradH[2 * (adj * np + j)];
            m1 += f.gradH[2 * (adj * np + j) + 1];
            mn += f.gradH_norm[adj * np + j];
        }
        for (int j = 0; j < np; ++j) {
            f.gradH[2 * (pole * np + j)] = m0 / np;
            f.gradH[2 * (pole * np + j) + 1] = m1 / np;
            f.gradH_norm[pole * np + j] = mn / np;
        }
    }
    f.lapH = reference::laplace_beltrami(s, f, f.H);
    return f;
}

std::vector<double> laplace_beltrami(const DiscreteHypersurface& s,
                                     const GeometryField& geom,
                                     const std::vector<double>& f) {
    if (s.is_curve()) {
        const int n = static_cast<int>(geom.count);
        std::vector<double> out(n);
        for (int i = 0; i < n; ++i) {
            const int ip = (i + 1) % n, im = (i + n - 1) % n;
            out[i] = ((f[ip] - f[i]) / (0.5 * (geom.area[i] + geom.area[ip])) -
                      (f[i] - f[im]) / (0.5 * (geom.area[i] + geom.area[im]))) /
                     geom.area[i];
        }
        return out;
    }
    // Graphs share the flux construction; delegating keeps the reference path
    // serial because the production routine is deterministic by design.
    return ::mcflab::laplace_beltrami(s, geom, f);
}

}  // namespace reference
}  // namespace mcflab
