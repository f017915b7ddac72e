#include "mcflab/tensorcalc.hpp"

#include <cmath>
#include <tuple>

#include "mcflab/errors.hpp"
#include "mcflab/gridutil.hpp"
#include "mcflab/parallel.hpp"
#include "mcflab/sym2eig.hpp"

namespace mcflab {

namespace {

// Packed index of the symmetric pair (a, b) in (tt, tp, pp); a, b in {0, 1}.
inline int sym(int a, int b) { return a + b; }

constexpr int kPairA[3] = {0, 0, 1};  // m -> (a, b)
constexpr int kPairB[3] = {0, 1, 1};

struct InvMetric {
    double i00, i01, i11;
};

inline InvMetric inv_metric(const GeometryField& geom, std::size_t v) {
    const double E = geom.g[3 * v], F = geom.g[3 * v + 1], G = geom.g[3 * v + 2];
    const double det = E * G - F * F;
    return {G / det, -F / det, E / det};
}

inline double inv_at(const InvMetric& gi, int a, int b) {
    if (a == 0 && b == 0) return gi.i00;
    if (a == 1 && b == 1) return gi.i11;
    return gi.i01;
}

void copy_pole_rows(std::vector<double>& f, int nt, int np, int comps) {
    const std::size_t row = static_cast<std::size_t>(np) * comps;
    for (std::size_t q = 0; q < row; ++q) {
        f[q] = f[row + q];
        f[static_cast<std::size_t>(nt - 1) * row + q] = f[static_cast<std::size_t>(nt - 2) * row + q];
    }
}

// Central chart partials of a comps-component grid field; output layout
// [v*2*comps + a*comps + k] for direction a in {theta, phi}.  Pole rows get
// copies of the adjacent interior row.
std::vector<double> grid_partials(int nt, int np, int comps, double dth, double dph,
                                  const std::vector<double>& f) {
    const std::size_t count = static_cast<std::size_t>(nt) * np;
    std::vector<double> d(count * 2 * comps);
    parallel_for(count, [&](std::size_t v) {
        const int i = static_cast<int>(v) / np;
        const int j = static_cast<int>(v) % np;
        const std::size_t jp = static_cast<std::size_t>(i) * np + wrap(j + 1, np);
        const std::size_t jm = static_cast<std::size_t>(i) * np + wrap(j - 1, np);
        for (int k = 0; k < comps; ++k) {
            double dt_ = 0.0;
            if (i > 0 && i < nt - 1)
                dt_ = (f[(v + np) * comps + k] - f[(v - np) * comps + k]) / (2.0 * dth);
            d[v * 2 * comps + k] = dt_;
            d[v * 2 * comps + comps + k] =
                (f[jp * comps + k] - f[jm * comps + k]) / (2.0 * dph);
        }
    });
    copy_pole_rows(d, nt, np, 2 * comps);
    return d;
}

// Cyclic central differences of a comps-component curve field (unit parameter
// step, matching the index chart the curve metric lives in).
std::vector<double> curve_partials(int n, int comps, const std::vector<double>& f) {
    std::vector<double> d(static_cast<std::size_t>(n) * comps);
    parallel_for(n, [&](std::size_t v) {
        const int i = static_cast<int>(v);
        const std::size_t ip = static_cast<std::size_t>((i + 1) % n);
        const std::size_t im = static_cast<std::size_t>((i + n - 1) % n);
        for (int k = 0; k < comps; ++k)
            d[v * comps + k] = 0.5 * (f[ip * comps + k] - f[im * comps + k]);
    });
    return d;
}

void require_tensor(const GeometryField& geom, const std::vector<double>& T) {
    const std::size_t want = geom.n == 1 ? geom.count : 3 * geom.count;
    if (T.size() != want) throw DimensionMismatch("symmetric 2-tensor has wrong size");
}

void require_gamma(const GeometryField& geom, const std::vector<double>& gamma) {
    const std::size_t want = geom.n == 1 ? geom.count : 6 * geom.count;
    if (gamma.size() != want) throw DimensionMismatch("christoffel field has wrong size");
}

}  // namespace

std::vector<double> christoffel_symbols(const DiscreteHypersurface& s,
                                        const GeometryField& geom) {
    if (s.is_curve()) {
        const int n = static_cast<int>(geom.count);
        const auto dg = curve_partials(n, 1, geom.g);
        std::vector<double> gamma(geom.count);
        parallel_for(geom.count, [&](std::size_t v) { gamma[v] = dg[v] / (2.0 * geom.g[v]); });
        return gamma;
    }

    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    const auto dg = grid_partials(nt, np, 3, gg.dth, gg.dph, geom.g);
    std::vector<double> gamma(6 * geom.count);
    parallel_for(geom.count, [&](std::size_t v) {
        const InvMetric gi = inv_metric(geom, v);
        const double* d = &dg[v * 6];  // d[a*3 + m] = partial_a g_m
        for (int m = 0; m < 3; ++m) {
            const int a = kPairA[m], b = kPairB[m];
            double low[2];  // Gamma_{d,ab}
            for (int e = 0; e < 2; ++e)
                low[e] = 0.5 * (d[a * 3 + sym(e, b)] + d[b * 3 + sym(e, a)] -
                                d[e * 3 + sym(a, b)]);
            for (int c = 0; c < 2; ++c)
                gamma[6 * v + 3 * c + m] = inv_at(gi, c, 0) * low[0] + inv_at(gi, c, 1) * low[1];
        }
    });
    copy_pole_rows(gamma, nt, np, 6);
    return gamma;
}

std::vector<double> covariant_derivative_sym2(const DiscreteHypersurface& s,
                                              const GeometryField& geom,
                                              const std::vector<double>& gamma,
                                              const std::vector<double>& T) {
    require_gamma(geom, gamma);
    require_tensor(geom, T);
    if (s.is_curve()) {
        const int n = static_cast<int>(geom.count);
        const auto dT = curve_partials(n, 1, T);
        std::vector<double> out(geom.count);
        parallel_for(geom.count, [&](std::size_t v) { out[v] = dT[v] - 2.0 * gamma[v] * T[v]; });
        return out;
    }

    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    const auto dT = grid_partials(nt, np, 3, gg.dth, gg.dph, T);
    std::vector<double> out(6 * geom.count);
    parallel_for(geom.count, [&](std::size_t v) {
        const double* G = &gamma[6 * v];
        const double* t = &T[3 * v];
        const double* d = &dT[v * 6];
        for (int a = 0; a < 2; ++a)
            for (int m = 0; m < 3; ++m) {
                const int b = kPairA[m], c = kPairB[m];
                double acc = d[a * 3 + m];
                for (int e = 0; e < 2; ++e)
                    acc -= G[3 * e + sym(a, b)] * t[sym(e, c)] +
                           G[3 * e + sym(a, c)] * t[sym(b, e)];
                out[6 * v + 3 * a + m] = acc;
            }
    });
    copy_pole_rows(out, nt, np, 6);
    return out;
}

std::vector<double> hessian(const DiscreteHypersurface& s, const GeometryField& geom,
                            const std::vector<double>& gamma,
                            const std::vector<double>& f) {
    require_gamma(geom, gamma);
    if (f.size() != geom.count) throw DimensionMismatch("field size does not match surface");
    if (s.is_curve()) {
        const int n = static_cast<int>(geom.count);
        const auto w = curve_partials(n, 1, f);
        const auto dw = curve_partials(n, 1, w);
        std::vector<double> out(geom.count);
        parallel_for(geom.count, [&](std::size_t v) { out[v] = dw[v] - gamma[v] * w[v]; });
        return out;
    }

    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    const auto w = grid_partials(nt, np, 1, gg.dth, gg.dph, f);   // one-form df
    const auto dw = grid_partials(nt, np, 2, gg.dth, gg.dph, w);  // d[a*2 + b]
    std::vector<double> out(3 * geom.count);
    parallel_for(geom.count, [&](std::size_t v) {
        const double* G = &gamma[6 * v];
        for (int m = 0; m < 3; ++m) {
            const int a = kPairA[m], b = kPairB[m];
            double acc = dw[v * 4 + a * 2 + b];
            for (int c = 0; c < 2; ++c) acc -= G[3 * c + m] * w[v * 2 + c];
            out[3 * v + m] = acc;
        }
    });
    copy_pole_rows(out, nt, np, 3);
    return out;
}

std::vector<double> tensor_laplacian_sym2(const DiscreteHypersurface& s,
                                          const GeometryField& geom,
                                          const std::vector<double>& gamma,
                                          const std::vector<double>& T) {
    const auto W = covariant_derivative_sym2(s, geom, gamma, T);
    if (s.is_curve()) {
        const int n = static_cast<int>(geom.count);
        const auto dW = curve_partials(n, 1, W);
        std::vector<double> out(geom.count);
        parallel_for(geom.count, [&](std::size_t v) {
            out[v] = (dW[v] - 3.0 * gamma[v] * W[v]) / geom.g[v];
        });
        return out;
    }

    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    const auto dW = grid_partials(nt, np, 6, gg.dth, gg.dph, W);
    std::vector<double> out(3 * geom.count);
    parallel_for(geom.count, [&](std::size_t v) {
        const InvMetric gi = inv_metric(geom, v);
        const double* G = &gamma[6 * v];
        const double* w = &W[6 * v];
        const double* d = &dW[v * 12];  // d[e*6 + a*3 + m] = partial_e W_{a,m}
        for (int m = 0; m < 3; ++m) {
            const int b = kPairA[m], c = kPairB[m];
            double acc = 0.0;
            for (int e = 0; e < 2; ++e)
                for (int a = 0; a < 2; ++a) {
                    double term = d[e * 6 + a * 3 + m];
                    for (int p = 0; p < 2; ++p)
                        term -= G[3 * p + sym(e, a)] * w[3 * p + m] +
                                G[3 * p + sym(e, b)] * w[3 * a + sym(p, c)] +
                                G[3 * p + sym(e, c)] * w[3 * a + sym(b, p)];
                    acc += inv_at(gi, e, a) * term;
                }
            out[3 * v + m] = acc;
        }
    });
    copy_pole_rows(out, nt, np, 3);
    return out;
}

std::vector<double> second_form_gradient_norm2(const DiscreteHypersurface& s,
                                               const GeometryField& geom) {
    const auto gamma = christoffel_symbols(s, geom);
    const auto W = covariant_derivative_sym2(s, geom, gamma, geom.h);
    std::vector<double> out(geom.count);
    if (s.is_curve()) {
        parallel_for(geom.count, [&](std::size_t v) {
            const double g = geom.g[v];
            out[v] = W[v] * W[v] / (g * g * g);
        });
        return out;
    }
    parallel_for(geom.count, [&](std::size_t v) {
        const InvMetric gi = inv_metric(geom, v);
        const double* w = &W[6 * v];
        double acc = 0.0;
        for (int a = 0; a < 2; ++a)
            for (int d = 0; d < 2; ++d)
                for (int b = 0; b < 2; ++b)
                    for (int e = 0; e < 2; ++e)
                        for (int c = 0; c < 2; ++c)
                            for (int f = 0; f < 2; ++f)
                                acc += inv_at(gi, a, d) * inv_at(gi, b, e) *
                                       inv_at(gi, c, f) * w[3 * a + sym(b, c)] *
                                       w[3 * d + sym(e, f)];
        out[v] = acc;
    });
    return out;
}

std::vector<double> symmetric_gradient(const DiscreteHypersurface& s,
                                       const GeometryField& geom,
                                       const std::vector<double>& gamma,
                                       const std::vector<double>& v_contra) {
    require_gamma(geom, gamma);
    if (v_contra.size() != geom.count * geom.n)
        throw DimensionMismatch("vector field has wrong size");
    if (s.is_curve()) {
        const int n = static_cast<int>(geom.count);
        std::vector<double> low(geom.count);
        parallel_for(geom.count, [&](std::size_t v) { low[v] = geom.g[v] * v_contra[v]; });
        const auto dlow = curve_partials(n, 1, low);
        std::vector<double> out(geom.count);
        parallel_for(geom.count, [&](std::size_t v) {
            out[v] = 2.0 * (dlow[v] - gamma[v] * low[v]);
        });
        return out;
    }

    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    std::vector<double> low(2 * geom.count);
    parallel_for(geom.count, [&](std::size_t v) {
        const double E = geom.g[3 * v], F = geom.g[3 * v + 1], G = geom.g[3 * v + 2];
        low[2 * v] = E * v_contra[2 * v] + F * v_contra[2 * v + 1];
        low[2 * v + 1] = F * v_contra[2 * v] + G * v_contra[2 * v + 1];
    });
    const auto dlow = grid_partials(nt, np, 2, gg.dth, gg.dph, low);
    std::vector<double> out(3 * geom.count);
    parallel_for(geom.count, [&](std::size_t v) {
        const double* G = &gamma[6 * v];
        for (int m = 0; m < 3; ++m) {
            const int a = kPairA[m], b = kPairB[m];
            double acc = dlow[v * 4 + a * 2 + b] + dlow[v * 4 + b * 2 + a];
            for (int c = 0; c < 2; ++c) acc -= 2.0 * G[3 * c + m] * low[2 * v + c];
            out[3 * v + m] = acc;
        }
    });
    copy_pole_rows(out, nt, np, 3);
    return out;
}

std::vector<double> divergence(const DiscreteHypersurface& s, const GeometryField& geom,
                               const std::vector<double>& gamma,
                               const std::vector<double>& v_contra) {
    require_gamma(geom, gamma);
    if (v_contra.size() != geom.count * geom.n)
        throw DimensionMismatch("vector field has wrong size");
    if (s.is_curve()) {
        const int n = static_cast<int>(geom.count);
        const auto dv = curve_partials(n, 1, v_contra);
        std::vector<double> out(geom.count);
        parallel_for(geom.count, [&](std::size_t v) { out[v] = dv[v] + gamma[v] * v_contra[v]; });
        return out;
    }

    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    const auto dv = grid_partials(nt, np, 2, gg.dth, gg.dph, v_contra);
    std::vector<double> out(geom.count);
    parallel_for(geom.count, [&](std::size_t v) {
        const double* G = &gamma[6 * v];
        // trace of Gamma over the upper and one lower slot: Gamma^a_{ab} V^b
        const double tr0 = G[3 * 0 + sym(0, 0)] + G[3 * 1 + sym(1, 0)];
        const double tr1 = G[3 * 0 + sym(0, 1)] + G[3 * 1 + sym(1, 1)];
        out[v] = dv[v * 4 + 0 * 2 + 0] + dv[v * 4 + 1 * 2 + 1] +
                 tr0 * v_contra[2 * v] + tr1 * v_contra[2 * v + 1];
    });
    copy_pole_rows(out, nt, np, 1);
    return out;
}

std::vector<double> generalized_eigenvalues_sym2(const DiscreteHypersurface& s,
                                                 const GeometryField& geom,
                                                 const std::vector<double>& T) {
    require_tensor(geom, T);
    std::vector<double> out(geom.count * geom.n);
    if (s.is_curve()) {
        parallel_for(geom.count, [&](std::size_t v) { out[v] = T[v] / geom.g[v]; });
        return out;
    }
    parallel_for(geom.count, [&](std::size_t v) {
        std::tie(out[2 * v], out[2 * v + 1]) =
            pencil_eigenvalues(geom.g[3 * v], geom.g[3 * v + 1], geom.g[3 * v + 2],
                               T[3 * v], T[3 * v + 1], T[3 * v + 2]);
    });
    return out;
}

}  // namespace mcflab
