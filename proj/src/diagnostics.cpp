#include "mcflab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "mcflab/errors.hpp"
#include "mcflab/gridutil.hpp"
#include "mcflab/parallel.hpp"

namespace mcflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_positive_H(const GeometryField& geom) {
    for (std::size_t v = 0; v < geom.count; ++v)
        if (!(geom.H[v] > 0.0))
            throw ZeroMeanCurvature("mean curvature is not positive everywhere");
}

double unit_ball_volume(int n) { return n == 1 ? 2.0 : M_PI; }

// Shortest-path graph over the grid: interior vertices plus one node per
// pole (the whole pole row is a single point of the surface).
struct PathGraph {
    int np = 0, nv = 0;
    std::vector<std::vector<std::pair<int, double>>> adj;
    int north() const { return nv - 2; }
    int south() const { return nv - 1; }
};

PathGraph build_path_graph(const DiscreteHypersurface& s, const GeometryField& geom) {
    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    PathGraph pg;
    pg.np = np;
    pg.nv = (nt - 2) * np + 2;
    pg.adj.resize(pg.nv);
    auto id = [np](int i, int j) { return (i - 1) * np + j; };
    auto sqE = [&](int i, int j) { return std::sqrt(geom.g[3 * (static_cast<std::size_t>(i) * np + j)]); };
    auto sqG = [&](int i, int j) {
        return std::sqrt(geom.g[3 * (static_cast<std::size_t>(i) * np + j) + 2]);
    };
    auto link = [&](int a, int b, double w) {
        pg.adj[a].push_back({b, w});
        pg.adj[b].push_back({a, w});
    };
    for (int i = 1; i < nt - 1; ++i)
        for (int j = 0; j < np; ++j) {
            const int jn = wrap(j + 1, np);
            link(id(i, j), id(i, jn), 0.5 * (sqG(i, j) + sqG(i, jn)) * gg.dph);
            if (i + 1 < nt - 1)
                link(id(i, j), id(i + 1, j), 0.5 * (sqE(i, j) + sqE(i + 1, j)) * gg.dth);
        }
    for (int j = 0; j < np; ++j) {
        link(pg.north(), id(1, j), 0.5 * (sqE(0, j) + sqE(1, j)) * gg.dth);
        link(pg.south(), id(nt - 2, j), 0.5 * (sqE(nt - 1, j) + sqE(nt - 2, j)) * gg.dth);
    }
    return pg;
}

std::vector<double> dijkstra(const PathGraph& pg, int src) {
    std::vector<double> dist(pg.nv, kInf);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[src] = 0.0;
    heap.push({0.0, src});
    while (!heap.empty()) {
        const auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, w] : pg.adj[u])
            if (d + w < dist[v]) {
                dist[v] = d + w;
                heap.push({dist[v], v});
            }
    }
    return dist;
}

int farthest(const std::vector<double>& dist) {
    int best = 0;
    for (int v = 1; v < static_cast<int>(dist.size()); ++v)
        if (dist[v] > dist[best]) best = v;
    return best;
}

double graph_diameter_sweep(const DiscreteHypersurface& s, const GeometryField& geom) {
    const PathGraph pg = build_path_graph(s, geom);
    // Seeds: both poles plus the radial extremes; one farthest-point
    // iteration from each.  Deterministic (first index wins ties).
    std::vector<int> seeds = {pg.north(), pg.south()};
    {
        std::size_t lo = 0, hi = 0;
        for (std::size_t v = 0; v < s.radial.size(); ++v) {
            if (s.radial[v] < s.radial[lo]) lo = v;
            if (s.radial[v] > s.radial[hi]) hi = v;
        }
        auto to_id = [&](std::size_t v) {
            const int i = static_cast<int>(v) / s.n_phi, j = static_cast<int>(v) % s.n_phi;
            if (i == 0) return pg.north();
            if (i == s.n_theta - 1) return pg.south();
            return (i - 1) * s.n_phi + j;
        };
        seeds.push_back(to_id(lo));
        seeds.push_back(to_id(hi));
    }
    double best = 0.0;
    for (int seed : seeds) {
        const auto d1 = dijkstra(pg, seed);
        const int u = farthest(d1);
        best = std::max(best, d1[u]);
        const auto d2 = dijkstra(pg, u);
        best = std::max(best, d2[farthest(d2)]);
    }
    return best;
}

}  // namespace

PinchingField pinching_psi(const GeometryField& geom, double delta) {
    require_positive_H(geom);
    PinchingField out;
    out.values.assign(geom.count, 0.0);
    if (geom.n == 1) return out;  // ||A||^2 = ||H||^2 exactly for one eigenvalue
    parallel_for(geom.count, [&](std::size_t v) {
        const double gap = geom.lambda[2 * v + 1] - geom.lambda[2 * v];
        out.values[v] = 0.5 * gap * gap / std::pow(geom.H[v], 2.0 - delta);
    });
    for (double x : out.values) out.sup = std::max(out.sup, x);
    return out;
}

double epsilon_sharp(const GeometryField& geom, double L) {
    require_positive_H(geom);
    const double n2L = static_cast<double>(geom.n) * geom.n * L;
    double eps = kInf;
    for (std::size_t v = 0; v < geom.count; ++v) {
        const double H = geom.H[v];
        eps = std::min(eps, (H * H * geom.lambda_at(v, 0) - n2L) / (H * H * H));
    }
    return std::min(eps, 1.0);
}

double epsilon_sharp(const GeometryField& geom, const ModelSpace& model) {
    return epsilon_sharp(geom, ambient_exposure(model).L);
}

double convexity_margin(const GeometryField& geom, double L) {
    double m = kInf;
    for (std::size_t v = 0; v < geom.count; ++v) {
        const double H = geom.H[v];
        m = std::min(m, H * H * geom.lambda_at(v, 0));
    }
    return m - 2.0 * geom.n * geom.n * L;
}

double convexity_margin(const GeometryField& geom, const ModelSpace& model) {
    return convexity_margin(geom, ambient_exposure(model).L);
}

double gradient_ratio(const GeometryField& geom) {
    double r = 0.0;
    for (std::size_t v = 0; v < geom.count; ++v) {
        const double H2 = geom.H[v] * geom.H[v];
        r = std::max(r, geom.gradH_norm[v] * geom.gradH_norm[v] / (H2 * H2));
    }
    return r;
}

double pinching_inequality_margin(const GeometryField& geom, double eps) {
    double m = kInf;
    for (std::size_t v = 0; v < geom.count; ++v) {
        const double H = geom.H[v];
        double tr3 = 0.0, a2 = 0.0;
        for (int k = 0; k < geom.n; ++k) {
            const double l = geom.lambda_at(v, k);
            tr3 += l * l * l;
            a2 += l * l;
        }
        const double lhs = H * tr3 - a2 * a2;
        const double rhs = geom.n * eps * eps * H * H * (a2 - H * H / geom.n);
        // Every term is a degree-4 form in the eigenvalues; H^4 is the natural
        // relative scale.  Normalizing by |lhs - rhs| itself would turn the
        // rounding noise of states with lhs = rhs = 0 into O(1) ratios.
        const double H4 = H * H * H * H;
        m = std::min(m, (lhs - rhs) / H4);
    }
    return m;
}

SobolevCheck sobolev_conditions(const DiscreteHypersurface& s, const GeometryField& geom,
                                const ModelSpace& model, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("sobolev alpha must lie in (0, 1)");
    const AmbientExposure amb = ambient_exposure(model);
    const double b = std::sqrt(amb.K_bar);
    const int n = geom.n;
    const double vol = total_volume(s, geom);
    const double q = std::pow(1.0 - alpha, -1.0 / n) * std::pow(vol / unit_ball_volume(n), 1.0 / n);

    SobolevCheck out;
    out.value1 = b * b * q * q;
    out.cond1 = out.value1 <= 1.0;
    if (b == 0.0) {
        out.value2 = q;
    } else {
        if (b * q > 1.0) throw ArcsinDomain("arcsin argument exceeds 1 in the radius condition");
        out.value2 = std::asin(b * q) / b;
    }
    out.cond2 = out.value2 < 0.5 * amb.R_bar;
    return out;
}

RicciMyers ricci_myers(const DiscreteHypersurface& s, const GeometryField& geom) {
    RicciMyers out;
    if (geom.n == 1) {
        // The intrinsic metric of a closed curve is a circle of the same
        // length; the diameter is exactly half the length.  Myers puts no
        // constraint on one-dimensional fibers-free bases: trivial pass.
        out.ricci_lb = 0.0;
        out.diameter = 0.5 * total_volume(s, geom);
        out.myers_bound = kInf;
        out.ok = true;
        return out;
    }
    double lam1 = kInf;
    for (std::size_t v = 0; v < geom.count; ++v) lam1 = std::min(lam1, geom.lambda_at(v, 0));
    out.ricci_lb = lam1 * lam1;  // (n-1) = 1 for surfaces
    out.myers_bound = lam1 > 0.0 ? M_PI / lam1 : kInf;
    out.diameter = graph_diameter_sweep(s, geom);
    const double dth = GraphGrid::get(s.n_theta, s.n_phi).dth;
    const double grid_tol = 4.0 * dth * dth;
    out.ok = out.diameter <= out.myers_bound * (1.0 + 2.0 * grid_tol);
    return out;
}

double intrinsic_diameter_all_pairs(const DiscreteHypersurface& s, const GeometryField& geom) {
    if (geom.n == 1) return 0.5 * total_volume(s, geom);
    const PathGraph pg = build_path_graph(s, geom);
    double best = 0.0;
    for (int src = 0; src < pg.nv; ++src) {
        const auto d = dijkstra(pg, src);
        best = std::max(best, d[farthest(d)]);
    }
    return best;
}

DiagnosticsRow diagnostics_row(double t, double dt, const DiscreteHypersurface& s,
                               const GeometryField& geom, const ModelSpace& model,
                               const std::vector<double>& deltas, double alpha) {
    DiagnosticsRow row;
    row.t = t;
    row.dt = dt;
    row.H_max = -kInf;
    row.H_min = kInf;
    for (std::size_t v = 0; v < geom.count; ++v) {
        row.H_max = std::max(row.H_max, geom.H[v]);
        row.H_min = std::min(row.H_min, geom.H[v]);
    }
    row.collapse_ratio = row.H_max / row.H_min;
    row.lambda_min = kInf;
    row.lambda_max = -kInf;
    for (double l : geom.lambda) {
        row.lambda_min = std::min(row.lambda_min, l);
        row.lambda_max = std::max(row.lambda_max, l);
    }
    row.eigen_ratio = 1.0;
    if (geom.n == 2)
        for (std::size_t v = 0; v < geom.count; ++v)
            row.eigen_ratio = std::max(row.eigen_ratio, geom.lambda_at(v, 1) / geom.lambda_at(v, 0));
    row.epsilon_sharp = epsilon_sharp(geom, model);
    row.convexity_margin = convexity_margin(geom, model);
    for (double d : deltas) row.psi_sup.push_back(pinching_psi(geom, d).sup);
    row.vol = total_volume(s, geom);
    row.grad_ratio = gradient_ratio(geom);
    try {
        const SobolevCheck sc = sobolev_conditions(s, geom, model, alpha);
        row.sobolev_1 = sc.cond1;
        row.sobolev_2 = sc.cond2;
    } catch (const ArcsinDomain&) {
        // b*q > 1 implies b^2 q^2 > 1, so both conditions fail together.
        row.sobolev_1 = false;
        row.sobolev_2 = false;
    }
    const RicciMyers rm = ricci_myers(s, geom);
    row.ricci_bound = rm.ricci_lb;
    row.intrinsic_diameter = rm.diameter;
    row.myers_bound = rm.myers_bound;
    return row;
}

}  // namespace mcflab
