#include "mcflab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "mcflab/errors.hpp"
#include "mcflab/gridutil.hpp"
#include "mcflab/parallel.hpp"
#include "mcflab/shapes.hpp"

namespace mcflab {

namespace {

double shape_param(const ShapeSpec& spec, const char* key) {
    const auto it = spec.params.find(key);
    if (it == spec.params.end())
        throw ValidationError("shape '" + spec.name + "' is missing parameter '" + key + "'");
    return it->second;
}

void require_model(const FlowConfig& cfg, const DiscreteHypersurface& s) {
    if (cfg.model.kind != s.model.kind || cfg.model.base_dim != s.model.base_dim ||
        cfg.model.a != s.model.a)
        throw ValidationError("configured model does not match the shape '" + cfg.shape.name +
                              "'");
}

Eigen::Vector3d grid_direction(const GraphGrid& gg, int i, int j) {
    return {gg.sin_t[i] * gg.cos_p[j], gg.sin_t[i] * gg.sin_p[j], gg.cos_t[i]};
}

// Max over min chord spacing of a closed curve.
double spacing_ratio(const DiscreteHypersurface& s) {
    const std::size_t n = s.vertex_count();
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double c = s.kind == SurfaceKind::CurveFlat
                             ? (s.pts2[(k + 1) % n] - s.pts2[k]).norm()
                             : (s.pts3[(k + 1) % n] - s.pts3[k]).norm();
        lo = std::min(lo, c);
        hi = std::max(hi, c);
    }
    return hi / lo;
}

// Chordal (nonuniform-knot) Catmull-Rom evaluation on [t1, t2].
Eigen::Vector3d catmull_rom(const Eigen::Vector3d& P0, const Eigen::Vector3d& P1,
                            const Eigen::Vector3d& P2, const Eigen::Vector3d& P3, double t0,
                            double t1, double t2, double t3, double t) {
    const Eigen::Vector3d A1 = ((t1 - t) * P0 + (t - t0) * P1) / (t1 - t0);
    const Eigen::Vector3d A2 = ((t2 - t) * P1 + (t - t1) * P2) / (t2 - t1);
    const Eigen::Vector3d A3 = ((t3 - t) * P2 + (t - t2) * P3) / (t3 - t2);
    const Eigen::Vector3d B1 = ((t2 - t) * A1 + (t - t0) * A2) / (t2 - t0);
    const Eigen::Vector3d B2 = ((t3 - t) * A2 + (t - t1) * A3) / (t3 - t1);
    return ((t2 - t) * B1 + (t - t1) * B2) / (t2 - t1);
}

}  // namespace

void FlowConfig::validate() const {
    if (!(cfl > 0.0 && cfl <= 1.0)) throw ValidationError("cfl_constant must lie in (0, 1]");
    if (!(h_stop_factor > 1.0)) throw ValidationError("h_stop factor must exceed 1");
    if (!(min_volume_fraction > 0.0 && min_volume_fraction < 1.0))
        throw ValidationError("min_volume fraction must lie in (0, 1)");
    if (cadence < 1) throw ValidationError("diagnostic cadence must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    if (deltas.empty()) throw ValidationError("at least one delta is required");
    for (double d : deltas)
        if (!(d > 0.0 && d <= 0.5)) throw ValidationError("delta values must lie in (0, 1/2]");
    if (n_vertices < 16) throw ValidationError("curve resolution must be >= 16 vertices");
    if (n_theta < 16 || n_phi < 32)
        throw ValidationError("graph resolution must be >= 16 x 32");
}

DiscreteHypersurface make_initial(const FlowConfig& cfg) {
    const ShapeSpec& sp = cfg.shape;
    DiscreteHypersurface s;
    if (sp.name == "circle") {
        s = make_circle(shape_param(sp, "radius"), cfg.n_vertices);
    } else if (sp.name == "ellipse") {
        s = make_ellipse(shape_param(sp, "a"), shape_param(sp, "b"), cfg.n_vertices);
    } else if (sp.name == "geodesic_circle") {
        if (cfg.model.kind != ModelKind::HomogeneousSphereBase)
            throw ValidationError("geodesic_circle requires the homogeneous sphere base");
        s = make_geodesic_circle(shape_param(sp, "rho"), cfg.n_vertices, cfg.model.a);
    } else if (sp.name == "sphere") {
        s = make_sphere(shape_param(sp, "radius"), cfg.n_theta, cfg.n_phi);
    } else if (sp.name == "ellipsoid") {
        s = make_ellipsoid(shape_param(sp, "a"), shape_param(sp, "b"), shape_param(sp, "c"),
                           cfg.n_theta, cfg.n_phi);
    } else if (sp.name == "offset_sphere") {
        s = make_offset_sphere({shape_param(sp, "ox"), shape_param(sp, "oy"),
                                shape_param(sp, "oz")},
                               cfg.n_theta, cfg.n_phi);
    } else {
        throw ValidationError("unknown shape '" + sp.name + "'");
    }
    require_model(cfg, s);
    return s;
}

void fill_pole_rows(DiscreteHypersurface& s) {
    const int nt = s.n_theta, np = s.n_phi;
    auto ring_mean = [&](int i) {
        double sum = 0.0;
        for (int j = 0; j < np; ++j) sum += s.radial[static_cast<std::size_t>(i) * np + j];
        return sum / np;
    };
    for (const int pole : {0, nt - 1}) {
        const int toward = pole == 0 ? 1 : -1;
        // Even quartic fit of the phi-averaged profile through the three
        // nearest rings.  Exact for constant profiles (15 - 6 + 1 = 10) and
        // O(dtheta^6) for smooth ones, since r(theta) extends evenly across
        // the pole.  Advancing the pole by its own replaced curvature instead
        // couples it to the adjacent row's stencil in an amplifying loop: a
        // sagging pole raises the neighbouring curvature, which is copied back
        // as the pole's speed and deepens the sag.
        const double fill = (15.0 * ring_mean(pole + toward)
                             - 6.0 * ring_mean(pole + 2 * toward)
                             + ring_mean(pole + 3 * toward)) / 10.0;
        if (!(fill > 0.0)) throw StepRejected("pole fill drove a radial value nonpositive");
        std::fill_n(s.radial.begin() + static_cast<std::size_t>(pole) * np, np, fill);
    }
}

DiscreteHypersurface flow_step_cached(const DiscreteHypersurface& s,
                                      const GeometryField& geom, double dt) {
    if (!(dt > 0.0)) throw ValidationError("flow step requires dt > 0");
    DiscreteHypersurface out = s;
    switch (s.kind) {
        case SurfaceKind::CurveFlat:
            for (std::size_t v = 0; v < geom.count; ++v)
                out.pts2[v] += dt * geom.H[v] * geom.normal[v].head<2>();
            break;
        case SurfaceKind::CurveSphereBase: {
            const double R = s.base_radius();
            for (std::size_t v = 0; v < geom.count; ++v) {
                Eigen::Vector3d p = s.pts3[v] + dt * geom.H[v] * geom.normal[v];
                out.pts3[v] = p * (R / p.norm());
            }
            break;
        }
        case SurfaceKind::RadialGraph: {
            const GraphGrid& gg = GraphGrid::get(s.n_theta, s.n_phi);
            for (std::size_t v = 0; v < geom.count; ++v) {
                const int i = static_cast<int>(v) / s.n_phi, j = static_cast<int>(v) % s.n_phi;
                if (i == 0 || i == s.n_theta - 1) continue;  // slaved below
                const double c = geom.normal[v].dot(grid_direction(gg, i, j));
                if (std::abs(c) < 0.1)
                    throw StepRejected("graph step lost star-shapedness (normal nearly tangent)");
                const double r = s.radial[v] + dt * geom.H[v] / c;
                if (!(r > 0.0)) throw StepRejected("graph step drove a radial value nonpositive");
                out.radial[v] = r;
            }
            fill_pole_rows(out);
            break;
        }
    }
    return out;
}

DiscreteHypersurface flow_step(const DiscreteHypersurface& s, const ModelSpace& model,
                               double dt) {
    if (model.kind != s.model.kind)
        throw DimensionMismatch("model does not match the surface's model");
    const GeometryField geom = compute_geometry(s);
    for (double l : geom.lambda)
        if (!(l > 0.0)) throw ValidationError("flow_step requires a convex state");
    DiscreteHypersurface out = flow_step_cached(s, geom, dt);
    try {
        compute_geometry(out);
    } catch (const DegenerateGeometry& e) {
        throw StepRejected(std::string("post-step state is degenerate: ") + e.what());
    }
    return out;
}

int polar_filter_modes(const DiscreteHypersurface& s, int row) {
    const GraphGrid& gg = GraphGrid::get(s.n_theta, s.n_phi);
    return std::max(2, static_cast<int>(std::floor(2.0 * gg.sin_t[row] / gg.dth)));
}

void apply_polar_filter(DiscreteHypersurface& s) {
    if (s.kind != SurfaceKind::RadialGraph) return;
    const int nt = s.n_theta, np = s.n_phi;
    const GraphGrid& gg = GraphGrid::get(nt, np);
    parallel_for(static_cast<std::size_t>(nt - 2), [&](std::size_t k) {
        const int i = static_cast<int>(k) + 1;
        const int m_keep = polar_filter_modes(s, i);
        if (2 * m_keep >= np) return;  // kept band already covers the grid
        double* row = s.radial.data() + static_cast<std::size_t>(i) * np;
        // Real DFT onto modes 0..m_keep; cos(2 pi m j / np) is the cached
        // phi table at index (m j) mod np.
        std::vector<double> am(m_keep + 1, 0.0), bm(m_keep + 1, 0.0);
        for (int m = 0; m <= m_keep; ++m)
            for (int j = 0; j < np; ++j) {
                const int idx = (m * j) % np;
                am[m] += row[j] * gg.cos_p[idx];
                bm[m] += row[j] * gg.sin_p[idx];
            }
        for (int j = 0; j < np; ++j) {
            double acc = am[0];
            for (int m = 1; m <= m_keep; ++m) {
                const int idx = (m * j) % np;
                acc += 2.0 * (am[m] * gg.cos_p[idx] + bm[m] * gg.sin_p[idx]);
            }
            row[j] = acc / np;
        }
    });
}

double cfl_dt(const DiscreteHypersurface& s, const GeometryField& geom,
              const FlowConfig& cfg) {
    double sp;
    if (s.is_curve() || !cfg.polar_filter) {
        sp = min_vertex_spacing(s, geom);
    } else {
        sp = std::numeric_limits<double>::infinity();
        const int nt = s.n_theta, np = s.n_phi;
        const GraphGrid& gg = GraphGrid::get(nt, np);
        for (int i = 1; i < nt - 1; ++i) {
            const int m_keep = polar_filter_modes(s, i);
            for (int j = 0; j < np; ++j) {
                const std::size_t v = static_cast<std::size_t>(i) * np + j;
                sp = std::min(sp, std::sqrt(geom.g[3 * v]) * gg.dth);
                const double sg = std::sqrt(geom.g[3 * v + 2]);
                // Highest kept mode m has diffusion eigenvalue m^2/G; treating
                // 2 sqrt(G)/m as the spacing keeps the explicit-Euler stability
                // factor dt m^2/G at 4c, safely below the threshold of 2.
                sp = std::min(sp, 2 * m_keep >= np ? sg * gg.dph : 2.0 * sg / m_keep);
            }
        }
    }
    double lam = 0.0;
    for (double l : geom.lambda) lam = std::max(lam, std::abs(l));
    const double dt = cfg.cfl * sp * sp / std::max(1.0, lam * lam * sp * sp);
    if (dt < 1e-14) throw DtUnderflow("cfl step fell below 1e-14");
    return dt;
}

DiscreteHypersurface redistribute(const DiscreteHypersurface& s) {
    if (!s.is_curve()) throw ValidationError("redistribute applies to curves only");
    const std::size_t n = s.vertex_count();
    std::vector<Eigen::Vector3d> p(n);
    for (std::size_t k = 0; k < n; ++k)
        p[k] = s.kind == SurfaceKind::CurveFlat
                   ? Eigen::Vector3d{s.pts2[k].x(), s.pts2[k].y(), 0.0}
                   : s.pts3[k];

    // Cumulative chord-length knots u[0..n]; u[n] closes the loop.
    std::vector<double> u(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) u[k + 1] = u[k] + (p[(k + 1) % n] - p[k]).norm();
    const double L = u[n];

    auto knot = [&](long k) -> double {
        if (k < 0) return u[k + n] - L;
        if (k > static_cast<long>(n)) return u[k - n] + L;
        return u[k];
    };
    auto point = [&](long k) -> Eigen::Vector3d { return p[((k % n) + n) % n]; };

    DiscreteHypersurface out = s;
    std::size_t seg = 0;
    for (std::size_t m = 0; m < n; ++m) {
        const double tau = L * m / n;
        while (seg + 1 < n && u[seg + 1] <= tau) ++seg;
        const long k = static_cast<long>(seg);
        const Eigen::Vector3d q =
            catmull_rom(point(k - 1), point(k), point(k + 1), point(k + 2), knot(k - 1),
                        knot(k), knot(k + 1), knot(k + 2), tau);
        if (s.kind == SurfaceKind::CurveFlat)
            out.pts2[m] = q.head<2>();
        else
            out.pts3[m] = q * (s.base_radius() / q.norm());
    }
    return out;
}

Trajectory run_flow(const FlowConfig& cfg) {
    cfg.validate();
    DiscreteHypersurface s = make_initial(cfg);
    GeometryField geom = compute_geometry(s);

    Trajectory traj;
    traj.initial_H_max = *std::max_element(geom.H.begin(), geom.H.end());
    traj.initial_volume = total_volume(s, geom);
    const double h_stop = cfg.h_stop_factor * traj.initial_H_max;
    const double vol_floor = cfg.min_volume_fraction * traj.initial_volume;

    double t = 0.0, last_dt = 0.0;
    auto record = [&](double dt_used) {
        Snapshot snap;
        snap.t = t;
        snap.dt = dt_used;
        snap.surface = s;
        snap.row = diagnostics_row(t, dt_used, s, geom, s.model, cfg.deltas, cfg.alpha);
        if (cfg.keep_geometry) snap.geom = geom;
        traj.snapshots.push_back(std::move(snap));
    };
    record(0.0);

    StopReason stop = StopReason::None;
    while (stop == StopReason::None) {
        double dt;
        try {
            dt = cfl_dt(s, geom, cfg);
        } catch (const DtUnderflow&) {
            stop = StopReason::DtUnderflow;
            break;
        }

        DiscreteHypersurface next;
        GeometryField gnext;
        int halvings = 0;
        bool respaced = false;
        for (;;) {
            try {
                respaced = false;
                next = flow_step_cached(s, geom, dt);
                if (next.is_curve()) {
                    // Respace lazily: every call costs a little enclosed
                    // volume, so only act when spacing has actually drifted.
                    if (cfg.redistribute && spacing_ratio(next) > 1.05) {
                        next = redistribute(next);
                        respaced = true;
                    }
                } else if (cfg.polar_filter) {
                    apply_polar_filter(next);
                }
                gnext = compute_geometry(next);
                break;
            } catch (const StepRejected&) {
            } catch (const DegenerateGeometry&) {
            }
            if (++halvings > 20)
                throw FlowStalled("step rejected after 20 dt halvings at t = " +
                                  std::to_string(t));
            dt *= 0.5;
            if (dt < 1e-14) {
                stop = StopReason::DtUnderflow;
                break;
            }
        }
        if (stop != StopReason::None) break;

        t += dt;
        last_dt = dt;
        if (respaced) traj.redistribution_times.push_back(t);
        s = std::move(next);
        geom = std::move(gnext);
        ++traj.steps;

        const double h_max = *std::max_element(geom.H.begin(), geom.H.end());
        const double vol = total_volume(s, geom);
        if (h_max >= h_stop)
            stop = StopReason::HStop;
        else if (vol <= vol_floor)
            stop = StopReason::MinVolume;
        if (stop != StopReason::None || traj.steps % cfg.cadence == 0) record(dt);
    }
    traj.stop = stop;
    if (traj.snapshots.back().t < t) record(last_dt);

    // First-order blow-up estimate: remaining volume over its current decay
    // rate dV/dt = -integral of ||H||^2.
    std::vector<double> h2(geom.count);
    for (std::size_t v = 0; v < geom.count; ++v) h2[v] = geom.H[v] * geom.H[v];
    const double decay = integrate(s, geom, h2);
    traj.T_hat = t + (decay > 0.0 ? total_volume(s, geom) / decay : 0.0);
    return traj;
}

}  // namespace mcflab
