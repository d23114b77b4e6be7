#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "speclab/types.hpp"
#include "speclab/weighted.hpp"

namespace speclab {

enum class SurfaceKind {
    SphereCompact,          // unit sphere with surface Lebesgue measure
    Paraboloid,             // xi_N = |xi'|^2, base Lebesgue measure
    Cone,                   // xi_N = +-|xi'|, measure dxi'/(2|xi'|) per sheet
    TwoSheetedHyperboloid,  // xi_N = +-sqrt(1+|xi'|^2), dxi'/(2 sqrt(1+|xi'|^2))
    SphereQuadratic         // unit sphere with measure d(sigma)/2
};

inline const char* to_string(SurfaceKind k) {
    switch (k) {
        case SurfaceKind::SphereCompact: return "sphere_compact";
        case SurfaceKind::Paraboloid: return "paraboloid";
        case SurfaceKind::Cone: return "cone";
        case SurfaceKind::TwoSheetedHyperboloid: return "two_sheeted_hyperboloid";
        case SurfaceKind::SphereQuadratic: return "sphere_quadratic";
    }
    return "?";
}

inline bool is_compact_kind(SurfaceKind k) {
    return k == SurfaceKind::SphereCompact || k == SurfaceKind::SphereQuadratic;
}

struct SurfaceSpec {
    SurfaceKind kind = SurfaceKind::SphereCompact;
    int ambient_dim = 2;             // N
    double truncation_radius = 0.0;  // base truncation for non-compact kinds
    int resolution = 64;             // nodes per parameter direction

    void validate() const {
        if (ambient_dim < 2)
            throw validation_error("SurfaceSpec: ambient_dim >= 2 required");
        if (resolution < 8)
            throw validation_error("SurfaceSpec: resolution >= 8 required");
        if (!is_compact_kind(kind) && !(truncation_radius > 0.0))
            throw validation_error(
                "SurfaceSpec: truncation_radius > 0 required for non-compact "
                "kinds");
    }
};

// Quadrature for one surface. `space.weights` carries quadrature weight times
// the measure factor of the given kind; `sigma_weights` carries the plain
// surface-Lebesgue quadrature of the same nodes; `normal_gradient` is
// |grad R| per node for the quadratic kinds.
struct SurfaceGrid {
    WeightedSpace space;
    Vec sigma_weights;
    Vec normal_gradient;  // empty for compact kinds
    SurfaceSpec spec;

    double total_measure() const { return space.weights.sum(); }
};

namespace detail {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration.
inline void gauss_legendre(int n, Vec& x, Vec& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[n - 1 - i] = t;
        w[n - 1 - i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}

// midpoint grid on [-K,K]^m, optionally skipping points with |xi'| < r_min
inline void base_grid(int m, double K, int res, double r_min,
                      std::vector<Eigen::VectorXd>& pts,
                      std::vector<double>& vols) {
    const double h = 2.0 * K / res;
    const double vol = std::pow(h, m);
    std::vector<int> idx(m, 0);
    while (true) {
        Eigen::VectorXd p(m);
        for (int d = 0; d < m; ++d) p[d] = -K + (idx[d] + 0.5) * h;
        if (p.norm() >= r_min) {
            pts.push_back(p);
            vols.push_back(vol);
        }
        int d = 0;
        while (d < m && ++idx[d] == res) idx[d++] = 0;
        if (d == m) break;
    }
}

}  // namespace detail

inline SurfaceGrid build_surface(const SurfaceSpec& spec) {
    spec.validate();
    const int N = spec.ambient_dim;
    SurfaceGrid g;
    g.spec = spec;

    if (is_compact_kind(spec.kind)) {
        const double measure_factor =
            spec.kind == SurfaceKind::SphereQuadratic ? 0.5 : 1.0;
        if (N == 2) {
            const int n = spec.resolution;
            g.space.points.resize(n, 2);
            g.space.weights.resize(n);
            g.sigma_weights.resize(n);
            for (int i = 0; i < n; ++i) {
                double th = 2.0 * pi * i / n;
                g.space.points(i, 0) = std::cos(th);
                g.space.points(i, 1) = std::sin(th);
                g.sigma_weights[i] = 2.0 * pi / n;
                g.space.weights[i] = measure_factor * g.sigma_weights[i];
            }
        } else if (N == 3) {
            // product rule: Gauss-Legendre in cos(theta) x equispaced azimuth
            const int np = spec.resolution, na = 2 * spec.resolution;
            Vec u, wu;
            detail::gauss_legendre(np, u, wu);
            const int n = np * na;
            g.space.points.resize(n, 3);
            g.space.weights.resize(n);
            g.sigma_weights.resize(n);
            int row = 0;
            for (int i = 0; i < np; ++i) {
                double s = std::sqrt(std::max(0.0, 1.0 - u[i] * u[i]));
                for (int j = 0; j < na; ++j, ++row) {
                    double phi = 2.0 * pi * j / na;
                    g.space.points(row, 0) = s * std::cos(phi);
                    g.space.points(row, 1) = s * std::sin(phi);
                    g.space.points(row, 2) = u[i];
                    g.sigma_weights[row] = wu[i] * 2.0 * pi / na;
                    g.space.weights[row] =
                        measure_factor * g.sigma_weights[row];
                }
            }
        } else {
            throw validation_error("build_surface: sphere implemented for N in {2,3}");
        }
        if (spec.kind == SurfaceKind::SphereQuadratic) {
            g.normal_gradient = Vec::Constant(g.space.size(), 2.0);
        }
        return g;
    }

    // quadratic graph kinds over a truncated base in R^{N-1}
    const int m = N - 1;
    const double K = spec.truncation_radius;
    double r_min = 0.0;
    if (spec.kind == SurfaceKind::Cone) r_min = 0.05 * K / std::sqrt(2.0);
    // (excises |xi| < 0.05 K around the vertex; |xi| = sqrt(2)|xi'| on the cone)

    std::vector<Eigen::VectorXd> base;
    std::vector<double> vols;
    detail::base_grid(m, K, spec.resolution, r_min, base, vols);

    const bool two_sheets = spec.kind != SurfaceKind::Paraboloid;
    const int n = static_cast<int>(base.size()) * (two_sheets ? 2 : 1);
    g.space.points.resize(n, N);
    g.space.weights.resize(n);
    g.sigma_weights.resize(n);
    g.normal_gradient.resize(n);

    int row = 0;
    for (std::size_t b = 0; b < base.size(); ++b) {
        const Eigen::VectorXd& xp = base[b];
        const double r2 = xp.squaredNorm();
        const double vol = vols[b];
        for (int sheet = 0; sheet < (two_sheets ? 2 : 1); ++sheet, ++row) {
            double sgn = sheet == 0 ? 1.0 : -1.0;
            double height, mu_w, sigma_w, ngrad;
            switch (spec.kind) {
                case SurfaceKind::Paraboloid:
                    height = r2;
                    mu_w = vol;  // (1+4|xi'|^2)^{-1/2} dsigma = dxi'
                    sigma_w = vol * std::sqrt(1.0 + 4.0 * r2);
                    ngrad = std::sqrt(1.0 + 4.0 * r2);
                    break;
                case SurfaceKind::Cone: {
                    double r = std::sqrt(r2);
                    height = sgn * r;
                    mu_w = vol / (2.0 * r);  // (2|xi|)^{-1} dsigma
                    sigma_w = vol * std::sqrt(2.0);
                    ngrad = 2.0 * std::sqrt(2.0) * r;
                    break;
                }
                case SurfaceKind::TwoSheetedHyperboloid: {
                    double s = std::sqrt(1.0 + r2);
                    height = sgn * s;
                    mu_w = vol / (2.0 * s);
                    sigma_w = vol * std::sqrt((1.0 + 2.0 * r2) / (1.0 + r2));
                    ngrad = 2.0 * std::sqrt(1.0 + 2.0 * r2);
                    break;
                }
                default:
                    throw validation_error("build_surface: unsupported kind");
            }
            g.space.points.block(row, 0, 1, m) = xp.transpose();
            g.space.points(row, m) = height;
            g.space.weights[row] = mu_w;
            g.sigma_weights[row] = sigma_w;
            g.normal_gradient[row] = ngrad;
        }
    }
    return g;
}

// Uniform box grid in R^dim with midpoint nodes; per-axis half-widths allow
// the anisotropic boxes used by cap experiments.
struct SpatialGrid {
    Eigen::VectorXd half_widths;  // per axis
    Eigen::VectorXi points_per_axis;

    SpatialGrid() = default;
    SpatialGrid(double L, int n, int dim) {
        half_widths = Eigen::VectorXd::Constant(dim, L);
        points_per_axis = Eigen::VectorXi::Constant(dim, n);
    }
    SpatialGrid(const Eigen::VectorXd& Ls, const Eigen::VectorXi& ns)
        : half_widths(Ls), points_per_axis(ns) {
        if (Ls.size() != ns.size())
            throw validation_error("SpatialGrid: dimension mismatch");
    }

    int dim() const { return static_cast<int>(half_widths.size()); }
    Eigen::Index size() const {
        Eigen::Index n = 1;
        for (int d = 0; d < dim(); ++d) n *= points_per_axis[d];
        return n;
    }
    double cell_volume() const {
        double v = 1.0;
        for (int d = 0; d < dim(); ++d)
            v *= 2.0 * half_widths[d] / points_per_axis[d];
        return v;
    }

    WeightedSpace space() const {
        WeightedSpace s;
        const Eigen::Index n = size();
        s.points.resize(n, dim());
        s.weights = Vec::Constant(n, cell_volume());
        std::vector<int> idx(dim(), 0);
        for (Eigen::Index row = 0; row < n; ++row) {
            for (int d = 0; d < dim(); ++d) {
                double h = 2.0 * half_widths[d] / points_per_axis[d];
                s.points(row, d) = -half_widths[d] + (idx[d] + 0.5) * h;
            }
            int d = 0;
            while (d < dim() && ++idx[d] == points_per_axis[d]) idx[d++] = 0;
        }
        return s;
    }
};

// Phase matrix exp(i X Xi^T) scaled by c; shared by the extension operator
// and the Fourier restriction maps.
inline CMat phase_matrix(const Mat& X, const Mat& Xi, double scale,
                         double sign = 1.0) {
    Mat phases = sign * (X * Xi.transpose());
    return phases.unaryExpr(
        [scale](double p) { return scale * std::polar(1.0, p); });
}

// Extension operator from L^2(S, dmu) to L^2(grid): kernel
// (2 pi)^{-N/2} exp(i xi . x); all quadrature weights stay in the spaces.
inline WeightedOperator extension_matrix(const SurfaceGrid& surface,
                                         const SpatialGrid& grid) {
    const int N = surface.spec.ambient_dim;
    if (grid.dim() != N)
        throw validation_error("extension_matrix: grid dimension != N");
    WeightedSpace xs = grid.space();
    CMat kernel = phase_matrix(xs.points, surface.space.points,
                               std::pow(2.0 * pi, -N / 2.0));
    return {std::move(kernel), surface.space, xs};
}

// T_S = E_S E_S^*; kernel(x,x') = (2 pi)^{-N} * FT of the surface measure at
// x' - x, realized by composing the extension matrix with its adjoint.
inline WeightedOperator ts_operator(const SurfaceGrid& surface,
                                    const SpatialGrid& grid) {
    WeightedOperator E = extension_matrix(surface, grid);
    return compose(E, E.adjoint());
}

// Quadrature of int_S exp(-i k . omega) dsigma(omega) (surface Lebesgue).
inline cplx surface_measure_ft(const SurfaceGrid& surface,
                               const Eigen::VectorXd& k) {
    if (k.size() != surface.spec.ambient_dim)
        throw validation_error("surface_measure_ft: wrong k dimension");
    cplx acc{0.0, 0.0};
    for (Eigen::Index j = 0; j < surface.space.size(); ++j) {
        double phase = -k.dot(surface.space.points.row(j));
        acc += surface.sigma_weights[j] * std::polar(1.0, phase);
    }
    return acc;
}

// Indicator of the spherical cap of angular radius delta about the first
// coordinate pole, normalized to unit L^2(S, dsigma) norm by the quadrature.
inline CVec knapp_cap(const SurfaceGrid& surface, double delta) {
    if (surface.spec.kind != SurfaceKind::SphereCompact)
        throw validation_error("knapp_cap: compact sphere kind required");
    if (!(delta > 0.0) || delta > pi)
        throw validation_error("knapp_cap: need 0 < delta <= pi");
    const int N = surface.spec.ambient_dim;
    double spacing = (N == 2) ? 2.0 * pi / surface.spec.resolution
                              : pi / surface.spec.resolution;
    if (delta < 4.0 * spacing)
        throw validation_error("knapp_cap: delta under-resolved by the grid");

    const Eigen::Index n = surface.space.size();
    CVec f = CVec::Zero(n);
    double cap_measure = 0.0;
    const double cd = std::cos(delta);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (surface.space.points(j, 0) >= cd) cap_measure += surface.sigma_weights[j];
    }
    if (cap_measure <= 0.0)
        throw validation_error("knapp_cap: empty cap at this resolution");
    const double val = 1.0 / std::sqrt(cap_measure);
    for (Eigen::Index j = 0; j < n; ++j)
        if (surface.space.points(j, 0) >= cd) f[j] = val;
    return f;
}

// L^p norm of samples on a weighted space (p >= 1 or inf).
inline double lp_norm(const CVec& f, const Vec& weights, double p) {
    if (std::isinf(p)) return f.cwiseAbs().maxCoeff();
    if (!(p > 0)) throw validation_error("lp_norm: p > 0 required");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i)
        acc += std::pow(std::abs(f[i]), p) * weights[i];
    return std::pow(acc, 1.0 / p);
}

}  // namespace speclab
