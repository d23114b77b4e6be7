#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Cholesky>

#include "speclab/fit.hpp"
#include "speclab/random.hpp"
#include "speclab/surface.hpp"
#include "speclab/weighted.hpp"

namespace speclab {

// ||W1 T W2||_{S^alpha} with W1, W2 acting by multiplication.
inline double sandwich_norm(const CVec& W1, const WeightedOperator& T,
                            const CVec& W2, double alpha) {
    return schatten_norm(multiply_left(W1, multiply_right(T, W2)), alpha);
}

// Singular values of W1 (E E^*) W2 computed through the factorization:
// with A = Dc^{1/2} W1 K_E Dmu^{1/2} and B = A-like on the right, the
// nonzero singular values of AB are sqrt(eig(B B^H A^H A)), an ns x ns
// problem instead of an nx x nx one.
inline Vec sandwich_singular_values_factored(const CVec& W1,
                                             const WeightedOperator& E,
                                             const CVec& W2) {
    const Vec& wmu = E.domain.weights;
    const Vec& wx = E.codomain.weights;
    CVec sc = wx.cwiseSqrt().cast<cplx>();
    CMat A = sc.cwiseProduct(W1).asDiagonal() * E.kernel *
             wmu.cwiseSqrt().cast<cplx>().asDiagonal();
    CMat Bh = sc.cwiseProduct(W2.conjugate()).asDiagonal() * E.kernel *
              wmu.cwiseSqrt().cast<cplx>().asDiagonal();
    // AB = Q_A (R_A R_B^H) Q_B^H with isometric Q's, so the singular values
    // are those of the small product R_A R_B^H.
    const Eigen::Index ns = A.cols();
    Eigen::HouseholderQR<CMat> qa(A), qb(Bh);
    CMat RA = qa.matrixQR().topRows(ns).triangularView<Eigen::Upper>();
    CMat RB = qb.matrixQR().topRows(ns).triangularView<Eigen::Upper>();
    return singular_values_dense(CMat(RA * RB.adjoint()));
}

// Admissible exponent range and Schatten index for the sandwiched extension
// operator, by surface kind.
inline double restriction_schatten_exponent(SurfaceKind kind, int N, double q) {
    auto fail = [&](const std::string& c) {
        throw validation_error("restriction: inadmissible q=" +
                               std::to_string(q) + " for " + to_string(kind) +
                               ", N=" + std::to_string(N) + " (" + c + ")");
    };
    switch (kind) {
        case SurfaceKind::SphereCompact:
            if (!(1.0 <= q && q <= (N + 1) / 2.0))
                fail("compact case needs 1 <= q <= (N+1)/2");
            return (N - 1) * q / (N - q);
        case SurfaceKind::Paraboloid:
            if (std::abs(q - (N + 1) / 2.0) > 1e-12)
                fail("paraboloid needs q = (N+1)/2");
            return 2.0 * q;
        case SurfaceKind::Cone:
            if (std::abs(q - N / 2.0) > 1e-12) fail("cone needs q = N/2");
            return 2.0 * q;
        case SurfaceKind::SphereQuadratic:
            if (!(1.0 <= q && q <= (N + 1) / 2.0))
                fail("quadratic sphere needs 1 <= q <= (N+1)/2");
            return 2.0 * q;
        case SurfaceKind::TwoSheetedHyperboloid:
            if (N >= 3) {
                if (!(N / 2.0 <= q && q <= (N + 1) / 2.0))
                    fail("hyperboloid needs N/2 <= q <= (N+1)/2");
            } else {
                if (!(1.0 < q && q <= 1.5))
                    fail("hyperboloid in N=2 needs 1 < q <= 3/2");
            }
            return 2.0 * q;
    }
    throw validation_error("restriction: unknown kind");
}

struct RestrictionLevel {
    int surface_resolution = 0;
    int grid_points_per_axis = 0;
    double max_ratio = 0.0;
    double mean_ratio = 0.0;
};

struct RestrictionReport {
    double q = 0.0;
    double schatten_exponent = 0.0;
    std::vector<RestrictionLevel> levels;
    double relative_change = 0.0;  // of max ratio between the last two levels
    bool bounded = false;
};

// Random smooth witness on a box: band-limited field under a bump envelope.
inline CVec sample_witness(Rng& rng, const WeightedSpace& xs, double box_L,
                           double kmax = 2.5) {
    RandomField f =
        RandomField::make(rng, static_cast<int>(xs.points.cols()), 18, kmax,
                          0.8 * box_L);
    CVec w(xs.size());
    for (Eigen::Index i = 0; i < xs.size(); ++i)
        w[i] = f(xs.points.row(i).transpose());
    return w;
}

// Sandwiched-extension ratio study across a refinement ladder. The witnesses
// are fixed continuum fields, so levels remain comparable.
inline RestrictionReport verify_restriction(SurfaceSpec spec, double q,
                                            const SpatialGrid& grid, int trials,
                                            std::uint64_t seed, int levels = 2) {
    const int N = spec.ambient_dim;
    RestrictionReport rep;
    rep.q = q;
    rep.schatten_exponent = restriction_schatten_exponent(spec.kind, N, q);
    const double box_L = grid.half_widths.maxCoeff();

    for (int lvl = 0; lvl < levels; ++lvl) {
        const int scale = 1 << lvl;
        SurfaceSpec s = spec;
        s.resolution = spec.resolution * scale;
        SurfaceGrid surf = build_surface(s);
        SpatialGrid g(box_L, grid.points_per_axis[0] * scale, N);
        WeightedOperator E = extension_matrix(surf, g);

        RestrictionLevel L;
        L.surface_resolution = s.resolution;
        L.grid_points_per_axis = g.points_per_axis[0];
        double acc = 0.0;
        for (int t = 0; t < trials; ++t) {
            Rng tr = Rng(seed).fork(t);
            CVec W1 = sample_witness(tr, E.codomain, box_L);
            CVec W2 = sample_witness(tr, E.codomain, box_L);
            Vec sv = sandwich_singular_values_factored(W1, E, W2);
            double num = schatten_from_values(sv, rep.schatten_exponent);
            double den = lp_norm(W1, E.codomain.weights, 2.0 * q) *
                         lp_norm(W2, E.codomain.weights, 2.0 * q);
            double ratio = num / den;
            L.max_ratio = std::max(L.max_ratio, ratio);
            acc += ratio;
        }
        L.mean_ratio = acc / trials;
        rep.levels.push_back(L);
    }
    const auto& a = rep.levels[rep.levels.size() - 2];
    const auto& b = rep.levels.back();
    rep.relative_change = std::abs(b.max_ratio - a.max_ratio) / a.max_ratio;
    rep.bounded = rep.relative_change < 0.10;
    return rep;
}

struct OrthonormalLhs {
    double lhs = 0.0;        // || sum nu_j |E f_j|^2 ||_{L^{q'}}
    double rhs = 0.0;        // (sum |nu_j|^{alpha'})^{1/alpha'}
    double alpha_prime = 0.0;
};

inline OrthonormalLhs orthonormal_lhs(const CMat& system, const CVec& nu,
                                      const WeightedOperator& E,
                                      double qprime) {
    if (system.rows() != E.domain.size() || nu.size() != system.cols())
        throw validation_error("orthonormal_lhs: shape mismatch");
    if (gram_residual(system, E.domain) > 1e-8)
        throw validation_error("orthonormal_lhs: system is not orthonormal");
    const int N = E.domain.dim();
    const double q = qprime / (qprime - 1.0);
    OrthonormalLhs out;
    out.alpha_prime = (N - 1) * q / (N * (q - 1.0));
    CVec u = CVec::Zero(E.codomain.size());
    for (Eigen::Index j = 0; j < system.cols(); ++j)
        u += nu[j] * E.apply(system.col(j)).cwiseAbs2().cast<cplx>();
    out.lhs = lp_norm(u, E.codomain.weights, qprime);
    double acc = 0.0;
    for (Eigen::Index j = 0; j < nu.size(); ++j)
        acc += std::pow(std::abs(nu[j]), out.alpha_prime);
    out.rhs = std::pow(acc, 1.0 / out.alpha_prime);
    return out;
}

struct DualityReport {
    double max_identity_residual = 0.0;  // tr(WA gamma (WA)^*) vs int rho |W|^2
    double max_holder_violation = 0.0;   // positive part of lhs - rhs
};

// Trace duality on random draws: (a) the exact discrete identity
// tr(W A gamma (W A)^*) = sum_i rho_i |W_i|^2 w_i; (b) the Hoelder chain
// tr(gamma A^* |W|^2 A) <= ||gamma||_{S^{alpha'}} ||A^*|W|^2 A||_{S^alpha}.
inline DualityReport duality_check(const WeightedOperator& A, int trials,
                                   std::uint64_t seed, double alpha = 3.0) {
    DualityReport rep;
    const double alpha_conj = alpha / (alpha - 1.0);
    Rng rng(seed);
    const Eigen::Index nd = A.domain.size(), nc = A.codomain.size();
    for (int t = 0; t < trials; ++t) {
        Rng tr = rng.fork(t);
        int rank = 1 + int(tr.uniform() * 4);
        CMat cols(nd, rank);
        for (Eigen::Index i = 0; i < nd; ++i)
            for (int j = 0; j < rank; ++j) cols(i, j) = tr.cnormal();
        CMat F = orthonormalize(cols, A.domain);
        CVec nu(rank);
        for (int j = 0; j < rank; ++j) nu[j] = 0.1 + tr.uniform();
        DensityMatrix gamma =
            DensityMatrix::from_eigensystem(F, nu, A.domain, true);
        CVec W(nc);
        for (Eigen::Index i = 0; i < nc; ++i) W[i] = tr.cnormal();

        CVec rho = density_of(A, gamma);
        cplx lhs_a = (rho.cwiseProduct(W.cwiseAbs2().cast<cplx>())
                          .cwiseProduct(A.codomain.weights.cast<cplx>()))
                         .sum();
        WeightedOperator WA = multiply_left(W, A);
        cplx rhs_a = trace_weighted_c(
            compose(compose(WA, gamma.op), WA.adjoint()));
        double scale = std::abs(rhs_a) + 1.0;
        rep.max_identity_residual = std::max(
            rep.max_identity_residual, std::abs(lhs_a - rhs_a) / scale);

        WeightedOperator AW2A = compose(
            A.adjoint(), multiply_left(W.cwiseAbs2().cast<cplx>(), A));
        double tr_b = std::abs(trace_weighted_c(compose(gamma.op, AW2A)));
        double bound = schatten_norm(gamma.op, alpha_conj) *
                       schatten_norm(AW2A, alpha);
        rep.max_holder_violation =
            std::max(rep.max_holder_violation, (tr_b - bound) / bound);
    }
    return rep;
}

// Trial density with frequency-ball kernel: gamma(w,w') =
// int_{|k| <= 1/h} exp(i k.(w-w')) dk in closed form. Hermitian and PSD up to
// quadrature error.
inline DensityMatrix bandlimited_trial_density(const SurfaceGrid& surface,
                                               double h) {
    if (!(h > 0.0) || h > 1.0)
        throw validation_error("trial density: need 0 < h <= 1");
    if (surface.spec.kind != SurfaceKind::SphereCompact)
        throw validation_error("trial density: compact sphere kind required");
    const int N = surface.spec.ambient_dim;
    const double K = 1.0 / h;
    const Eigen::Index n = surface.space.size();
    CMat kernel(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        kernel(i, i) = (N == 2) ? pi * K * K : 4.0 * pi * K * K * K / 3.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double r =
                (surface.space.points.row(i) - surface.space.points.row(j))
                    .norm();
            double v;
            if (N == 2) {
                v = 2.0 * pi * K * std::cyl_bessel_j(1, K * r) / r;
            } else {
                v = 4.0 * pi * (std::sin(K * r) - K * r * std::cos(K * r)) /
                    (r * r * r);
            }
            kernel(i, j) = v;
            kernel(j, i) = v;
        }
    }
    return {WeightedOperator{std::move(kernel), surface.space, surface.space},
            true};
}

// rho of E gamma E^* evaluated without materializing the extension matrix:
// eigendecompose gamma and stream the phase matrix in row blocks.
inline Vec density_via_extension(const SurfaceGrid& surface,
                                 const WeightedSpace& xs,
                                 const DensityMatrix& gamma,
                                 double rank_tol = 1e-12) {
    const int N = surface.spec.ambient_dim;
    CMat G = unitarize(gamma.op);
    Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (G + G.adjoint()));
    const Vec& ev = es.eigenvalues();
    const double cap = ev.cwiseAbs().maxCoeff();
    std::vector<int> keep;
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (std::abs(ev[k]) > rank_tol * cap) keep.push_back(int(k));

    Vec nu(keep.size());
    CMat Un(surface.space.size(), keep.size());
    Vec inv_sqrt_w = surface.space.weights.cwiseSqrt().cwiseInverse();
    for (std::size_t c = 0; c < keep.size(); ++c) {
        nu[c] = ev[keep[c]];
        Un.col(c) =
            inv_sqrt_w.cast<cplx>().cwiseProduct(es.eigenvectors().col(keep[c]));
    }
    CMat S = surface.space.weights.cast<cplx>().asDiagonal() * Un;  // ns x r

    const double scale = std::pow(2.0 * pi, -N / 2.0);
    const Eigen::Index nx = xs.size(), block = 2048;
    Vec rho(nx);
    for (Eigen::Index start = 0; start < nx; start += block) {
        Eigen::Index len = std::min(block, nx - start);
        CMat P = phase_matrix(Mat(xs.points.middleRows(start, len)),
                              surface.space.points, scale);
        CMat M = P * S;  // len x r
        rho.segment(start, len) = M.cwiseAbs2() * nu;
    }
    return rho;
}

struct OptimalityRow {
    double h = 0.0;
    double rho_norm = 0.0;      // ||rho||_{L^{q'}}
    double schatten_r = 0.0;    // ||gamma_h||_{S^r}
    double ratio = 0.0;
    int grid_points_per_axis = 0;
};

struct OptimalityReport {
    std::vector<OptimalityRow> rows;
    SlopeFit fit_raw;
    SlopeFit fit_trimmed;
    bool trimmed = false;
    double expected_slope = 0.0;
    bool pass = false;
};

// Divergence-rate probe: ratio ||rho_{E gamma_h E^*}||_{q'} / ||gamma_h||_{S^r}
// against 1/h. The box scales like 1/h (reference box given at h = 1) since
// the density spreads over |x| ~ 1/h.
inline OptimalityReport optimality_slope(const SurfaceGrid& surface, double q,
                                         double r,
                                         const std::vector<double>& h_list,
                                         const SpatialGrid& reference_grid) {
    const int N = surface.spec.ambient_dim;
    const double qp = q / (q - 1.0);
    const double critical = (N - 1) * q / (N * (q - 1.0));
    if (r < critical - 1e-12)
        throw validation_error("optimality_slope: r below the critical index");
    if (h_list.size() < 4)
        throw validation_error("optimality_slope: need >= 4 h values");

    const double node_spacing = 2.0 * pi / surface.spec.resolution;
    OptimalityReport rep;
    rep.expected_slope = N / qp + 1.0 - (N + r - 1.0) / r;

    const double L0 = reference_grid.half_widths[0];
    const double dx =
        2.0 * L0 / reference_grid.points_per_axis[0];

    std::vector<double> inv_h, ratios;
    for (double h : h_list) {
        if (node_spacing > h / 4.0)
            throw validation_error(
                "optimality_slope: surface under-resolved for h=" +
                std::to_string(h));
        DensityMatrix gamma = bandlimited_trial_density(surface, h);
        Vec eigs = Eigen::SelfAdjointEigenSolver<CMat>(unitarize(gamma.op),
                                                       Eigen::EigenvaluesOnly)
                       .eigenvalues();
        double sr = 0.0;
        for (Eigen::Index k = 0; k < eigs.size(); ++k)
            sr += std::pow(std::abs(eigs[k]), r);
        sr = std::pow(sr, 1.0 / r);

        const double L = L0 / h;
        const int n = static_cast<int>(std::ceil(2.0 * L / dx));
        SpatialGrid grid(L, n, N);
        WeightedSpace xs = grid.space();
        Vec rho = density_via_extension(surface, xs, gamma);
        double rho_norm = lp_norm(rho.cast<cplx>(), xs.weights, qp);

        OptimalityRow row{h, rho_norm, sr, rho_norm / sr, n};
        rep.rows.push_back(row);
        inv_h.push_back(1.0 / h);
        ratios.push_back(row.ratio);
    }

    rep.fit_raw = slope_fit(inv_h, ratios);
    rep.fit_trimmed = rep.fit_raw;
    if (rep.fit_raw.max_residual > 0.05 && inv_h.size() > 4) {
        std::vector<double> xs2(inv_h.begin() + 1, inv_h.end() - 1);
        std::vector<double> ys2(ratios.begin() + 1, ratios.end() - 1);
        rep.fit_trimmed = slope_fit(xs2, ys2);
        rep.trimmed = true;
    }
    double tol = std::max(0.15 * std::abs(rep.expected_slope), 0.08);
    rep.pass = std::abs(rep.fit_trimmed.slope - rep.expected_slope) <= tol;
    return rep;
}

// Cap-witness ratios for the failure regime q > (N+1)/2: the rank-one density
// gamma = |f_delta><f_delta| has unit Schatten norm for every index, so the
// ratio reduces to ||E f_delta||^2_{L^{2q'}} on a coherence-tube box.
inline std::vector<double> knapp_witness_ratios(
    double q, const std::vector<double>& deltas, int resolution = 4096,
    int box_points = 96) {
    SurfaceGrid circle =
        build_surface({SurfaceKind::SphereCompact, 2, 0.0, resolution});
    const double qp = q / (q - 1.0);
    std::vector<double> out;
    for (double d : deltas) {
        Eigen::VectorXd L(2);
        L << 2.5 / (d * d), 2.5 / d;
        Eigen::VectorXi n(2);
        n << box_points, box_points;
        SpatialGrid grid(L, n);
        WeightedOperator E = extension_matrix(circle, grid);
        CVec Ef = E.apply(knapp_cap(circle, d));
        double v = lp_norm(Ef, E.codomain.weights, 2.0 * qp);
        out.push_back(v * v);
    }
    return out;
}

}  // namespace speclab
