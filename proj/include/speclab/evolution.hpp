#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "speclab/fit.hpp"
#include "speclab/random.hpp"
#include "speclab/restriction.hpp"
#include "speclab/weighted.hpp"

namespace speclab {

// Periodic grid standing in for R^d. Nodes x_j in [-L/2, L/2), dual
// frequencies (2 pi / L) {-n/2, ..., n/2 - 1} per axis. The unitary DFT is
// cached as a dense matrix; grids here are small enough that matrix
// application beats bookkeeping.
struct TorusGrid {
    int d = 1;
    double L = 2.0 * pi;
    int n = 64;

    TorusGrid() = default;
    TorusGrid(int d_, double L_, int n_) : d(d_), L(L_), n(n_) {
        if (n % 2 != 0) throw validation_error("TorusGrid: n must be even");
        if (!(L > 0.0)) throw validation_error("TorusGrid: L must be positive");
        build();
    }

    Eigen::Index size() const { return nodes.rows(); }
    double cell_volume() const { return std::pow(L / n, d); }

    WeightedSpace space() const {
        WeightedSpace s;
        s.points = nodes;
        s.weights = Vec::Constant(nodes.rows(), cell_volume());
        return s;
    }

    Mat nodes;      // n^d x d
    Mat freqs;      // n^d x d
    Vec freq_norm2; // |k|^2 per dual node
    CMat dft;       // unitary: (1/sqrt(n^d)) exp(-i k.x)

  private:
    void build() {
        Eigen::Index total = 1;
        for (int a = 0; a < d; ++a) total *= n;
        nodes.resize(total, d);
        freqs.resize(total, d);
        std::vector<int> idx(d, 0);
        const double h = L / n, dk = 2.0 * pi / L;
        for (Eigen::Index r = 0; r < total; ++r) {
            for (int a = 0; a < d; ++a) {
                nodes(r, a) = -L / 2.0 + idx[a] * h;
                freqs(r, a) = dk * (idx[a] - n / 2);
            }
            int a = 0;
            while (a < d && ++idx[a] == n) idx[a++] = 0;
        }
        freq_norm2 = freqs.rowwise().squaredNorm();
        dft = phase_matrix(freqs, nodes, 1.0 / std::sqrt(double(total)), -1.0);
    }
};

struct TimeGrid {
    double t0 = 0.0, t1 = 1.0;
    int m = 2;

    TimeGrid() = default;
    TimeGrid(double a, double b, int m_) : t0(a), t1(b), m(m_) {
        if (m < 2) throw validation_error("TimeGrid: m >= 2 required");
        if (!(t1 > t0)) throw validation_error("TimeGrid: empty interval");
    }
    double dt() const { return (t1 - t0) / (m - 1); }
    Vec times() const {
        Vec t(m);
        for (int i = 0; i < m; ++i) t[i] = t0 + i * dt();
        return t;
    }
    Vec trapezoid_weights() const {
        Vec w = Vec::Constant(m, dt());
        w[0] *= 0.5;
        w[m - 1] *= 0.5;
        return w;
    }
};

enum class PropagatorSymbol { schrodinger, half_wave, pseudo_relativistic };

inline Vec propagator_phase(const TorusGrid& g, PropagatorSymbol s) {
    switch (s) {
        case PropagatorSymbol::schrodinger:
            return -g.freq_norm2;
        case PropagatorSymbol::half_wave:
            return g.freq_norm2.cwiseSqrt();
        case PropagatorSymbol::pseudo_relativistic:
            return (g.freq_norm2.array() + 1.0).sqrt().matrix();
    }
    throw validation_error("propagate: unknown symbol");
}

// e^{i t phi(-i grad)} as a unitary Fourier multiplier.
inline CVec propagate(const TorusGrid& g, const CVec& f, double t,
                      PropagatorSymbol s) {
    Vec phi = propagator_phase(g, s);
    CVec fhat = g.dft * f;
    for (Eigen::Index k = 0; k < fhat.size(); ++k)
        fhat[k] *= std::polar(1.0, t * phi[k]);
    return g.dft.adjoint() * fhat;
}

// Batched column propagation reusing a precomputed Fourier block.
inline CMat propagate_cols_fourier(const TorusGrid& g, const CMat& cols_hat,
                                   double t, PropagatorSymbol s) {
    Vec phi = propagator_phase(g, s);
    CVec ph(phi.size());
    for (Eigen::Index k = 0; k < phi.size(); ++k)
        ph[k] = std::polar(1.0, t * phi[k]);
    return g.dft.adjoint() * (ph.asDiagonal() * cols_hat);
}

// L^p_t L^q_x norm of samples F (rows = time samples, cols = torus nodes),
// trapezoid in time.
inline double mixed_norm(const CMat& F, const TimeGrid& tg, const TorusGrid& g,
                         double p, double q) {
    if (F.rows() != tg.m || F.cols() != g.size())
        throw validation_error("mixed_norm: shape mismatch");
    if (!(p >= 1.0) || !(q >= 1.0))
        throw validation_error("mixed_norm: p, q >= 1 required");
    const double v = g.cell_volume();
    Vec xnorm(tg.m);
    for (int i = 0; i < tg.m; ++i) {
        if (std::isinf(q)) {
            xnorm[i] = F.row(i).cwiseAbs().maxCoeff();
        } else {
            double acc = 0.0;
            for (Eigen::Index j = 0; j < F.cols(); ++j)
                acc += std::pow(std::abs(F(i, j)), q) * v;
            xnorm[i] = std::pow(acc, 1.0 / q);
        }
    }
    if (std::isinf(p)) return xnorm.maxCoeff();
    Vec w = tg.trapezoid_weights();
    double acc = 0.0;
    for (int i = 0; i < tg.m; ++i) acc += w[i] * std::pow(xnorm[i], p);
    return std::pow(acc, 1.0 / p);
}

// Admissibility of density exponents: 2/p + d/q = d, 1 <= q < 1 + 2/(d-1).
inline void check_strichartz_exponents(int d, double p, double q) {
    if (!(p >= 1.0 && q >= 1.0))
        throw validation_error("strichartz: p, q >= 1 required");
    if (std::abs(2.0 / p + double(d) / q - double(d)) > 1e-9)
        throw validation_error("strichartz: scaling line 2/p + d/q = d violated");
    if (d >= 2 && !(q < 1.0 + 2.0 / (d - 1)))
        throw validation_error(
            "strichartz: q < 1 + 2/(d-1) required (orthonormal range)");
}

// Phase-space lattice of modulated gaussians, orthonormalized. The fill
// order interleaves space and frequency shifts so that prefixes of the
// family stay balanced.
inline CMat coherent_family(const TorusGrid& g, int count, double sigma,
                            double dx, double dk) {
    const int w = static_cast<int>(std::ceil(std::sqrt(double(count))));
    std::vector<std::pair<int, int>> order;
    for (int s = 0; s < 2 * w; ++s)
        for (int i = 0; i <= s; ++i) {
            int j = s - i;
            if (i < w && j < w) order.emplace_back(i, j);
        }
    CMat cols(g.size(), count);
    for (int c = 0; c < count; ++c) {
        auto [i, j] = order[c];
        double x0 = (i - (w - 1) / 2.0) * dx;
        double k0 = (j - (w - 1) / 2.0) * dk;
        for (Eigen::Index r = 0; r < g.size(); ++r) {
            double x = g.nodes(r, 0);
            cols(r, c) = std::polar(1.0, k0 * x) *
                         std::exp(-(x - x0) * (x - x0) / (2.0 * sigma * sigma));
        }
    }
    return orthonormalize(cols, g.space());
}

struct StrichartzRow {
    int M = 0;
    double lhs_unit = 0.0;    // nu = 1
    double rhs_unit = 0.0;
    double lhs_random = 0.0;  // random complex nu
    double rhs_random = 0.0;
};

struct StrichartzReport {
    int d = 0;
    double p = 0.0, q = 0.0;
    double schatten_dual = 0.0;  // 2q/(q+1)
    std::vector<StrichartzRow> rows;
    SlopeFit lhs_slope_unit;  // log LHS vs log M for nu = 1
    double max_over_min_ratio_unit = 0.0;
};

// Orthonormal-system space-time experiment for e^{it Laplacian} on a torus
// window sized so that no packet wraps around.
inline StrichartzReport strichartz_experiment(int d, double p, double q,
                                              int M_max, std::uint64_t seed) {
    check_strichartz_exponents(d, p, q);
    if (d != 1)
        throw validation_error(
            "strichartz_experiment: implemented for d = 1 (memory budget)");
    if (M_max < 1) throw validation_error("strichartz: M >= 1 required");

    const double sigma = 0.35;
    const double dx0 = 3.0 * sigma, dk0 = 2.0 / sigma;
    const int w = static_cast<int>(std::ceil(std::sqrt(double(M_max))));
    const double T = 2.0 * sigma * sigma;
    const double kmax = (w / 2.0) * dk0 + 4.0 / sigma;
    const double reach = 2.0 * kmax * T + (w / 2.0) * dx0 + 6.0 * sigma;
    const double Lbox = 2.0 * reach;
    int n = 64;
    while (pi * n / Lbox < 1.4 * kmax) n *= 2;

    TorusGrid g(1, Lbox, n);
    TimeGrid tg(-T, T, 96 + 1);
    CMat F = coherent_family(g, M_max, sigma, dx0, dk0);
    CMat Fhat = g.dft * F;

    // u_j(t,x) for all t once; densities accumulated per prefix M
    std::vector<int> Ms;
    for (int M = 1; M <= M_max; M *= 2) Ms.push_back(M);
    if (Ms.back() != M_max) Ms.push_back(M_max);

    Rng rng(seed);
    CVec nu_rand(M_max);
    for (int j = 0; j < M_max; ++j) nu_rand[j] = rng.cnormal();

    Mat density_unit = Mat::Zero(tg.m, g.size());
    Mat density_rand_re = Mat::Zero(tg.m, g.size());
    Mat density_rand_im = Mat::Zero(tg.m, g.size());

    StrichartzReport rep;
    rep.d = d;
    rep.p = p;
    rep.q = q;
    rep.schatten_dual = 2.0 * q / (q + 1.0);

    Vec times = tg.times();
    std::size_t mi = 0;
    int done = 0;
    for (int M : Ms) {
        for (int i = 0; i < tg.m; ++i) {
            CMat block = propagate_cols_fourier(
                g, Fhat.middleCols(done, M - done), times[i],
                PropagatorSymbol::schrodinger);
            Mat a2 = block.cwiseAbs2();
            density_unit.row(i) += a2.rowwise().sum().transpose();
            for (int j = done; j < M; ++j) {
                density_rand_re.row(i) +=
                    nu_rand[j].real() * a2.col(j - done).transpose();
                density_rand_im.row(i) +=
                    nu_rand[j].imag() * a2.col(j - done).transpose();
            }
        }
        done = M;

        StrichartzRow row;
        row.M = M;
        row.lhs_unit = mixed_norm(density_unit.cast<cplx>(), tg, g, p, q);
        row.rhs_unit = std::pow(double(M), (q + 1.0) / (2.0 * q));
        CMat dr = density_rand_re.cast<cplx>() +
                  cplx(0, 1) * density_rand_im.cast<cplx>();
        row.lhs_random = mixed_norm(dr, tg, g, p, q);
        double acc = 0.0;
        for (int j = 0; j < M; ++j)
            acc += std::pow(std::abs(nu_rand[j]), rep.schatten_dual);
        row.rhs_random = std::pow(acc, 1.0 / rep.schatten_dual);
        rep.rows.push_back(row);
        (void)mi;
    }

    std::vector<double> xs, ys;
    double rmin = 1e300, rmax = 0.0;
    for (const auto& r : rep.rows) {
        xs.push_back(double(r.M));
        ys.push_back(r.lhs_unit);
        double ratio = r.lhs_unit / r.rhs_unit;
        rmin = std::min(rmin, ratio);
        rmax = std::max(rmax, ratio);
    }
    if (xs.size() >= 3) rep.lhs_slope_unit = slope_fit(xs, ys);
    rep.max_over_min_ratio_unit = rmax / rmin;
    return rep;
}

// Space-time sandwich for the paraboloid in propagator form. The extension
// matrix maps the truncated dual lattice to space-time nodes with kernel
// (2 pi)^{-(d+1)/2} exp(i(-t|k|^2 + x.k)).
inline WeightedOperator spacetime_extension(const TorusGrid& g,
                                            const TimeGrid& tg) {
    const Eigen::Index nf = g.size(), nst = tg.m * g.size();
    WeightedSpace freq;
    freq.points = g.freqs;
    freq.weights = Vec::Constant(nf, std::pow(2.0 * pi / g.L, g.d));

    WeightedSpace st;
    st.points.resize(nst, g.d + 1);
    st.weights.resize(nst);
    Vec times = tg.times(), tw = tg.trapezoid_weights();
    for (int i = 0; i < tg.m; ++i)
        for (Eigen::Index a = 0; a < g.size(); ++a) {
            Eigen::Index r = i * g.size() + a;
            st.points(r, 0) = times[i];
            st.points.block(r, 1, 1, g.d) = g.nodes.row(a);
            st.weights[r] = tw[i] * g.cell_volume();
        }

    const double scale = std::pow(2.0 * pi, -(g.d + 1) / 2.0);
    CMat kernel(nst, nf);
    for (Eigen::Index r = 0; r < nst; ++r)
        for (Eigen::Index k = 0; k < nf; ++k) {
            double phase = -st.points(r, 0) * g.freq_norm2[k] +
                           st.points.row(r).tail(g.d).dot(g.freqs.row(k));
            kernel(r, k) = scale * std::polar(1.0, phase);
        }
    return {std::move(kernel), freq, st};
}

struct MixedSandwichResult {
    double schatten = 0.0;  // ||W1 T_S W2||_{S^q}
    double rhs = 0.0;       // ||W1||_{L^p L^q} ||W2||_{L^p L^q}
    double ratio = 0.0;
};

inline MixedSandwichResult mixed_sandwich(const CMat& W1, const CMat& W2,
                                          const TorusGrid& g,
                                          const TimeGrid& tg, double p,
                                          double q) {
    if (!(std::abs(2.0 / p + double(g.d) / q - 1.0) < 1e-9))
        throw validation_error("mixed_sandwich: needs 2/p + d/q = 1");
    if (!(q > g.d + 1))
        throw validation_error("mixed_sandwich: needs q > d + 1");
    WeightedOperator E = spacetime_extension(g, tg);
    auto flatten = [&](const CMat& W) {
        CVec v(tg.m * g.size());
        for (int i = 0; i < tg.m; ++i)
            v.segment(i * g.size(), g.size()) = W.row(i).transpose();
        return v;
    };
    Vec sv = sandwich_singular_values_factored(flatten(W1), E, flatten(W2));
    MixedSandwichResult out;
    out.schatten = schatten_from_values(sv, q);
    out.rhs = mixed_norm(W1, tg, g, p, q) * mixed_norm(W2, tg, g, p, q);
    out.ratio = out.schatten / out.rhs;
    return out;
}

// Density matrix on a torus kept in the Fourier frame: `ghat` is the
// unitarized matrix rotated by the DFT, so free evolution is an elementwise
// phase and Schatten norms are direct singular values.
struct TorusDensity {
    CMat ghat;

    static TorusDensity from_node_kernel(const TorusGrid& g, const CMat& K) {
        return {CMat(g.cell_volume() * (g.dft * K * g.dft.adjoint()))};
    }
    CMat node_kernel(const TorusGrid& g) const {
        return CMat((g.dft.adjoint() * ghat * g.dft) / g.cell_volume());
    }
    double trace() const { return ghat.trace().real(); }
    Vec density(const TorusGrid& g) const {
        CMat Kd = g.dft.adjoint() * ghat * g.dft;
        return Kd.diagonal().real() / g.cell_volume();
    }
    double schatten(double alpha) const {
        return schatten_from_values(singular_values_dense(ghat), alpha);
    }
    TorusDensity free_evolved(const TorusGrid& g, double t) const {
        CMat out(ghat.rows(), ghat.cols());
        for (Eigen::Index k = 0; k < ghat.rows(); ++k)
            for (Eigen::Index l = 0; l < ghat.cols(); ++l)
                out(k, l) = ghat(k, l) * std::polar(1.0, -t * (g.freq_norm2[k] -
                                                               g.freq_norm2[l]));
        return {std::move(out)};
    }
};

struct InhomogeneousReport {
    double lhs = 0.0;    // ||rho_gamma||_{L^p_t L^q_x}
    double rhs_a = 0.0;  // ||gamma_0||_{S^{2q/(q+1)}}
    double rhs_b = 0.0;  // || int e^{-is L} |R(s)| e^{is L} ds ||_{S^{2q/(q+1)}}
    double ratio = 0.0;  // lhs / (rhs_a + rhs_b)
    TorusDensity final_state;
};

// Solution of i d/dt gamma = [-Laplacian, gamma] + R(t), gamma(0) = gamma0,
// through the interaction picture: gamma~(t) = gamma0 - i int_0^t R~(s) ds,
// by trapezoid quadrature over the time samples.
inline InhomogeneousReport inhomogeneous_check(
    const TorusGrid& g, const TorusDensity& gamma0,
    const std::function<CMat(double)>& R_node, const TimeGrid& tg, double p,
    double q) {
    check_strichartz_exponents(g.d, p, q);
    const double alpha = 2.0 * q / (q + 1.0);
    Vec times = tg.times();

    // interaction-picture integrand at each sample, Fourier frame
    std::vector<CMat> integrand(tg.m);
    CMat absR_accum = CMat::Zero(g.size(), g.size());
    Vec tw = tg.trapezoid_weights();
    for (int i = 0; i < tg.m; ++i) {
        CMat Rhat = g.cell_volume() *
                    (g.dft * R_node(times[i]) * g.dft.adjoint());
        CMat tw_mat(g.size(), g.size());
        for (Eigen::Index k = 0; k < g.size(); ++k)
            for (Eigen::Index l = 0; l < g.size(); ++l)
                tw_mat(k, l) = Rhat(k, l) * std::polar(1.0, times[i] *
                                                                (g.freq_norm2[k] -
                                                                 g.freq_norm2[l]));
        integrand[i] = tw_mat;

        // |R(s)| via the Hermitian eigendecomposition, same conjugation
        Eigen::SelfAdjointEigenSolver<CMat> es(
            CMat(0.5 * (Rhat + Rhat.adjoint())));
        CMat absr = es.eigenvectors() *
                    es.eigenvalues().cwiseAbs().cast<cplx>().asDiagonal() *
                    es.eigenvectors().adjoint();
        for (Eigen::Index k = 0; k < g.size(); ++k)
            for (Eigen::Index l = 0; l < g.size(); ++l)
                absr(k, l) *= std::polar(1.0, times[i] * (g.freq_norm2[k] -
                                                          g.freq_norm2[l]));
        absR_accum += tw[i] * absr;
    }

    // cumulative trapezoid integrals anchored at t = 0 (the initial datum
    // lives there; windows may be two-sided)
    int i0 = -1;
    for (int i = 0; i < tg.m; ++i)
        if (std::abs(times[i]) < 1e-12) i0 = i;
    if (i0 < 0)
        throw validation_error("inhomogeneous_check: grid must contain t = 0");
    std::vector<CMat> prefix(tg.m);
    prefix[0] = CMat::Zero(g.size(), g.size());
    for (int i = 1; i < tg.m; ++i)
        prefix[i] = prefix[i - 1] + 0.5 * (times[i] - times[i - 1]) *
                                        (integrand[i] + integrand[i - 1]);

    InhomogeneousReport rep;
    CMat density(tg.m, g.size());
    TorusDensity state{gamma0.ghat};
    for (int i = 0; i < tg.m; ++i) {
        TorusDensity tilde{CMat(gamma0.ghat - iu * (prefix[i] - prefix[i0]))};
        state = tilde.free_evolved(g, times[i]);
        density.row(i) = state.density(g).cast<cplx>().transpose();
    }
    rep.final_state = state;
    rep.lhs = mixed_norm(density, tg, g, p, q);
    rep.rhs_a = gamma0.schatten(alpha);
    rep.rhs_b = schatten_from_values(singular_values_dense(absR_accum), alpha);
    rep.ratio = rep.lhs / (rep.rhs_a + rep.rhs_b + 1e-300);
    return rep;
}

}  // namespace speclab
