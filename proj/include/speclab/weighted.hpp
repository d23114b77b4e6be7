#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "speclab/types.hpp"

namespace speclab {

// Discrete weighted L^2 space: quadrature nodes in R^dim and strictly
// positive weights (quadrature weight times measure factor). The inner
// product is <f,g> = sum_i conj(f_i) g_i w_i.
struct WeightedSpace {
    Mat points;   // n x dim
    Vec weights;  // n, > 0

    Eigen::Index size() const { return weights.size(); }
    int dim() const { return static_cast<int>(points.cols()); }

    double total_weight() const { return weights.sum(); }

    cplx inner(const CVec& f, const CVec& g) const {
        return (f.conjugate().cwiseProduct(g).cwiseProduct(
                    weights.cast<cplx>()))
            .sum();
    }
    double norm(const CVec& f) const {
        return std::sqrt(f.cwiseAbs2().dot(weights));
    }

    static WeightedSpace uniform(Eigen::Index n, double w = 1.0) {
        WeightedSpace s;
        s.points = Mat::Zero(n, 1);
        for (Eigen::Index i = 0; i < n; ++i) s.points(i, 0) = double(i);
        s.weights = Vec::Constant(n, w);
        return s;
    }

    void validate() const {
        if (points.rows() != weights.size())
            throw validation_error("WeightedSpace: points/weights mismatch");
        if ((weights.array() <= 0.0).any())
            throw validation_error("WeightedSpace: weights must be positive");
    }
};

// Dense operator between two weighted spaces, stored as kernel samples in the
// node basis: (Af)_i = sum_j kernel(i,j) f_j w^dom_j. Both weight vectors ride
// along so that spectral quantities can be computed independently of how the
// quadrature represents the operator.
struct WeightedOperator {
    CMat kernel;  // codomain.size() x domain.size()
    WeightedSpace domain;
    WeightedSpace codomain;

    CVec apply(const CVec& f) const {
        return kernel * domain.weights.cast<cplx>().cwiseProduct(f);
    }

    WeightedOperator adjoint() const {
        return {kernel.adjoint(), codomain, domain};
    }

    bool is_square() const { return kernel.rows() == kernel.cols(); }
};

// A after B.
inline WeightedOperator compose(const WeightedOperator& A,
                                const WeightedOperator& B) {
    if (A.kernel.cols() != B.kernel.rows())
        throw validation_error("compose: dimension mismatch");
    return {A.kernel * A.domain.weights.cast<cplx>().asDiagonal() * B.kernel,
            B.domain, A.codomain};
}

// Multiplication operators act directly on the kernel samples:
// (W1 A)(i,j) = W1_i K_ij and (A W2)(i,j) = K_ij W2_j.
inline WeightedOperator multiply_left(const CVec& w, const WeightedOperator& A) {
    if (w.size() != A.kernel.rows())
        throw validation_error("multiply_left: sample length mismatch");
    return {w.asDiagonal() * A.kernel, A.domain, A.codomain};
}
inline WeightedOperator multiply_right(const WeightedOperator& A, const CVec& w) {
    if (w.size() != A.kernel.cols())
        throw validation_error("multiply_right: sample length mismatch");
    return {A.kernel * w.asDiagonal(), A.domain, A.codomain};
}

// Symmetric weight conjugation D_c^{1/2} K D_d^{1/2}; singular values of the
// result are those of the operator between the weighted spaces.
inline CMat unitarize(const WeightedOperator& A) {
    return A.codomain.weights.cwiseSqrt().cast<cplx>().asDiagonal() * A.kernel *
           A.domain.weights.cwiseSqrt().cast<cplx>().asDiagonal();
}

inline double trace_weighted(const WeightedOperator& A) {
    if (!A.is_square()) throw validation_error("trace: non-square");
    return (A.kernel.diagonal().real().cwiseProduct(A.domain.weights)).sum();
}
inline cplx trace_weighted_c(const WeightedOperator& A) {
    if (!A.is_square()) throw validation_error("trace: non-square");
    return (A.kernel.diagonal().cwiseProduct(A.domain.weights.cast<cplx>()))
        .sum();
}

struct SingularSpectrum {
    Vec values;  // non-negative, descending
};

// Singular values of a dense complex matrix, descending. Jacobi for small
// sizes, divide-and-conquer in the mid range, and the Gram route (eigenvalues
// of M^H M) for large matrices where full SVD is too slow; the Gram route
// loses accuracy only on singular values below ~1e-8 * largest, which is
// immaterial for Schatten sums.
inline Vec singular_values_dense(const CMat& M) {
    const Eigen::Index n = std::min(M.rows(), M.cols());
    Vec sv;
    if (n <= 96) {
        Eigen::JacobiSVD<CMat> svd(M);
        sv = svd.singularValues();
    } else if (n <= 512) {
        Eigen::BDCSVD<CMat> svd(M);
        sv = svd.singularValues();
    } else {
        CMat gram = (M.rows() >= M.cols()) ? CMat(M.adjoint() * M)
                                           : CMat(M * M.adjoint());
        Eigen::SelfAdjointEigenSolver<CMat> es(gram,
                                               Eigen::EigenvaluesOnly);
        sv = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().reverse();
    }
    std::sort(sv.data(), sv.data() + sv.size(), std::greater<double>());
    return sv;
}

inline SingularSpectrum singular_values(const WeightedOperator& A) {
    return {singular_values_dense(unitarize(A))};
}

inline double schatten_from_values(const Vec& sv, double alpha) {
    if (!(alpha > 0.0)) throw validation_error("schatten: alpha must be > 0");
    if (sv.size() == 0) return 0.0;
    if (std::isinf(alpha)) return sv.maxCoeff();
    const double smax = sv.maxCoeff();
    if (smax == 0.0) return 0.0;
    // factor out the largest value to avoid overflow for small alpha
    double acc = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        acc += std::pow(sv[i] / smax, alpha);
    return smax * std::pow(acc, 1.0 / alpha);
}

inline double schatten_norm(const WeightedOperator& A, double alpha) {
    return schatten_from_values(singular_values(A).values, alpha);
}

// Eigenvalues of the unitarized matrix via a general complex eigensolver
// (no Hermitian shortcut: sandwiched resolvents are non-normal).
inline CVec operator_eigenvalues(const WeightedOperator& A) {
    if (!A.is_square()) throw validation_error("eigenvalues: non-square");
    Eigen::ComplexEigenSolver<CMat> es(unitarize(A), false);
    return es.eigenvalues();
}

// Det_n(1 + A) = prod_k (1 + mu_k) exp(sum_{j=1}^{n-1} (-mu_k)^j / j) over the
// eigenvalues mu_k of the unitarized matrix. Vanishes exactly when -1 is an
// eigenvalue.
inline cplx regularized_det_from_eigs(const CVec& mu, int n) {
    if (n < 1) throw validation_error("regularized_det: n >= 1 required");
    cplx log_acc{0.0, 0.0};
    cplx prod{1.0, 0.0};
    for (Eigen::Index k = 0; k < mu.size(); ++k) {
        prod *= (cplx(1.0, 0.0) + mu[k]);
        cplx p{1.0, 0.0};
        for (int j = 1; j <= n - 1; ++j) {
            p *= -mu[k];
            log_acc += p / double(j);
        }
    }
    return prod * std::exp(log_acc);
}

inline cplx regularized_det(const WeightedOperator& A, int n) {
    return regularized_det_from_eigs(operator_eigenvalues(A), n);
}

// Finite-rank self-map of a weighted space.
struct DensityMatrix {
    WeightedOperator op;  // domain == codomain
    bool hermitian = false;

    static DensityMatrix from_rank_one(const CVec& u, const WeightedSpace& s) {
        WeightedOperator A{u * u.adjoint(), s, s};
        return {A, true};
    }

    // gamma = sum_j nu_j |f_j><f_j| for columns f_j orthonormal in s.
    static DensityMatrix from_eigensystem(const CMat& F, const CVec& nu,
                                          const WeightedSpace& s,
                                          bool hermitian) {
        CMat K = F * nu.asDiagonal() * F.adjoint();
        return {WeightedOperator{K, s, s}, hermitian};
    }

    double hermiticity_defect() const {
        CMat U = unitarize(op);
        double scale = U.norm();
        return scale == 0.0 ? 0.0 : (U - U.adjoint()).norm() / scale;
    }
};

// Density of A gamma A*: rho(x_i) = diagonal kernel entry at node i, so that
// sum_i rho_i w_i = tr(A gamma A*) and the duality
// sum_i rho_i V_i w_i = tr(gamma A* V A) holds exactly at the discrete level.
inline CVec density_of(const WeightedOperator& A, const DensityMatrix& gamma) {
    if (gamma.op.kernel.rows() != A.kernel.cols())
        throw validation_error("density_of: gamma must act on the domain of A");
    const Eigen::Index nx = A.kernel.rows();
    CVec rho(nx);
    if (gamma.hermitian) {
        // rho = sum_m nu_m |A u_m|^2 through the eigendecomposition of the
        // unitarized gamma; exact and avoids forming A gamma A*.
        CMat G = unitarize(gamma.op);
        Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (G + G.adjoint()));
        const Vec nu = es.eigenvalues();
        // back to node basis: columns of D^{-1/2} U
        CMat U = gamma.op.domain.weights.cwiseSqrt()
                     .cwiseInverse()
                     .cast<cplx>()
                     .asDiagonal() *
                 es.eigenvectors();
        CMat AU = A.kernel *
                  gamma.op.domain.weights.cast<cplx>().asDiagonal() * U;
        rho = (AU.cwiseAbs2() * nu).cast<cplx>();
    } else {
        CMat AD = A.kernel * A.domain.weights.cast<cplx>().asDiagonal();
        CMat GD = gamma.op.kernel * AD.adjoint();
        for (Eigen::Index i = 0; i < nx; ++i)
            rho[i] = (AD.row(i) * GD.col(i)).value();
    }
    return rho;
}

// Weighted Gram-Schmidt via QR in the half-weight frame. Throws when the
// columns are numerically rank deficient in the weighted inner product.
inline CMat orthonormalize(const CMat& columns, const WeightedSpace& space,
                           double cond_threshold = 1e10) {
    if (columns.rows() != space.size())
        throw validation_error("orthonormalize: wrong number of rows");
    CMat B = space.weights.cwiseSqrt().cast<cplx>().asDiagonal() * columns;
    {
        Eigen::JacobiSVD<CMat> svd(B);
        const Vec& sv = svd.singularValues();
        if (sv.size() == 0 || sv[sv.size() - 1] <= 0.0 ||
            sv[0] / sv[sv.size() - 1] > cond_threshold)
            throw validation_error(
                "orthonormalize: columns are rank deficient (condition number "
                "above threshold)");
    }
    Eigen::HouseholderQR<CMat> qr(B);
    CMat Q = qr.householderQ() * CMat::Identity(B.rows(), B.cols());
    // fix phases so that already-orthonormal input passes through unchanged
    CMat R = qr.matrixQR().topRows(B.cols()).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < Q.cols(); ++j) {
        cplx d = R(j, j);
        if (std::abs(d) > 0) Q.col(j) *= d / std::abs(d);
    }
    return space.weights.cwiseSqrt().cwiseInverse().cast<cplx>().asDiagonal() *
           Q;
}

// Gram residual ||F^H D F - I||_max in the weighted inner product.
inline double gram_residual(const CMat& F, const WeightedSpace& space) {
    CMat G = F.adjoint() * space.weights.cast<cplx>().asDiagonal() * F;
    return (G - CMat::Identity(G.rows(), G.cols())).cwiseAbs().maxCoeff();
}

}  // namespace speclab
