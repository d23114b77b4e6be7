#include <catch2/catch_amalgamated.hpp>

#include "speclab/random.hpp"
#include "speclab/weighted.hpp"

using namespace speclab;

namespace {

WeightedSpace random_space(Rng& rng, int n, int dim = 2) {
    WeightedSpace s;
    s.points.resize(n, dim);
    s.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < dim; ++d) s.points(i, d) = rng.normal();
        s.weights[i] = 0.2 + rng.uniform();
    }
    return s;
}

WeightedOperator random_operator(Rng& rng, int nc, int nd) {
    WeightedOperator A;
    A.codomain = random_space(rng, nc);
    A.domain = random_space(rng, nd);
    A.kernel.resize(nc, nd);
    for (int i = 0; i < nc; ++i)
        for (int j = 0; j < nd; ++j) A.kernel(i, j) = rng.cnormal();
    return A;
}

CVec random_cvec(Rng& rng, int n) {
    CVec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.cnormal();
    return v;
}

}  // namespace

TEST_CASE("unitarize basics", "[weighted]") {
    SECTION("identity on unit weights stays identity") {
        WeightedSpace s = WeightedSpace::uniform(4);
        WeightedOperator A{CMat::Identity(4, 4), s, s};
        REQUIRE((unitarize(A) - CMat::Identity(4, 4)).norm() == 0.0);
    }
    SECTION("scalar case picks up both weight roots") {
        WeightedSpace dom = WeightedSpace::uniform(1, 4.0);
        WeightedSpace cod = WeightedSpace::uniform(1, 9.0);
        WeightedOperator A{CMat::Constant(1, 1, cplx(2.0, 0.0)), dom, cod};
        REQUIRE(std::abs(unitarize(A)(0, 0) - cplx(12.0, 0.0)) < 1e-14);
    }
}

TEST_CASE("adjoint contract", "[weighted]") {
    Rng rng(11);
    WeightedOperator A = random_operator(rng, 7, 5);
    CVec f = random_cvec(rng, 5), g = random_cvec(rng, 7);
    cplx lhs = A.codomain.inner(g, A.apply(f));
    cplx rhs = A.domain.inner(A.adjoint().apply(g), f);
    REQUIRE(std::abs(lhs - rhs) < 1e-12 * std::abs(lhs));
}

TEST_CASE("singular values invariant under node splitting", "[weighted]") {
    Rng rng(7);
    WeightedOperator A = random_operator(rng, 5, 5);
    Vec sv0 = singular_values(A).values;

    // split domain node 2 into two half-weight copies with the same kernel
    // column: represents the same operator on the refined quadrature
    WeightedOperator B;
    B.codomain = A.codomain;
    B.domain.points.resize(6, A.domain.dim());
    B.domain.weights.resize(6);
    B.kernel.resize(5, 6);
    for (int j = 0; j < 5; ++j) {
        B.domain.points.row(j) = A.domain.points.row(j);
        B.domain.weights[j] = A.domain.weights[j];
        B.kernel.col(j) = A.kernel.col(j);
    }
    B.domain.points.row(5) = A.domain.points.row(2);
    B.domain.weights[2] *= 0.5;
    B.domain.weights[5] = B.domain.weights[2];
    B.kernel.col(5) = A.kernel.col(2);

    Vec sv1 = singular_values(B).values;
    for (int k = 0; k < 5; ++k)
        REQUIRE(std::abs(sv0[k] - sv1[k]) < 1e-12 * sv0[0]);
    REQUIRE(sv1[5] < 1e-12 * sv0[0]);
}

TEST_CASE("singular values of small canonical matrices", "[weighted]") {
    WeightedSpace s = WeightedSpace::uniform(2);
    SECTION("nilpotent shift") {
        CMat K(2, 2);
        K << 0, 1, 0, 0;
        Vec sv = singular_values({K, s, s}).values;
        REQUIRE(sv[0] == Catch::Approx(1.0).margin(1e-14));
        REQUIRE(sv[1] == Catch::Approx(0.0).margin(1e-14));
    }
    SECTION("diagonal") {
        CMat K = CVec(CVec::Zero(2)).asDiagonal();
        K(0, 0) = 3.0;
        K(1, 1) = 4.0;
        Vec sv = singular_values({K, s, s}).values;
        REQUIRE(sv[0] == Catch::Approx(4.0));
        REQUIRE(sv[1] == Catch::Approx(3.0));
    }
}

TEST_CASE("singular values agree with the M*M eigen-oracle", "[weighted]") {
    Rng rng(23);
    WeightedOperator A = random_operator(rng, 40, 40);
    Vec sv = singular_values(A).values;

    CMat M = unitarize(A);
    Eigen::SelfAdjointEigenSolver<CMat> es(CMat(M.adjoint() * M));
    Vec oracle = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().reverse();

    for (int k = 0; k < 40; ++k)
        REQUIRE(std::abs(sv[k] - oracle[k]) < 1e-10 * oracle[0]);
}

TEST_CASE("schatten norm values", "[weighted]") {
    WeightedSpace s = WeightedSpace::uniform(2);
    CMat K = CMat::Zero(2, 2);
    K(0, 0) = 3.0;
    K(1, 1) = 4.0;
    WeightedOperator A{K, s, s};
    REQUIRE(schatten_norm(A, 1.0) == Catch::Approx(7.0));
    REQUIRE(schatten_norm(A, 2.0) == Catch::Approx(5.0));
    REQUIRE(schatten_norm(A, inf) == Catch::Approx(4.0));

    // rank-1 projector has a single unit singular value
    Rng rng(3);
    WeightedSpace sp = random_space(rng, 9);
    CVec u = random_cvec(rng, 9);
    u /= sp.norm(u);
    DensityMatrix P = DensityMatrix::from_rank_one(u, sp);
    for (double alpha : {0.5, 1.0, 1.7, 3.0, inf})
        REQUIRE(schatten_norm(P.op, alpha) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("Hoelder inequality in Schatten classes", "[weighted]") {
    Rng rng(41);
    for (int trial = 0; trial < 200; ++trial) {
        Rng tr = rng.fork(trial);
        int n = 6 + int(tr.uniform() * 10);
        WeightedOperator A = random_operator(tr, n, n);
        WeightedOperator B = random_operator(tr, n, n);
        B.codomain = A.domain;  // composable
        double p = 1.0 + 3.0 * tr.uniform();
        double q = 1.0 + 3.0 * tr.uniform();
        double r = 1.0 / (1.0 / p + 1.0 / q);
        double lhs = schatten_norm(compose(A, B), r);
        double rhs = schatten_norm(A, p) * schatten_norm(B, q);
        REQUIRE(lhs <= rhs + 1e-12 * rhs);
    }
}

TEST_CASE("schatten norm is non-increasing in alpha", "[weighted]") {
    Rng rng(5);
    WeightedOperator A = random_operator(rng, 12, 9);
    double prev = inf;
    for (double alpha : {0.5, 0.8, 1.0, 1.5, 2.0, 3.0, 7.0}) {
        double v = schatten_norm(A, alpha);
        REQUIRE(v <= prev * (1 + 1e-13));
        prev = v;
    }
    REQUIRE(schatten_norm(A, inf) <= prev * (1 + 1e-13));
}

TEST_CASE("triangle inequality for alpha >= 1", "[weighted]") {
    Rng rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        Rng tr = rng.fork(trial);
        WeightedOperator A = random_operator(tr, 10, 8);
        WeightedOperator B = random_operator(tr, 10, 8);
        B.domain = A.domain;
        B.codomain = A.codomain;
        WeightedOperator S{A.kernel + B.kernel, A.domain, A.codomain};
        double alpha = 1.0 + 4.0 * tr.uniform();
        REQUIRE(schatten_norm(S, alpha) <=
                (schatten_norm(A, alpha) + schatten_norm(B, alpha)) *
                    (1 + 1e-12));
    }
}

TEST_CASE("regularized determinant", "[weighted]") {
    WeightedSpace s = WeightedSpace::uniform(2);
    SECTION("zero operator gives 1 for every order") {
        WeightedOperator Z{CMat::Zero(2, 2), s, s};
        for (int n : {1, 2, 3, 5})
            REQUIRE(std::abs(regularized_det(Z, n) - cplx(1.0, 0.0)) < 1e-14);
    }
    SECTION("closed form for diag(1), n = 2") {
        WeightedSpace s1 = WeightedSpace::uniform(1);
        WeightedOperator A{CMat::Constant(1, 1, cplx(1.0, 0.0)), s1, s1};
        cplx d = regularized_det(A, 2);
        REQUIRE(std::abs(d - 2.0 * std::exp(-1.0)) < 1e-12);
        REQUIRE(std::abs(d - cplx(0.7357588823428847, 0)) < 1e-10);
    }
    SECTION("eigenvalue -1 forces a zero") {
        CMat K = CMat::Zero(2, 2);
        K(0, 0) = -1.0;
        K(1, 1) = 0.3;
        WeightedOperator A{K, s, s};
        for (int n : {1, 2, 4})
            REQUIRE(std::abs(regularized_det(A, n)) < 1e-13);
    }
    SECTION("log bound |Det_2(1+A)| <= exp(||A||_S2^2 / 2)") {
        Rng rng(29);
        for (int trial = 0; trial < 50; ++trial) {
            Rng tr = rng.fork(trial);
            WeightedOperator A = random_operator(tr, 12, 12);
            A.domain = A.codomain;
            double s2 = schatten_norm(A, 2.0);
            double logdet = std::log(std::abs(regularized_det(A, 2)));
            REQUIRE(logdet <= 0.5 * s2 * s2 + 1e-10);
        }
    }
}

TEST_CASE("density of a sandwiched operator", "[weighted]") {
    Rng rng(31);
    WeightedSpace s = random_space(rng, 14);

    SECTION("identity map, rank one") {
        CVec u = random_cvec(rng, 14);
        u /= s.norm(u);
        WeightedOperator I{
            Vec(s.weights.cwiseInverse()).cast<cplx>().asDiagonal() *
                CMat::Identity(14, 14),
            s, s};
        // kernel of the identity operator: K D = I
        DensityMatrix g = DensityMatrix::from_rank_one(u, s);
        CVec rho = density_of(I, g);
        for (int i = 0; i < 14; ++i)
            REQUIRE(std::abs(rho[i] - cplx(std::norm(u[i]), 0)) < 1e-12);
    }

    SECTION("duality identity against the trace oracle") {
        for (int trial = 0; trial < 50; ++trial) {
            Rng tr = rng.fork(trial);
            WeightedOperator A = random_operator(tr, 12, 9);
            CMat G(9, 9);
            for (int i = 0; i < 9; ++i)
                for (int j = 0; j < 9; ++j) G(i, j) = tr.cnormal();
            DensityMatrix gamma{WeightedOperator{G, A.domain, A.domain}, false};
            CVec V = random_cvec(tr, 12);

            CVec rho = density_of(A, gamma);
            cplx lhs = (rho.cwiseProduct(V).cwiseProduct(
                            A.codomain.weights.cast<cplx>()))
                           .sum();
            // trace oracle: tr(gamma A* V A)
            WeightedOperator AVA =
                compose(A.adjoint(), multiply_left(V, A));
            cplx rhs = trace_weighted_c(compose(gamma.op, AVA));
            double scale = rho.cwiseAbs().sum() * V.cwiseAbs().maxCoeff() + 1.0;
            REQUIRE(std::abs(lhs - rhs) < 1e-10 * scale);
        }
    }

    SECTION("eigendecomposition identity") {
        CMat cols(14, 3);
        for (int i = 0; i < 14; ++i)
            for (int j = 0; j < 3; ++j) cols(i, j) = rng.cnormal();
        CMat F = orthonormalize(cols, s);
        CVec nu(3);
        nu << 0.7, -0.2, 1.4;
        DensityMatrix gamma =
            DensityMatrix::from_eigensystem(F, nu, s, true);
        WeightedOperator A = random_operator(rng, 11, 14);
        A.domain = s;
        CVec rho = density_of(A, gamma);
        CVec expect = CVec::Zero(11);
        for (int j = 0; j < 3; ++j) {
            CVec Af = A.apply(F.col(j));
            expect += nu[j] * Af.cwiseAbs2().cast<cplx>();
        }
        REQUIRE((rho - expect).cwiseAbs().maxCoeff() <
                1e-12 * expect.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("orthonormalize", "[weighted]") {
    Rng rng(37);
    SECTION("single column normalizes") {
        WeightedSpace s = random_space(rng, 10);
        CVec u = random_cvec(rng, 10);
        CMat F = orthonormalize(u, s);
        REQUIRE(std::abs(s.norm(F.col(0)) - 1.0) < 1e-13);
        // parallel to input
        cplx ip = s.inner(F.col(0), u);
        REQUIRE(std::abs(std::abs(ip) - s.norm(u)) < 1e-12 * s.norm(u));
    }
    SECTION("orthonormal input passes through") {
        WeightedSpace s = random_space(rng, 24);
        CMat cols(24, 4);
        for (int i = 0; i < 24; ++i)
            for (int j = 0; j < 4; ++j) cols(i, j) = rng.cnormal();
        CMat F = orthonormalize(cols, s);
        CMat F2 = orthonormalize(F, s);
        REQUIRE(gram_residual(F2, s) < 1e-13);
        REQUIRE((F2 - F).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("16 gaussians on a 256-node grid") {
        WeightedSpace s = random_space(rng, 256, 1);
        CMat cols(256, 16);
        for (int i = 0; i < 256; ++i)
            for (int j = 0; j < 16; ++j) cols(i, j) = rng.cnormal();
        CMat F = orthonormalize(cols, s);
        REQUIRE(gram_residual(F, s) < 1e-12);
    }
    SECTION("rank deficiency is an error") {
        WeightedSpace s = random_space(rng, 8);
        CMat cols(8, 2);
        CVec u = random_cvec(rng, 8);
        cols.col(0) = u;
        cols.col(1) = (2.0 + 1e-15) * u;
        REQUIRE_THROWS_AS(orthonormalize(cols, s), validation_error);
    }
}
