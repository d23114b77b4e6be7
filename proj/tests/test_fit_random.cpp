#include <catch2/catch_amalgamated.hpp>

#include "speclab/fit.hpp"
#include "speclab/random.hpp"

using namespace speclab;

TEST_CASE("slope_fit recovers exact power laws", "[fit]") {
    std::vector<double> xs{1.0, 2.0, 4.0, 8.0};
    SECTION("identity") {
        SlopeFit f = slope_fit(xs, xs);
        REQUIRE(f.slope == Catch::Approx(1.0).margin(1e-13));
        REQUIRE(f.max_residual < 1e-13);
    }
    SECTION("quadratic with prefactor") {
        std::vector<double> ys;
        for (double x : xs) ys.push_back(3.5 * x * x);
        SlopeFit f = slope_fit(xs, ys);
        REQUIRE(f.slope == Catch::Approx(2.0).margin(1e-12));
        REQUIRE(f.intercept == Catch::Approx(std::log(3.5)).margin(1e-12));
    }
    SECTION("noisy one-third slope lands in the stated window") {
        Rng rng(2024);
        std::vector<double> x2, ys;
        for (int k = 0; k < 8; ++k) {
            double x = std::pow(2.0, k);
            x2.push_back(x);
            ys.push_back(std::pow(x, 1.0 / 3.0) *
                         (1.0 + 0.01 * rng.normal()));
        }
        SlopeFit f = slope_fit(x2, ys);
        REQUIRE(f.slope >= 0.31);
        REQUIRE(f.slope <= 0.36);
    }
    SECTION("errors") {
        REQUIRE_THROWS_AS(slope_fit({1, 2}, {1, 2}), validation_error);
        REQUIRE_THROWS_AS(slope_fit({1, 2, 2}, {1, 2, 3}), validation_error);
        REQUIRE_THROWS_AS(slope_fit({1, 2, 4}, {1, -2, 3}), validation_error);
    }
}

TEST_CASE("rng is deterministic and roughly gaussian", "[fit]") {
    Rng a(99), b(99);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

    Rng rng(1);
    double mean = 0, var = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double g = rng.normal();
        mean += g;
        var += g * g;
    }
    mean /= n;
    var = var / n - mean * mean;
    REQUIRE(std::abs(mean) < 0.03);
    REQUIRE(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("random fields are grid-independent functions", "[fit]") {
    Rng r1(5), r2(5);
    RandomField f1 = RandomField::make(r1, 2, 12, 3.0, 1.5);
    RandomField f2 = RandomField::make(r2, 2, 12, 3.0, 1.5);
    Eigen::VectorXd x(2);
    x << 0.3, -0.7;
    REQUIRE(f1(x) == f2(x));
    Eigen::VectorXd far(2);
    far << 2.0, 0.0;
    REQUIRE(f1(far) == cplx(0.0, 0.0));  // compact support
}
