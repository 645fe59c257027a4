#include "doctest.h"

#include <cmath>
#include <random>

#include "ntk/errors.hpp"
#include "ntk/gauss.hpp"
#include "quadrature_oracle.hpp"

using namespace ntk;
using ntk::testing::gauss_hermite_2d;
using ntk::testing::polar_relu_indicator;
using ntk::testing::polar_relu_prod;

TEST_CASE("relu product expectation closed-form anchors") {
    CHECK(relu_prod_expectation({1, 1, 1}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(relu_prod_expectation({1, 1, 0}) == doctest::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-12));
    CHECK(relu_prod_expectation({4, 9, 0}) == doctest::Approx(3.0 / M_PI).epsilon(1e-12));
    CHECK(relu_prod_expectation({1, 1, -1}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("relu derivative expectation closed-form anchors") {
    CHECK(relu_deriv_expectation({1, 1, 1}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(relu_deriv_expectation({1, 1, 0}) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(relu_deriv_expectation({1, 1, -1}) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("closed forms agree with the sector-split quadrature oracle") {
    const double qs[] = {0.25, 1.0, 4.0};
    const double rhos[] = {-0.99, -0.5, 0.0, 0.5, 0.99};
    for (double q11 : qs) {
        for (double q22 : qs) {
            for (double rho : rhos) {
                const Cov2 sigma{q11, q22, rho * std::sqrt(q11 * q22)};
                CHECK(relu_prod_expectation(sigma) ==
                      doctest::Approx(polar_relu_prod(sigma)).epsilon(1e-10));
                CHECK(relu_deriv_expectation(sigma) ==
                      doctest::Approx(polar_relu_indicator(sigma)).epsilon(1e-10));
            }
        }
    }
}

TEST_CASE("tensor gauss-hermite converges toward the closed forms") {
    // The raw integrands have kinks, so the tensor rule is only O(1/N)
    // accurate; check consistency at a loose tolerance and that refining the
    // grid moves the estimate toward the closed form.
    const Cov2 sigma{1.0, 1.0, 0.5};
    const double exact = relu_prod_expectation(sigma);
    auto prod = [](double u, double v) { return std::max(u, 0.0) * std::max(v, 0.0); };
    const double coarse = gauss_hermite_2d(prod, sigma, 16);
    const double fine = gauss_hermite_2d(prod, sigma, 64);
    CHECK(std::abs(fine - exact) < 2e-2);
    CHECK(std::abs(fine - exact) < std::abs(coarse - exact));
}

TEST_CASE("degenerate covariance kills both expectations") {
    CHECK(relu_prod_expectation({0, 1, 0}) == 0.0);
    CHECK(relu_prod_expectation({1, 0, 0}) == 0.0);
    CHECK(relu_deriv_expectation({0, 4, 0}) == 0.0);
}

TEST_CASE("non-psd covariance is rejected") {
    CHECK_THROWS_AS(relu_prod_expectation({1, 1, 1.1}), NumericError);
    CHECK_THROWS_AS(relu_deriv_expectation({0.5, 0.5, 0.7}), NumericError);
    CHECK_THROWS_AS(relu_prod_expectation({-1, 1, 0}), NumericError);
}

TEST_CASE("ranges and scaling behavior") {
    std::mt19937_64 gen(7);
    auto unit = [&gen] { return (gen() >> 11) * 0x1.0p-53; };
    for (int trial = 0; trial < 200; ++trial) {
        const double q11 = 0.1 + 4.0 * unit();
        const double q22 = 0.1 + 4.0 * unit();
        const double rho = 2.0 * unit() - 1.0;
        const Cov2 sigma{q11, q22, rho * std::sqrt(q11 * q22)};
        const double prod = relu_prod_expectation(sigma);
        const double ind = relu_deriv_expectation(sigma);
        CHECK(prod >= 0.0);
        CHECK(prod <= std::sqrt(q11 * q22) / 2.0 + 1e-12);
        CHECK(ind >= 0.0);
        CHECK(ind <= 0.5 + 1e-12);

        // The indicator expectation only sees the correlation.
        const double c = 0.25 + 8.0 * unit();
        const Cov2 scaled{c * q11, c * q22, c * sigma.q12};
        CHECK(relu_deriv_expectation(scaled) == doctest::Approx(ind).epsilon(1e-12));
    }
}

TEST_CASE("arccos argument is clamped at perfect correlation") {
    const double q = 0.731;
    const Cov2 sigma{q, q, std::nextafter(q, 2.0 * q)};
    CHECK(std::isfinite(relu_prod_expectation(sigma)));
    CHECK(relu_deriv_expectation(sigma) == doctest::Approx(0.5).epsilon(1e-10));
}
