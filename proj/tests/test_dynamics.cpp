#include "doctest.h"

#include <Eigen/Dense>
#include <limits>
#include <random>

#include "ntk/dynamics.hpp"
#include "ntk/errors.hpp"
#include "ntk/gram.hpp"

using namespace ntk;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd random_psd(int m, std::uint64_t seed, double shift = 0.1) {
    std::mt19937_64 gen(seed);
    Eigen::MatrixXd a(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            const double u1 = (gen() >> 11) * 0x1.0p-53;
            const double u2 = (gen() >> 11) * 0x1.0p-53;
            a(i, j) = std::sqrt(-2.0 * std::log(u1 + 1e-300)) * std::cos(2.0 * M_PI * u2);
        }
    }
    return a * a.transpose() / m + shift * Eigen::MatrixXd::Identity(m, m);
}

Eigen::VectorXd random_vec(int m, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    Eigen::VectorXd v(m);
    for (int i = 0; i < m; ++i) {
        const double u1 = (gen() >> 11) * 0x1.0p-53;
        const double u2 = (gen() >> 11) * 0x1.0p-53;
        v(i) = std::sqrt(-2.0 * std::log(u1 + 1e-300)) * std::cos(2.0 * M_PI * u2);
    }
    return v;
}

} // namespace

TEST_CASE("scalar exponential decay") {
    Eigen::MatrixXd theta(1, 1);
    theta << 2.0;
    const SpectralDecomposition d = decompose(theta);
    Eigen::VectorXd y(1), f0(1);
    y << 1.0;
    f0 << 0.0;
    for (double t : {0.0, 0.3, 1.0, 4.0}) {
        const Eigen::VectorXd ft = exact_train_predictions(d, y, f0, t);
        CHECK(ft(0) == doctest::Approx(1.0 - std::exp(-2.0 * t)).epsilon(1e-14));
    }
}

TEST_CASE("time zero returns the initial predictions exactly") {
    const Eigen::MatrixXd g = random_psd(6, 1);
    const SpectralDecomposition d = decompose(g);
    const Eigen::VectorXd y = random_vec(6, 2);
    const Eigen::VectorXd f0 = random_vec(6, 3);
    const Eigen::VectorXd ft = exact_train_predictions(d, y, f0, 0.0);
    CHECK((ft - f0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("eigen-mode residual bound with euler cross-check") {
    const Eigen::MatrixXd g = random_psd(5, 4);
    const SpectralDecomposition d = decompose(g);
    const Eigen::VectorXd y = random_vec(5, 5);
    const Eigen::VectorXd f0 = random_vec(5, 6);
    const double lambda_min = d.lambdas(4);
    const double t = 10.0 / lambda_min;
    const Eigen::VectorXd ft = exact_train_predictions(d, y, f0, t);
    CHECK((y - ft).norm() <= std::exp(-10.0) * (y - f0).norm() + 1e-12);

    const double eta = 1e-3;
    const long steps = static_cast<long>(t / eta);
    Eigen::VectorXd f = f0;
    for (long s = 0; s < steps; ++s) f += eta * g * (y - f);
    const Eigen::VectorXd closed = exact_train_predictions(d, y, f0, eta * steps);
    CHECK((f - closed).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("semigroup property") {
    const Eigen::MatrixXd g = random_psd(6, 7);
    const SpectralDecomposition d = decompose(g);
    const Eigen::VectorXd y = random_vec(6, 8);
    const Eigen::VectorXd f0 = random_vec(6, 9);
    const Eigen::VectorXd f1 = exact_train_predictions(d, y, f0, 0.7);
    const Eigen::VectorXd f2_direct = exact_train_predictions(d, y, f0, 0.7 + 1.3);
    const Eigen::VectorXd f2_chained = exact_train_predictions(d, y, f1, 1.3);
    CHECK((f2_direct - f2_chained).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("mode decoupling") {
    const Eigen::MatrixXd g = random_psd(5, 10);
    const SpectralDecomposition d = decompose(g);
    const Eigen::VectorXd y = random_vec(5, 11);
    const Eigen::VectorXd f0 = random_vec(5, 12);
    const double t = 0.9;
    const Eigen::VectorXd ft = exact_train_predictions(d, y, f0, t);
    for (int k = 0; k < 5; ++k) {
        const Eigen::VectorXd vk = d.vectors.col(k);
        const double expected =
            y.dot(vk) + std::exp(-d.lambdas(k) * t) * (f0.dot(vk) - y.dot(vk));
        CHECK(ft.dot(vk) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("residual decay rate on random psd grams") {
    for (std::uint64_t seed = 20; seed < 25; ++seed) {
        const Eigen::MatrixXd g = random_psd(6, seed);
        const SpectralDecomposition d = decompose(g);
        const Eigen::VectorXd y = random_vec(6, seed + 100);
        const Eigen::VectorXd f0 = random_vec(6, seed + 200);
        const double lambda_min = d.lambdas(5);
        for (double t : {0.1, 1.0, 3.0}) {
            const Eigen::VectorXd ft = exact_train_predictions(d, y, f0, t);
            CHECK((y - ft).squaredNorm() <=
                  std::exp(-2.0 * lambda_min * t) * (y - f0).squaredNorm() + 1e-12);
        }
    }
}

TEST_CASE("null modes stay frozen and are reported") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(3, 3);
    g(0, 0) = 2.0;
    g(1, 1) = 1.0; // third direction is exactly null
    const SpectralDecomposition d = decompose(g);
    CHECK(frozen_modes(d) == std::vector<int>{2});
    const Eigen::VectorXd y = random_vec(3, 30);
    const Eigen::VectorXd f0 = random_vec(3, 31);
    const Eigen::VectorXd ft = exact_train_predictions(d, y, f0, kInf);
    CHECK(ft(2) == doctest::Approx(f0(2)).epsilon(1e-12));
    CHECK(ft(0) == doctest::Approx(y(0)).epsilon(1e-12));
}

TEST_CASE("test prediction interpolates at infinite time") {
    const Eigen::MatrixXd g = random_psd(5, 40);
    const SpectralDecomposition d = decompose(g);
    const Eigen::VectorXd y = random_vec(5, 41);
    const Eigen::VectorXd f0 = Eigen::VectorXd::Zero(5);
    // Probe one of the training points: its kernel row is a gram row.
    const double pred = exact_test_prediction(g.row(2).transpose(), d, y, f0, 0.0, kInf);
    CHECK(pred == doctest::Approx(y(2)).epsilon(1e-10));
    const double at0 = exact_test_prediction(g.row(2).transpose(), d, y, f0, 0.123, 0.0);
    CHECK(at0 == doctest::Approx(0.123).epsilon(1e-14));
}

TEST_CASE("test prediction matches an euler integration oracle") {
    // Five training points plus one probe under the joint linear dynamics.
    const Eigen::MatrixXd x = [] {
        std::mt19937_64 gen(55);
        Eigen::MatrixXd m(6, 3);
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double u1 = (gen() >> 11) * 0x1.0p-53;
                const double u2 = (gen() >> 11) * 0x1.0p-53;
                m(i, j) = std::sqrt(-2.0 * std::log(u1 + 1e-300)) * std::cos(2.0 * M_PI * u2);
            }
            m.row(i) /= m.row(i).norm();
        }
        return m;
    }();
    const ArchSpec arch = ArchSpec::dense(2, 3);
    const Eigen::MatrixXd joint = gram(x, arch, GramKind::NTK).entries;
    const Eigen::MatrixXd train = joint.topLeftCorner(5, 5);
    const Eigen::VectorXd probe_row = joint.block(5, 0, 1, 5).transpose();
    const Eigen::VectorXd y = random_vec(5, 56);

    const double eta = 1e-3;
    const long steps = 10000;
    Eigen::VectorXd f = Eigen::VectorXd::Zero(5);
    double f_probe = 0.0;
    for (long s = 0; s < steps; ++s) {
        const Eigen::VectorXd r = y - f;
        f_probe += eta * probe_row.dot(r);
        f += eta * train * r;
    }
    const SpectralDecomposition d = decompose(train);
    const double closed = exact_test_prediction(probe_row, d, y, Eigen::VectorXd::Zero(5), 0.0,
                                                eta * steps);
    CHECK(std::abs(closed - f_probe) < 1e-4);
}

TEST_CASE("singular gram is rejected for test predictions") {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, 2);
    g(0, 0) = 1.0;
    const SpectralDecomposition d = decompose(g);
    const Eigen::VectorXd y = random_vec(2, 60);
    CHECK_THROWS_AS(
        exact_test_prediction(g.row(0).transpose(), d, y, Eigen::VectorXd::Zero(2), 0.0, 1.0),
        NumericError);
}

TEST_CASE("discrete mode dynamics closed form") {
    Eigen::MatrixXd g(2, 2);
    g << 1.0, 0.0, 0.0, 0.25;
    const SpectralDecomposition d = decompose(g);
    Eigen::VectorXd y(2);
    y << 1.0, -2.0;
    Eigen::VectorXd u0(2);
    u0 << 0.3, 0.4;

    // eta lambda = 1 converges in one step for the top mode.
    const ModeDynamics one = discrete_mode_dynamics(d, y, u0, 1.0, 1);
    CHECK(one.coefficients(0) == doctest::Approx(y.dot(d.vectors.col(0))).epsilon(1e-14));

    // eta lambda = 2 oscillates with constant amplitude.
    const ModeDynamics osc1 = discrete_mode_dynamics(d, y, u0, 2.0, 11);
    const ModeDynamics osc2 = discrete_mode_dynamics(d, y, u0, 2.0, 12);
    const double target = y.dot(d.vectors.col(0));
    CHECK(std::abs(osc1.coefficients(0) - target) ==
          doctest::Approx(std::abs(osc2.coefficients(0) - target)).epsilon(1e-12));
    CHECK(osc1.diverged[0]);
    CHECK_FALSE(osc1.diverged[1]);
}

TEST_CASE("discrete dynamics matches explicit gradient descent") {
    const Eigen::MatrixXd g = random_psd(4, 70);
    const SpectralDecomposition d = decompose(g);
    const Eigen::VectorXd y = random_vec(4, 71);
    const Eigen::VectorXd f0 = random_vec(4, 72);
    const double eta = 0.15;
    const long steps = 50;

    Eigen::VectorXd f = f0;
    for (long s = 0; s < steps; ++s) f += eta * g * (y - f);

    const Eigen::VectorXd u0 = d.vectors.transpose() * f0;
    const ModeDynamics modes = discrete_mode_dynamics(d, y, u0, eta, steps);
    const Eigen::VectorXd rebuilt = d.vectors * modes.coefficients;
    CHECK((rebuilt - f).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("stability threshold and condition number") {
    Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
    CHECK(max_stable_lr(decompose(id)) == doctest::Approx(2.0));
    CHECK(trainability_condition_number(decompose(id)) == doctest::Approx(1.0));

    Eigen::MatrixXd diag = Eigen::MatrixXd::Zero(2, 2);
    diag(0, 0) = 4.0;
    diag(1, 1) = 1.0;
    CHECK(max_stable_lr(decompose(diag)) == doctest::Approx(0.5));
    CHECK(trainability_condition_number(decompose(diag)) == doctest::Approx(0.25));

    diag(1, 1) = 2.0;
    CHECK(trainability_condition_number(decompose(diag)) == doctest::Approx(0.5));

    const Eigen::MatrixXd g = random_psd(4, 80);
    const double base = max_stable_lr(decompose(g));
    CHECK(max_stable_lr(decompose(Eigen::MatrixXd(3.0 * g))) == doctest::Approx(base / 3.0));
    // Scaling both grams leaves the trainability ranking unchanged.
    const Eigen::MatrixXd h = random_psd(4, 81);
    const double kg = trainability_condition_number(decompose(g));
    const double kh = trainability_condition_number(decompose(h));
    const double kg_scaled = trainability_condition_number(decompose(Eigen::MatrixXd(7.0 * g)));
    const double kh_scaled = trainability_condition_number(decompose(Eigen::MatrixXd(7.0 * h)));
    CHECK((kg < kh) == (kg_scaled < kh_scaled));

    Eigen::MatrixXd singular = Eigen::MatrixXd::Zero(2, 2);
    singular(0, 0) = 1.0;
    CHECK(trainability_condition_number(decompose(singular)) == doctest::Approx(0.0));
}

TEST_CASE("nngp posterior basics and conditioning oracle") {
    const Eigen::MatrixXd k = random_psd(3, 90);
    const Eigen::VectorXd y = random_vec(3, 91);

    // A training point as the test point: exact interpolation, zero variance.
    {
        const Eigen::MatrixXd cross = k.row(1);
        Eigen::MatrixXd test(1, 1);
        test << k(1, 1);
        const GpPosterior post = nngp_posterior(k, cross, test, y);
        CHECK(post.mean(0) == doctest::Approx(y(1)).epsilon(1e-10));
        CHECK(std::abs(post.covariance(0, 0)) < 1e-8);
    }

    // Independent test point: prior untouched.
    {
        const Eigen::MatrixXd cross = Eigen::MatrixXd::Zero(1, 3);
        Eigen::MatrixXd test(1, 1);
        test << 0.8;
        const GpPosterior post = nngp_posterior(k, cross, test, y);
        CHECK(post.mean(0) == doctest::Approx(0.0));
        CHECK(post.covariance(0, 0) == doctest::Approx(0.8));
    }

    // Direct joint-Gaussian conditioning on a 4x4 covariance.
    {
        const Eigen::MatrixXd joint = random_psd(4, 92);
        const Eigen::MatrixXd k_train = joint.topLeftCorner(3, 3);
        const Eigen::MatrixXd cross = joint.block(3, 0, 1, 3);
        Eigen::MatrixXd test(1, 1);
        test << joint(3, 3);
        const GpPosterior post = nngp_posterior(k_train, cross, test, y);
        const Eigen::MatrixXd inv = k_train.inverse();
        const double mean = (cross * inv * y)(0);
        const double var = joint(3, 3) - (cross * inv * cross.transpose())(0, 0);
        CHECK(post.mean(0) == doctest::Approx(mean).epsilon(1e-10));
        CHECK(post.covariance(0, 0) == doctest::Approx(var).epsilon(1e-10));
    }
}

TEST_CASE("ntk gp moments") {
    const int m = 5, p = 3;
    const Eigen::MatrixXd joint = random_psd(m + p, 100);
    const Eigen::MatrixXd k_train = joint.topLeftCorner(m, m);
    const Eigen::MatrixXd k_cross = joint.block(m, 0, p, m);
    const Eigen::MatrixXd k_test = joint.block(m, m, p, p);
    const Eigen::VectorXd y = random_vec(m, 101);

    SUBCASE("last-layer case reduces to the bayesian posterior at t=inf") {
        const GpPosterior gp = ntk_gp_moments(k_train, k_train, k_cross, k_cross, k_test, y, kInf);
        const GpPosterior exact = nngp_posterior(k_train, k_cross, k_test, y);
        CHECK((gp.mean - exact.mean).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((gp.covariance - exact.covariance).cwiseAbs().maxCoeff() < 1e-8);
    }

    SUBCASE("zero time gives the prior") {
        const Eigen::MatrixXd theta = random_psd(m, 102);
        const Eigen::MatrixXd theta_cross = Eigen::MatrixXd::Random(p, m);
        const GpPosterior gp = ntk_gp_moments(theta, k_train, theta_cross, k_cross, k_test, y, 0.0);
        CHECK(gp.mean.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
        CHECK((gp.covariance - k_test).cwiseAbs().maxCoeff() < 1e-12);
    }

    SUBCASE("generic theta at t=inf matches the direct formula") {
        const Eigen::MatrixXd theta_joint = random_psd(m + p, 103);
        const Eigen::MatrixXd theta = theta_joint.topLeftCorner(m, m);
        const Eigen::MatrixXd theta_cross = theta_joint.block(m, 0, p, m);
        const GpPosterior gp =
            ntk_gp_moments(theta, k_train, theta_cross, k_cross, k_test, y, kInf);
        const Eigen::MatrixXd ti = theta.inverse();
        const Eigen::MatrixXd a = theta_cross * ti;
        const Eigen::VectorXd mean = a * y;
        const Eigen::MatrixXd cov = k_test + a * k_train * a.transpose() -
                                    a * k_cross.transpose() - k_cross * a.transpose();
        CHECK((gp.mean - mean).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((gp.covariance - cov).cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("sampled variances stay above the psd tolerance") {
        for (double t : {0.0, 0.5, 2.0, 50.0}) {
            const GpPosterior gp =
                ntk_gp_moments(k_train, k_train, k_cross, k_cross, k_test, y, t);
            CHECK(gp.covariance.diagonal().minCoeff() > -1e-8);
        }
    }
}

TEST_CASE("width certificate arithmetic") {
    CHECK(width_certificate(2, 1.0, 0.5, WidthBoundVariant::CubicDelta) ==
          doctest::Approx(512.0).epsilon(1e-12));

    // As delta -> 1 with m=1, the first term of the log variant vanishes.
    const double near_one = 1.0 - 1e-12;
    const double v = width_certificate(1, 1.0, near_one, WidthBoundVariant::LogDelta);
    CHECK(v == doctest::Approx(std::log(2.0 / near_one)).epsilon(1e-6));

    double prev = 0.0;
    for (long m : {1, 2, 4, 8, 16}) {
        const double cur = width_certificate(m, 0.5, 0.1, WidthBoundVariant::LogDelta);
        CHECK(cur >= prev);
        prev = cur;
    }
    CHECK_THROWS_AS(width_certificate(0, 1.0, 0.5, WidthBoundVariant::CubicDelta), ConfigError);
    CHECK_THROWS_AS(width_certificate(2, -1.0, 0.5, WidthBoundVariant::CubicDelta), ConfigError);
    CHECK_THROWS_AS(width_certificate(2, 1.0, 1.5, WidthBoundVariant::CubicDelta), ConfigError);
}

TEST_CASE("generalization bound") {
    const int m = 4;
    const Eigen::MatrixXd h = Eigen::MatrixXd::Identity(m, m);
    const Eigen::VectorXd y = Eigen::VectorXd::Unit(m, 0);

    SUBCASE("zero residual") {
        const GeneralizationBound b = generalization_bound(h, y, y, 100, 0.1, 0.1);
        CHECK(b.b_quadratic == doctest::Approx(0.0));
        const double radem =
            1.0 / std::sqrt(4.0) * std::sqrt(0.5 + std::sqrt(std::log(10.0) / 200.0));
        CHECK(b.rademacher == doctest::Approx(radem).epsilon(1e-12));
        CHECK(b.bound == doctest::Approx(b.rademacher + b.confidence).epsilon(1e-12));
    }

    SUBCASE("identity gram unit label") {
        const GeneralizationBound b =
            generalization_bound(h, y, Eigen::VectorXd::Zero(m), 50, 0.2, 0.2);
        CHECK(b.b_quadratic == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(b.b_sqrt == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(b.j_hat == 1);
    }

    SUBCASE("bound decreases with more samples at fixed residual quadratic form") {
        double prev = 1e9;
        for (int mm : {2, 8, 32, 128}) {
            const Eigen::MatrixXd hh = Eigen::MatrixXd::Identity(mm, mm);
            Eigen::VectorXd yy = Eigen::VectorXd::Zero(mm);
            yy(0) = 1.0; // B = 1 for every m
            const GeneralizationBound b =
                generalization_bound(hh, yy, Eigen::VectorXd::Zero(mm), 64, 0.1, 0.1);
            CHECK(b.bound < prev);
            prev = b.bound;
        }
    }
}
