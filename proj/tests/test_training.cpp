#include "doctest.h"

#include "ntk/dynamics.hpp"
#include "ntk/empirical.hpp"
#include "ntk/gram.hpp"
#include "ntk/rng.hpp"
#include "ntk/training.hpp"

using namespace ntk;

namespace {

Eigen::MatrixXd random_rows(int m, int cols, std::uint64_t seed, bool unit = false) {
    NormalSampler rng(seed);
    Eigen::MatrixXd x(m, cols);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < cols; ++j) x(i, j) = rng();
        if (unit) x.row(i) /= x.row(i).norm();
    }
    return x;
}

} // namespace

TEST_CASE("zero learning steps leave the kernel still: zero velocity") {
    FiniteNet net(ArchSpec::dense(2, 3, {32}), Parameterization::NTK, 3);
    const Eigen::MatrixXd x = random_rows(6, 3, 4, true);
    const Eigen::VectorXd y = random_rows(6, 1, 5).col(0);
    TrainOptions options;
    options.eta = 1e-9; // effectively frozen weights
    options.steps = 4;
    options.record_kernel_every = 2;
    const TrainTrajectory traj = gradient_flow_train(net, x, y, options);
    REQUIRE(traj.kernel_velocity.size() >= 1);
    for (double v : traj.kernel_velocity) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("wide net follows the linearized square-loss curve") {
    FiniteNet net(ArchSpec::dense(2, 4, {2048}), Parameterization::NTK, 7);
    const Eigen::MatrixXd x = random_rows(8, 4, 8, true);
    const Eigen::VectorXd y = 0.5 * random_rows(8, 1, 9).col(0);

    Eigen::VectorXd f0(8);
    for (int i = 0; i < 8; ++i) f0(i) = net.value(net.input_from_row(x.row(i).transpose()));
    const GramMatrix kernel = empirical_ntk_contraction(net, x);
    const SpectralDecomposition decomp = decompose(kernel.entries);

    TrainOptions options;
    options.eta = 0.05;
    options.steps = 60;
    const TrainTrajectory traj = gradient_flow_train(net, x, y, options);
    REQUIRE_FALSE(traj.diverged_at.has_value());

    const Eigen::VectorXd closed =
        exact_train_predictions(decomp, y, f0, options.eta * options.steps);
    const double closed_loss = 0.5 * (y - closed).squaredNorm();
    const double got_loss = traj.losses.back();
    CHECK(std::abs(got_loss - closed_loss) <= 0.1 * std::max(closed_loss, 1e-3));
}

TEST_CASE("divergence is detected and reported with its step") {
    FiniteNet net(ArchSpec::dense(2, 3, {16}), Parameterization::NTK, 11);
    const Eigen::MatrixXd x = random_rows(4, 3, 12, true);
    const Eigen::VectorXd y = random_rows(4, 1, 13).col(0);
    TrainOptions options;
    options.eta = 50.0;
    options.steps = 200;
    const TrainTrajectory traj = gradient_flow_train(net, x, y, options);
    CHECK(traj.diverged_at.has_value());
}

TEST_CASE("piecewise linearized training") {
    SUBCASE("exactly linear model ignores the refresh schedule") {
        const ArchSpec arch = ArchSpec::dense(1, 4);
        const Eigen::MatrixXd x = random_rows(3, 4, 21);
        const Eigen::VectorXd y = random_rows(3, 1, 22).col(0);

        FiniteNet a(arch, Parameterization::NTK, 23);
        FiniteNet b(arch, Parameterization::NTK, 23);
        PiecewiseOptions none;
        none.eta = 0.05;
        none.horizon = 3.0;
        PiecewiseOptions many = none;
        many.refresh_times = {0.5, 1.0, 1.5, 2.0, 2.5};
        const PiecewiseTrajectory ta = piecewise_linearized_train(a, x, y, none);
        const PiecewiseTrajectory tb = piecewise_linearized_train(b, x, y, many);
        CHECK((ta.weights.back() - tb.weights.back()).cwiseAbs().maxCoeff() < 1e-10);
    }

    SUBCASE("one long segment interpolates the labels") {
        FiniteNet net(ArchSpec::dense(2, 3, {64}), Parameterization::NTK, 31);
        const Eigen::MatrixXd x = random_rows(4, 3, 32, true);
        const Eigen::VectorXd y = random_rows(4, 1, 33).col(0);
        PiecewiseOptions options;
        options.eta = 1.0;
        options.horizon = 500.0;
        const PiecewiseTrajectory traj = piecewise_linearized_train(net, x, y, options);
        CHECK((traj.final_train_predictions - y).cwiseAbs().maxCoeff() < 1e-4);
    }

    SUBCASE("kernel refreshes do not hurt the final training loss") {
        const Eigen::MatrixXd x = random_rows(6, 3, 41, true);
        const Eigen::VectorXd y = random_rows(6, 1, 42).col(0);
        int refresh_wins = 0;
        const int trials = 10;
        for (int s = 0; s < trials; ++s) {
            const ArchSpec arch = ArchSpec::dense(2, 3, {24});
            PiecewiseOptions base;
            base.eta = 0.4;
            base.horizon = 8.0;
            FiniteNet plain(arch, Parameterization::NTK, split_seed(5000, s));
            FiniteNet refreshed(arch, Parameterization::NTK, split_seed(5000, s));
            PiecewiseOptions quarters = base;
            quarters.refresh_times = {2.0, 4.0, 6.0};
            const auto t_plain = piecewise_linearized_train(plain, x, y, base);
            const auto t_ref = piecewise_linearized_train(refreshed, x, y, quarters);
            const double loss_plain = (y - t_plain.final_train_predictions).squaredNorm();
            const double loss_ref = (y - t_ref.final_train_predictions).squaredNorm();
            if (loss_ref <= loss_plain + 1e-12) ++refresh_wins;
        }
        CHECK(refresh_wins >= 7);
    }
}
