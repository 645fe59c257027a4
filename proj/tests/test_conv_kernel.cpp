#include "doctest.h"

#include <random>

#include "ntk/conv_kernel.hpp"
#include "ntk/errors.hpp"
#include "ntk/fc_kernel.hpp"

using namespace ntk;

namespace {

Eigen::MatrixXd random_image(int channels, int pixels, std::mt19937_64& gen) {
    Eigen::MatrixXd x(channels, pixels);
    for (int i = 0; i < channels; ++i) {
        for (int j = 0; j < pixels; ++j) {
            const double u1 = (gen() >> 11) * 0x1.0p-53;
            const double u2 = (gen() >> 11) * 0x1.0p-53;
            x(i, j) = std::sqrt(-2.0 * std::log(u1 + 1e-300)) * std::cos(2.0 * M_PI * u2);
        }
    }
    return x;
}

Eigen::MatrixXd roll(const Eigen::MatrixXd& x, int shift) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    const int d = static_cast<int>(x.cols());
    for (int s = 0; s < d; ++s) out.col((s + shift % d + d) % d) = x.col(s);
    return out;
}

} // namespace

TEST_CASE("single-pixel single-offset conv reduces to the fc kernel") {
    std::mt19937_64 gen(3);
    const ArchSpec arch = ArchSpec::conv1d(3, 1, 1, {0});
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::MatrixXd x = random_image(1, 1, gen);
        const Eigen::MatrixXd xp = random_image(1, 1, gen);
        const ConvKernelValue conv = conv1d_ntk_with_pool(x, xp, arch);
        const double xs = x(0, 0), xps = xp(0, 0);
        const FcKernelValue fc = fc_ntk({&xs, 1}, {&xps, 1}, 3);
        CHECK(conv.theta == doctest::Approx(fc.theta).epsilon(1e-12));
        CHECK(conv.nngp == doctest::Approx(fc.nngp).epsilon(1e-12));
    }
}

TEST_CASE("pair symmetry of the pixel blocks") {
    std::mt19937_64 gen(9);
    const std::vector<int> ker = {-1, 0, 1};
    const Eigen::MatrixXd x = random_image(2, 5, gen);
    const Eigen::MatrixXd xp = random_image(2, 5, gen);

    ConvPairState ab = conv1d_input_state(x, xp, ker, Padding::Circular);
    ConvPairState ba = conv1d_input_state(xp, x, ker, Padding::Circular);
    for (int l = 0; l < 2; ++l) {
        ab = conv1d_layer_step(ab, ker, Padding::Circular);
        ba = conv1d_layer_step(ba, ker, Padding::Circular);
    }
    CHECK((ab.cov.q_xxp - ba.cov.q_xxp.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ab.theta - ba.theta.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("circular padding keeps translation equivariance") {
    std::mt19937_64 gen(31);
    const std::vector<int> ker = {-1, 0, 1};
    const int d = 4;
    const Eigen::MatrixXd x = random_image(2, d, gen);
    const Eigen::MatrixXd xp = random_image(2, d, gen);
    const int shift = 1;

    ConvPairState base = conv1d_input_state(x, xp, ker, Padding::Circular);
    ConvPairState moved = conv1d_input_state(roll(x, shift), roll(xp, shift), ker,
                                             Padding::Circular);
    for (int l = 0; l < 2; ++l) {
        base = conv1d_layer_step(base, ker, Padding::Circular);
        moved = conv1d_layer_step(moved, ker, Padding::Circular);
    }
    for (int s = 0; s < d; ++s) {
        for (int sp = 0; sp < d; ++sp) {
            CHECK(moved.theta((s + shift) % d, (sp + shift) % d) ==
                  doctest::Approx(base.theta(s, sp)).epsilon(1e-12));
        }
    }

    // The pooled kernel is invariant when both inputs shift together.
    const ArchSpec arch = ArchSpec::conv1d(3, 2, d, ker);
    const ConvKernelValue k0 = conv1d_ntk_with_pool(x, xp, arch);
    const ConvKernelValue k1 = conv1d_ntk_with_pool(roll(x, shift), roll(xp, shift), arch);
    CHECK(k1.theta == doctest::Approx(k0.theta).epsilon(1e-12));
}

TEST_CASE("identical constant inputs give a positive diagonal value") {
    const ArchSpec arch = ArchSpec::conv1d(2, 1, 4, {-1, 0, 1});
    const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 4, 0.7);
    const ConvKernelValue v = conv1d_ntk_with_pool(x, x, arch);
    CHECK(v.theta > 0.0);
    CHECK(v.nngp > 0.0);
}

TEST_CASE("zero padding drops boundary contributions") {
    std::mt19937_64 gen(41);
    const Eigen::MatrixXd x = random_image(1, 4, gen);
    const ArchSpec circ = ArchSpec::conv1d(2, 1, 4, {-1, 0, 1}, {}, Padding::Circular);
    const ArchSpec zero = ArchSpec::conv1d(2, 1, 4, {-1, 0, 1}, {}, Padding::Zero);
    const double vc = conv1d_ntk_with_pool(x, x, circ).theta;
    const double vz = conv1d_ntk_with_pool(x, x, zero).theta;
    CHECK(vz < vc);
    CHECK(vz > 0.0);
}

TEST_CASE("non-psd marginals are rejected") {
    ConvPairState state;
    state.cov.q_xx = Eigen::MatrixXd::Constant(1, 1, 1.0);
    state.cov.q_xpxp = Eigen::MatrixXd::Constant(1, 1, 1.0);
    state.cov.q_xxp = Eigen::MatrixXd::Constant(1, 1, 1.5);
    state.theta = state.cov.q_xxp;
    const std::vector<int> ker = {0};
    CHECK_THROWS_AS(conv1d_layer_step(state, ker, Padding::Circular), NumericError);
}
