#include "ntk/conv_kernel.hpp"

#include "ntk/errors.hpp"
#include "ntk/flops.hpp"

namespace ntk {

namespace {

// Maps pixel index s+r onto [0,d). Returns -1 for out-of-range under zero
// padding; the padded region carries zero signal and ReLU'(0) = 0, so those
// terms drop out of every sum.
inline int pad_index(int p, int d, Padding padding) {
    if (p >= 0 && p < d) return p;
    if (padding == Padding::Circular) {
        int q = p % d;
        return q < 0 ? q + d : q;
    }
    return -1;
}

Eigen::MatrixXd pair_expectation_table(const Eigen::MatrixXd& var_a, const Eigen::MatrixXd& var_b,
                                       const Eigen::MatrixXd& cov,
                                       const std::function<double(const Cov2&)>& e) {
    const int d = static_cast<int>(cov.rows());
    Eigen::MatrixXd table(d, d);
    for (int p = 0; p < d; ++p) {
        for (int pp = 0; pp < d; ++pp) {
            table(p, pp) = e({var_a(p, p), var_b(pp, pp), cov(p, pp)});
        }
    }
    return table;
}

} // namespace

ConvPairState conv1d_input_state(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                                 std::span<const int> offsets, Padding padding) {
    if (x.rows() != xp.rows() || x.cols() != xp.cols()) {
        throw ConfigError("conv pair: input shapes differ");
    }
    const int n0 = static_cast<int>(x.rows());
    const int d = static_cast<int>(x.cols());

    auto first_cov = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(d, d);
        for (int s = 0; s < d; ++s) {
            for (int sp = 0; sp < d; ++sp) {
                double acc = 0.0;
                for (int r : offsets) {
                    const int i = pad_index(s + r, d, padding);
                    const int j = pad_index(sp + r, d, padding);
                    if (i < 0 || j < 0) continue;
                    acc += a.col(i).dot(b.col(j));
                }
                q(s, sp) = acc / n0;
            }
        }
        return q;
    };

    ConvPairState state;
    state.cov.q_xx = first_cov(x, x);
    state.cov.q_xpxp = first_cov(xp, xp);
    state.cov.q_xxp = first_cov(x, xp);
    state.theta = state.cov.q_xxp;
    state.layer_index = 1;
    flops::add(static_cast<std::uint64_t>(3) * d * d * offsets.size() * (2 * n0 + 1));
    return state;
}

ConvPairState conv1d_layer_step(const ConvPairState& state, std::span<const int> offsets,
                                Padding padding, const DualActivation& act) {
    const PixelCov& prev = state.cov;
    const int d = prev.pixels();

    // Pairwise Gaussian marginals suffice: both expectations depend only on
    // the (p, p') variance/covariance triple extracted from the blocks.
    const Eigen::MatrixXd e_xx = pair_expectation_table(prev.q_xx, prev.q_xx, prev.q_xx, act.nlin);
    const Eigen::MatrixXd e_pp =
        pair_expectation_table(prev.q_xpxp, prev.q_xpxp, prev.q_xpxp, act.nlin);
    const Eigen::MatrixXd e_xp =
        pair_expectation_table(prev.q_xx, prev.q_xpxp, prev.q_xxp, act.nlin);
    const Eigen::MatrixXd ed_xp =
        pair_expectation_table(prev.q_xx, prev.q_xpxp, prev.q_xxp, act.dnlin);

    auto convolve = [&](const Eigen::MatrixXd& table) {
        Eigen::MatrixXd q = Eigen::MatrixXd::Zero(d, d);
        for (int s = 0; s < d; ++s) {
            for (int sp = 0; sp < d; ++sp) {
                double acc = 0.0;
                for (int r : offsets) {
                    const int i = pad_index(s + r, d, padding);
                    const int j = pad_index(sp + r, d, padding);
                    if (i < 0 || j < 0) continue;
                    acc += table(i, j);
                }
                q(s, sp) = acc;
            }
        }
        return q;
    };

    ConvPairState next;
    next.cov.q_xx = convolve(e_xx);
    next.cov.q_xpxp = convolve(e_pp);
    next.cov.q_xxp = convolve(e_xp);

    next.theta = next.cov.q_xxp;
    for (int s = 0; s < d; ++s) {
        for (int sp = 0; sp < d; ++sp) {
            double acc = 0.0;
            for (int r : offsets) {
                const int i = pad_index(s + r, d, padding);
                if (i < 0) continue;
                for (int rp : offsets) {
                    const int j = pad_index(sp + rp, d, padding);
                    if (j < 0) continue;
                    acc += state.theta(i, j) * ed_xp(i, j);
                }
            }
            next.theta(s, sp) += acc;
        }
    }
    next.layer_index = state.layer_index + 1;
    flops::add(static_cast<std::uint64_t>(2) * d * d * offsets.size() * offsets.size() +
               static_cast<std::uint64_t>(3) * d * d * offsets.size());
    return next;
}

ConvKernelValue conv1d_ntk_with_pool(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                                     const ArchSpec& arch, const DualActivation& act) {
    arch.validate();
    if (!arch.is_conv()) throw ConfigError("conv1d_ntk_with_pool expects a conv architecture");
    if (x.rows() != arch.input_dim || x.cols() != arch.pixels) {
        throw ConfigError("conv1d_ntk_with_pool: input shape does not match architecture");
    }
    ConvPairState state = conv1d_input_state(x, xp, arch.kernel_offsets, arch.padding);
    for (int l = 1; l < arch.depth; ++l) {
        state = conv1d_layer_step(state, arch.kernel_offsets, arch.padding, act);
    }
    const double d2 = static_cast<double>(arch.pixels) * arch.pixels;
    ConvKernelValue v;
    v.theta = state.theta.sum() / d2;
    v.nngp = state.cov.q_xxp.sum() / d2;
    flops::add(static_cast<std::uint64_t>(2) * arch.pixels * arch.pixels);
    return v;
}

} // namespace ntk
