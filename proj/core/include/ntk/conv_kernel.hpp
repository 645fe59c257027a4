#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "ntk/arch.hpp"
#include "ntk/gauss.hpp"

namespace ntk {

/// Pixel-resolved covariance of one input pair for a conv stack: the three
/// d x d blocks of the stacked 2d x 2d covariance.
struct PixelCov {
    Eigen::MatrixXd q_xx;   // q^{s,s'}(x, x)
    Eigen::MatrixXd q_xpxp; // q^{s,s'}(x', x')
    Eigen::MatrixXd q_xxp;  // q^{s,s'}(x, x')

    int pixels() const { return static_cast<int>(q_xx.rows()); }
};

struct ConvPairState {
    PixelCov cov;
    Eigen::MatrixXd theta; // Theta_{:l}^{s,s'}(x, x')
    int layer_index = 0;
};

/// First-layer covariance and tangent state from a pair of inputs given as
/// channels x pixels matrices.
ConvPairState conv1d_input_state(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                                 std::span<const int> offsets, Padding padding);

/// One ReLU + conv layer. Covariances propagate via the summed pair
/// expectations; theta contracts the previous tangent over offset pairs.
ConvPairState conv1d_layer_step(const ConvPairState& state, std::span<const int> offsets,
                                Padding padding,
                                const DualActivation& act = relu_dual_activation());

struct ConvKernelValue {
    double theta = 0.0;
    double nngp = 0.0;
};

/// Limit NTK and NNGP of the depth-L conv net with average-pool readout,
/// evaluated on a pair of channels x pixels inputs.
ConvKernelValue conv1d_ntk_with_pool(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xp,
                                     const ArchSpec& arch,
                                     const DualActivation& act = relu_dual_activation());

} // namespace ntk
