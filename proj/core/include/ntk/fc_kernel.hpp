#pragma once

#include <span>

#include "ntk/gauss.hpp"

namespace ntk {

/// Propagation state for one input pair (x, x') through a fully-connected
/// stack: the running covariance triple and the accumulated tangent kernel
/// Theta_{:l}(x, x') of the first l layers.
struct FcPairState {
    Cov2 cov;
    double theta = 0.0;
    int layer_index = 0;
};

/// One ReLU + dense layer: cov propagates through the pair expectations and
/// theta picks up the derivative factor. Pure; throws on invalid covariance.
FcPairState fc_layer_step(const FcPairState& state,
                          const DualActivation& act = relu_dual_activation());

struct FcKernelValue {
    double theta = 0.0; // limit NTK
    double nngp = 0.0;  // q_L
};

/// L-layer limit kernel from the first-layer covariance triple
/// (q11, q22, q12) = (x.x, x'.x', x.x').
FcKernelValue fc_ntk_from_cov(const Cov2& first_layer, int depth,
                              const DualActivation& act = relu_dual_activation());

/// L-layer limit NTK and NNGP of the bias-free fully-connected ReLU net.
FcKernelValue fc_ntk(std::span<const double> x, std::span<const double> xp, int depth,
                     const DualActivation& act = relu_dual_activation());

} // namespace ntk
