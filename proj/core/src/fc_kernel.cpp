#include "ntk/fc_kernel.hpp"

#include "ntk/errors.hpp"
#include "ntk/flops.hpp"

namespace ntk {

FcPairState fc_layer_step(const FcPairState& state, const DualActivation& act) {
    const Cov2& prev = state.cov;
    FcPairState next;
    next.cov.q11 = act.nlin({prev.q11, prev.q11, prev.q11});
    next.cov.q22 = act.nlin({prev.q22, prev.q22, prev.q22});
    next.cov.q12 = act.nlin(prev);
    next.theta = next.cov.q12 + state.theta * act.dnlin(prev);
    next.layer_index = state.layer_index + 1;
    return next;
}

FcKernelValue fc_ntk_from_cov(const Cov2& first_layer, int depth, const DualActivation& act) {
    if (depth < 1) throw ConfigError("fc depth must be >= 1");
    validate_cov2(first_layer);
    FcPairState state{first_layer, first_layer.q12, 1};
    for (int l = 1; l < depth; ++l) state = fc_layer_step(state, act);
    return {state.theta, state.cov.q12};
}

FcKernelValue fc_ntk(std::span<const double> x, std::span<const double> xp, int depth,
                     const DualActivation& act) {
    if (x.size() != xp.size()) throw ConfigError("fc_ntk: input dimensions differ");
    Cov2 q1;
    for (std::size_t i = 0; i < x.size(); ++i) {
        q1.q11 += x[i] * x[i];
        q1.q22 += xp[i] * xp[i];
        q1.q12 += x[i] * xp[i];
    }
    flops::add(6 * x.size());
    return fc_ntk_from_cov(q1, depth, act);
}

} // namespace ntk
