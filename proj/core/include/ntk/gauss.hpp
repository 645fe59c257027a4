#pragma once

#include <functional>

namespace ntk {

/// Bivariate Gaussian covariance block for one pair of preactivations.
/// q11 = Var z(x), q22 = Var z(x'), q12 = Cov(z(x), z(x')).
struct Cov2 {
    double q11 = 0.0;
    double q22 = 0.0;
    double q12 = 0.0;
};

/// Throws NumericError if the 2x2 covariance is not PSD beyond the relative
/// tolerance 1e-12 * q11 * q22, or if a variance is negative.
void validate_cov2(const Cov2& sigma);

/// E [u]_+ [v]_+ over N(0, sigma). Result lies in [0, sqrt(q11*q22)/2].
/// Degenerate (zero-variance) inputs yield 0.
double relu_prod_expectation(const Cov2& sigma);

/// E 1_{u>0} 1_{v>0} over N(0, sigma). Result lies in [0, 1/2].
double relu_deriv_expectation(const Cov2& sigma);

/// Pair of Gaussian expectations driving covariance and tangent propagation:
/// (E phi(u) phi(v), E phi'(u) phi'(v)). The propagation recursions only see
/// this interface, so activations other than ReLU can be plugged in.
struct DualActivation {
    std::function<double(const Cov2&)> nlin;
    std::function<double(const Cov2&)> dnlin;
};

const DualActivation& relu_dual_activation();

} // namespace ntk
