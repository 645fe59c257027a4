#include "ntk/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ntk/errors.hpp"
#include "ntk/flops.hpp"

namespace ntk {

void validate_cov2(const Cov2& sigma) {
    if (!(sigma.q11 >= 0.0) || !(sigma.q22 >= 0.0)) {
        std::ostringstream msg;
        msg << "covariance has negative variance: q11=" << sigma.q11 << " q22=" << sigma.q22;
        throw NumericError(msg.str());
    }
    const double prod = sigma.q11 * sigma.q22;
    if (sigma.q12 * sigma.q12 > prod + 1e-12 * prod) {
        std::ostringstream msg;
        msg << "covariance is not PSD: q12^2=" << sigma.q12 * sigma.q12 << " exceeds q11*q22="
            << prod;
        throw NumericError(msg.str());
    }
}

namespace {

// Correlation clamped to [-1,1]; floating-point drift at perfect correlation
// would otherwise push the arccos argument out of domain.
double clamped_correlation(const Cov2& sigma) {
    const double denom = std::sqrt(sigma.q11 * sigma.q22);
    return std::clamp(sigma.q12 / denom, -1.0, 1.0);
}

} // namespace

double relu_prod_expectation(const Cov2& sigma) {
    validate_cov2(sigma);
    flops::count_phi_expectation();
    flops::add(flops::kPhiExpectationCost);
    if (sigma.q11 == 0.0 || sigma.q22 == 0.0) return 0.0;
    const double rho = clamped_correlation(sigma);
    const double disc = std::max(sigma.q11 * sigma.q22 - sigma.q12 * sigma.q12, 0.0);
    return (sigma.q12 * (M_PI - std::acos(rho)) + std::sqrt(disc)) / (2.0 * M_PI);
}

double relu_deriv_expectation(const Cov2& sigma) {
    validate_cov2(sigma);
    flops::count_dphi_expectation();
    flops::add(flops::kDphiExpectationCost);
    if (sigma.q11 == 0.0 || sigma.q22 == 0.0) return 0.0;
    const double rho = clamped_correlation(sigma);
    return (M_PI - std::acos(rho)) / (2.0 * M_PI);
}

const DualActivation& relu_dual_activation() {
    static const DualActivation act{
        [](const Cov2& s) { return relu_prod_expectation(s); },
        [](const Cov2& s) { return relu_deriv_expectation(s); },
    };
    return act;
}

} // namespace ntk
