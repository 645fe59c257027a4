#pragma once

#include <Eigen/Core>
#include <vector>

#include "ntk/gram.hpp"
#include "ntk/spectral_decomp.hpp"

namespace ntk {

// Exact solutions of linearized training under square loss. Matrix
// exponentials always go through the eigendecomposition so one decomposition
// serves every t.

/// Train-set predictions f_t = y + e^{-Theta t}(f0 - y). Modes at or below
/// the null threshold stay frozen at their initial value. t may be +inf.
Eigen::VectorXd exact_train_predictions(const SpectralDecomposition& decomp,
                                        const Eigen::VectorXd& y, const Eigen::VectorXd& f0,
                                        double t);

/// Indices of modes frozen by the null-space convention.
std::vector<int> frozen_modes(const SpectralDecomposition& decomp);

/// Test prediction f_t(x) = f0(x) - Theta(x,X) Theta^{-1} (I - e^{-Theta t}) (f0 - y).
/// Requires min eigenvalue > 1e-10 * lambda_1; throws NumericError suggesting
/// a ridge solve otherwise.
double exact_test_prediction(const Eigen::VectorXd& theta_row, const SpectralDecomposition& decomp,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& f0_train,
                             double f0_test, double t);

struct ModeDynamics {
    Eigen::VectorXd coefficients; // u_{t,k}
    std::vector<bool> diverged;   // eta >= 2 / lambda_k
};

/// Discrete gradient descent per eigenmode:
/// u_{t,k} = y^T v_k + (1 - eta lambda_k)^t (u_{0,k} - y^T v_k).
/// u0 holds initial mode coefficients v_k^T f_0.
ModeDynamics discrete_mode_dynamics(const SpectralDecomposition& decomp, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& u0, double eta, long steps);

/// Largest stable learning rate 2 / lambda_1.
double max_stable_lr(const SpectralDecomposition& decomp);

/// kappa = lambda_m / lambda_1 in [0,1]; small values mean poor trainability.
double trainability_condition_number(const SpectralDecomposition& decomp);

struct GpPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Bayesian posterior of the NNGP prior: mean = K(x,X) K^{-1} y,
/// cov = K(x,x') - K(x,X) K^{-1} K(X,x'). cross is test x train.
GpPosterior nngp_posterior(const Eigen::MatrixXd& k_train, const Eigen::MatrixXd& k_cross,
                           const Eigen::MatrixXd& k_test, const Eigen::VectorXd& y,
                           double ridge = 0.0);

/// Moments of the NTK-GP f_t at the test points; t may be +inf, where the
/// theta == nngp case reduces to the Bayesian posterior.
GpPosterior ntk_gp_moments(const Eigen::MatrixXd& theta_train, const Eigen::MatrixXd& nngp_train,
                           const Eigen::MatrixXd& theta_cross, const Eigen::MatrixXd& nngp_cross,
                           const Eigen::MatrixXd& nngp_test, const Eigen::VectorXd& y, double t);

enum class WidthBoundVariant {
    CubicDelta, // max(C m^6 / (lambda0^4 delta^3), C0 m^2/lambda0^2 log(2m/delta))
    LogDelta,   // max(C m^4 / lambda0^4 log^3(m/delta), C0 m^2/lambda0^2 log(2m/delta))
};

/// Width threshold guaranteeing the kernel stays at lambda0/2 with
/// probability 1-delta. The constants are existential in the source theorems,
/// so the caller supplies them (default 1).
double width_certificate(long m, double lambda0, double delta, WidthBoundVariant variant,
                         double c = 1.0, double c0 = 1.0);

struct GeneralizationBound {
    double bound = 0.0;       // rademacher + confidence terms
    double rademacher = 0.0;
    double confidence = 0.0;
    double b_quadratic = 0.0; // B = (y-u0)^T H^{-1} (y-u0)
    double b_sqrt = 0.0;      // also exposed: the radius reading of B
    long j_hat = 1;
};

/// Post-training generalization bound for the fixed-activation-pattern model
/// family. Union bound over B_j = j with delta_j = delta_tilde * 6 / (pi j)^2.
/// B enters the Rademacher term as 1 + B, as displayed in the source; the
/// alternative sqrt(B) radius is reported as a diagnostic because the two
/// readings differ.
GeneralizationBound generalization_bound(const Eigen::MatrixXd& h_gram, const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& u0, long n, double delta,
                                         double delta_tilde);

} // namespace ntk
