#include "ntk/dynamics.hpp"

#include <cmath>
#include <limits>

#include "ntk/errors.hpp"

namespace ntk {

namespace {

// e^{-lambda t} with the null-space convention: frozen modes decay by 1.
double decay_factor(double lambda, double t, double null_threshold) {
    if (lambda <= null_threshold) return 1.0;
    if (std::isinf(t)) return 0.0;
    return std::exp(-lambda * t);
}

void require_invertible(const SpectralDecomposition& decomp) {
    const double eps_inv = 1e-10 * std::max(decomp.lambdas(0), 0.0);
    if (decomp.size() == 0 || decomp.lambdas(decomp.size() - 1) <= eps_inv) {
        throw NumericError(
            "gram matrix is numerically singular; use a ridge-regularized solve instead");
    }
}

} // namespace

Eigen::VectorXd exact_train_predictions(const SpectralDecomposition& decomp,
                                        const Eigen::VectorXd& y, const Eigen::VectorXd& f0,
                                        double t) {
    if (t < 0.0) throw ConfigError("time must be nonnegative");
    const double null_thr = decomp.null_threshold();
    const Eigen::VectorXd residual0 = f0 - y;
    return y + decomp.apply_function(
                   residual0, [&](double lam) { return decay_factor(lam, t, null_thr); });
}

std::vector<int> frozen_modes(const SpectralDecomposition& decomp) {
    std::vector<int> out;
    for (int k = 0; k < decomp.size(); ++k) {
        if (decomp.is_null_mode(k)) out.push_back(k);
    }
    return out;
}

double exact_test_prediction(const Eigen::VectorXd& theta_row, const SpectralDecomposition& decomp,
                             const Eigen::VectorXd& y, const Eigen::VectorXd& f0_train,
                             double f0_test, double t) {
    if (t < 0.0) throw ConfigError("time must be nonnegative");
    require_invertible(decomp);
    const Eigen::VectorXd weights =
        decomp.apply_function(f0_train - y, [&](double lam) {
            const double e = std::isinf(t) ? 0.0 : std::exp(-lam * t);
            return (1.0 - e) / lam;
        });
    return f0_test - theta_row.dot(weights);
}

ModeDynamics discrete_mode_dynamics(const SpectralDecomposition& decomp, const Eigen::VectorXd& y,
                                    const Eigen::VectorXd& u0, double eta, long steps) {
    if (eta <= 0.0) throw ConfigError("learning rate must be positive");
    if (steps < 0) throw ConfigError("step count must be nonnegative");
    const int m = decomp.size();
    ModeDynamics out;
    out.coefficients.resize(m);
    out.diverged.assign(m, false);
    for (int k = 0; k < m; ++k) {
        const double target = y.dot(decomp.vectors.col(k));
        const double factor = std::pow(1.0 - eta * decomp.lambdas(k), static_cast<double>(steps));
        out.coefficients(k) = target + factor * (u0(k) - target);
        out.diverged[k] = eta * decomp.lambdas(k) >= 2.0;
    }
    return out;
}

double max_stable_lr(const SpectralDecomposition& decomp) {
    if (decomp.size() == 0 || decomp.lambdas(0) <= 0.0) {
        throw NumericError("max_stable_lr requires a nonzero kernel");
    }
    return 2.0 / decomp.lambdas(0);
}

double trainability_condition_number(const SpectralDecomposition& decomp) {
    if (decomp.size() == 0 || decomp.lambdas(0) <= 0.0) {
        throw NumericError("condition number requires a nonzero kernel");
    }
    return std::max(decomp.lambdas(decomp.size() - 1), 0.0) / decomp.lambdas(0);
}

GpPosterior nngp_posterior(const Eigen::MatrixXd& k_train, const Eigen::MatrixXd& k_cross,
                           const Eigen::MatrixXd& k_test, const Eigen::VectorXd& y, double ridge) {
    if (ridge < 0.0) throw ConfigError("ridge must be nonnegative");
    Eigen::MatrixXd shifted = k_train;
    shifted.diagonal().array() += ridge;
    const SpectralDecomposition decomp = decompose(shifted);
    require_invertible(decomp);
    const Eigen::MatrixXd inv = decomp.vectors * decomp.lambdas.cwiseInverse().asDiagonal() *
                                decomp.vectors.transpose();
    GpPosterior post;
    post.mean = k_cross * (inv * y);
    post.covariance = k_test - k_cross * inv * k_cross.transpose();
    return post;
}

GpPosterior ntk_gp_moments(const Eigen::MatrixXd& theta_train, const Eigen::MatrixXd& nngp_train,
                           const Eigen::MatrixXd& theta_cross, const Eigen::MatrixXd& nngp_cross,
                           const Eigen::MatrixXd& nngp_test, const Eigen::VectorXd& y, double t) {
    if (t < 0.0) throw ConfigError("time must be nonnegative");
    const SpectralDecomposition decomp = decompose(theta_train);
    if (t > 0.0) require_invertible(decomp);

    // B = Theta^{-1} (I - e^{-Theta t}); at t=0 this is zero and the moments
    // are the prior ones.
    const int m = decomp.size();
    Eigen::VectorXd g(m);
    for (int k = 0; k < m; ++k) {
        const double lam = decomp.lambdas(k);
        if (t == 0.0) {
            g(k) = 0.0;
        } else {
            const double e = std::isinf(t) ? 0.0 : std::exp(-lam * t);
            g(k) = (1.0 - e) / lam;
        }
    }
    const Eigen::MatrixXd b_matrix =
        decomp.vectors * g.asDiagonal() * decomp.vectors.transpose();
    const Eigen::MatrixXd a = theta_cross * b_matrix;

    GpPosterior out;
    out.mean = a * y;
    out.covariance = nngp_test - a * nngp_cross.transpose() - nngp_cross * a.transpose() +
                     a * nngp_train * a.transpose();
    return out;
}

double width_certificate(long m, double lambda0, double delta, WidthBoundVariant variant, double c,
                         double c0) {
    if (m < 1) throw ConfigError("m must be >= 1");
    if (!(lambda0 > 0.0)) throw ConfigError("lambda0 must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
    if (!(c > 0.0 && c0 > 0.0)) throw ConfigError("constants must be positive");
    const double md = static_cast<double>(m);
    const double l2 = lambda0 * lambda0;
    const double l4 = l2 * l2;
    const double second = c0 * md * md / l2 * std::log(2.0 * md / delta);
    double first = 0.0;
    if (variant == WidthBoundVariant::CubicDelta) {
        first = c * std::pow(md, 6) / (l4 * delta * delta * delta);
    } else {
        const double lg = std::log(md / delta);
        first = c * std::pow(md, 4) / l4 * lg * lg * lg;
    }
    return std::max(first, second);
}

GeneralizationBound generalization_bound(const Eigen::MatrixXd& h_gram, const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& u0, long n, double delta,
                                         double delta_tilde) {
    if (n < 1) throw ConfigError("n must be >= 1");
    if (!(delta > 0.0 && delta < 1.0) || !(delta_tilde > 0.0 && delta_tilde < 1.0)) {
        throw ConfigError("delta and delta_tilde must lie in (0,1)");
    }
    const long m = y.size();
    const SpectralDecomposition decomp = decompose(h_gram);
    require_invertible(decomp);
    const Eigen::VectorXd residual = y - u0;
    const Eigen::VectorXd h_inv_res =
        decomp.apply_function(residual, [](double lam) { return 1.0 / lam; });
    GeneralizationBound out;
    out.b_quadratic = residual.dot(h_inv_res);
    out.b_sqrt = std::sqrt(std::max(out.b_quadratic, 0.0));
    out.j_hat = std::max<long>(1, static_cast<long>(std::ceil(out.b_quadratic)));
    const double b_hat = 1.0 + out.b_quadratic;
    out.rademacher = b_hat / std::sqrt(static_cast<double>(m)) *
                     std::sqrt(0.5 + std::sqrt(std::log(1.0 / delta) / (2.0 * n)));
    const double delta_j =
        delta_tilde * 6.0 / (M_PI * M_PI * static_cast<double>(out.j_hat) * out.j_hat);
    out.confidence = std::sqrt(std::log(1.0 / delta_j) / (2.0 * m));
    out.bound = out.rademacher + out.confidence;
    return out;
}

} // namespace ntk
