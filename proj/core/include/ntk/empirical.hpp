#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "ntk/finite_net.hpp"
#include "ntk/gram.hpp"

namespace ntk {

/// Empirical NTK by jacobian contraction: Theta(x, x') = grad f(x) . grad f(x').
/// Rows of a and b are samples. When a and b alias the same data the result
/// is exactly symmetric.
Eigen::MatrixXd empirical_ntk_cross(const FiniteNet& net, const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& b);

GramMatrix empirical_ntk_contraction(const FiniteNet& net, const Eigen::MatrixXd& x);

/// Theta(X, X') v computed as one batched vector-jacobian product over X'
/// followed by a jacobian-vector product per row of X; never materializes the
/// kernel. Matches contraction-then-multiply to machine precision.
Eigen::VectorXd empirical_ntk_vector_product(const FiniteNet& net, const Eigen::MatrixXd& x,
                                             const Eigen::MatrixXd& xp, const Eigen::VectorXd& v);

/// Monte-Carlo kernel estimate: mean of M empirical kernels over independent
/// initializations with seeds derived from root_seed.
GramMatrix mc_kernel_estimate(const ArchSpec& arch, Parameterization param, int num_samples,
                              const Eigen::MatrixXd& x, std::uint64_t root_seed,
                              Activation activation = Activation::ReLU);

/// rho(H, H') = 1 - tr(H H'^T) / sqrt(tr(H H^T) tr(H' H'^T)), in [0, 2].
double kernel_distance(const Eigen::MatrixXd& h, const Eigen::MatrixXd& hp);

/// Two-layer ReLU net f(x) = n^{-1/2} sum_i a_i [w_i^T x]_+ with sign readout
/// weights, trained on the input weights only. Its kernel depends only on the
/// hidden activation patterns.
struct TwoLayerSignNet {
    Eigen::MatrixXd w; // width x input_dim
    Eigen::VectorXd a; // entries in {-1, +1}

    static TwoLayerSignNet create(int width, int input_dim, std::uint64_t seed);

    int width() const { return static_cast<int>(w.rows()); }
    double value(const Eigen::VectorXd& x) const;
    /// Gradient with respect to the input weights, flattened row-major.
    Eigen::VectorXd input_weight_gradient(const Eigen::VectorXd& x) const;
};

/// Theta(x_k, x_l) = (1/n) sum_i [w_i.x_k > 0][w_i.x_l > 0] x_k.x_l; equals
/// the jacobian contraction restricted to the input weights.
GramMatrix activation_pattern_gram(const TwoLayerSignNet& net, const Eigen::MatrixXd& x);

} // namespace ntk
