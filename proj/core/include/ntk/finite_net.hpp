#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "ntk/arch.hpp"

namespace ntk {

enum class Activation : std::uint8_t { ReLU = 0, Softplus = 1, Identity = 2 };

/// Concrete weights of a small network with explicit forward and hand-written
/// reverse-mode gradient evaluation under either parameterization.
///
/// Dense nets keep the first layer unscaled (q_1 = x.x'); conv nets scale
/// every layer by 1/sqrt(fan-in channels), matching the analytic recursions.
/// Under standard parameterization the same factors move into the
/// initialization variance, which leaves the initial output distribution
/// unchanged but alters the gradient flow.
class FiniteNet {
public:
    // Per-input forward state kept for backprop and kernel contraction:
    // preactivations h_l and layer inputs x_{l-1}, both channels x pixels.
    struct Trace {
        std::vector<Eigen::MatrixXd> inputs;  // x_0 .. x_{L-1}
        std::vector<Eigen::MatrixXd> preacts; // h_1 .. h_L
        double output = 0.0;
    };

    // Backward signals delta_l = d f / d h_l for the scalar output.
    struct Signals {
        std::vector<Eigen::MatrixXd> deltas;
    };

    FiniteNet(ArchSpec arch, Parameterization param, std::uint64_t seed,
              Activation activation = Activation::ReLU, double softplus_beta = 20.0);

    const ArchSpec& arch() const { return arch_; }
    Parameterization parameterization() const { return param_; }
    std::uint64_t seed() const { return seed_; }
    Activation activation() const { return activation_; }
    int depth() const { return arch_.depth; }
    int pixels() const { return pixels_; }
    int width(int layer) const { return layer_widths_[layer]; } // n_0 .. n_L
    long param_count() const { return param_count_; }
    double forward_scale(int layer) const { return forward_scale_[layer]; }

    /// One input as channels x pixels (dense nets use pixels = 1).
    Eigen::MatrixXd input_from_row(const Eigen::VectorXd& row) const;

    double value(const Eigen::MatrixXd& x) const;
    Trace forward(const Eigen::MatrixXd& x) const;
    Signals backward(const Trace& trace) const;

    /// Flattened parameter gradient of the scalar output.
    Eigen::VectorXd gradient(const Eigen::MatrixXd& x) const;

    /// Forward-mode directional derivative of the output along a flattened
    /// parameter direction.
    double jvp(const Eigen::MatrixXd& x, const Eigen::VectorXd& direction) const;

    Eigen::VectorXd params() const;
    void set_params(const Eigen::VectorXd& flat);
    /// theta += alpha * flat_update
    void add_scaled(const Eigen::VectorXd& flat_update, double alpha);

    /// Accumulates alpha * grad f(x) into a flattened buffer without
    /// materializing a separate jacobian.
    void accumulate_gradient(const Trace& trace, const Signals& signals, double alpha,
                             Eigen::VectorXd& flat) const;

    /// sum_params grad f(x) . grad f(x'), contracted layer by layer via the
    /// factored form (delta outer activation); never builds an N-vector.
    double kernel_entry(const Trace& ta, const Signals& sa, const Trace& tb,
                        const Signals& sb) const;

    // Weight layout: weights_[l][r] is n_{l+1} x n_l for kernel offset r
    // (dense layers have the single offset 0).
    const std::vector<std::vector<Eigen::MatrixXd>>& weights() const { return weights_; }
    std::vector<std::vector<Eigen::MatrixXd>>& mutable_weights() { return weights_; }

    double act(double z) const;
    double act_deriv(double z) const;

private:
    Eigen::MatrixXd shifted_columns(const Eigen::MatrixXd& x, int offset) const;

    ArchSpec arch_;
    Parameterization param_;
    std::uint64_t seed_;
    Activation activation_;
    double beta_;
    int pixels_;
    std::vector<int> layer_widths_;   // n_0 .. n_L (n_L = 1)
    std::vector<double> forward_scale_;
    std::vector<std::vector<Eigen::MatrixXd>> weights_;
    long param_count_ = 0;
};

/// "NTKW" checkpoint: magic, u32 version, u64 arch fingerprint, u64 count,
/// flat little-endian f64 parameter vector.
void save_checkpoint(const FiniteNet& net, const std::string& path);
void load_checkpoint(FiniteNet& net, const std::string& path);

} // namespace ntk
