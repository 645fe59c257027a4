#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "ntk/finite_net.hpp"

namespace ntk {

enum class TrainLoss : std::uint8_t { Square = 0, Logistic = 1 };

struct TrainOptions {
    double eta = 1e-2;
    long steps = 100;
    TrainLoss loss = TrainLoss::Square;
    long record_kernel_every = 0; // 0 disables kernel recording
};

struct TrainTrajectory {
    std::vector<double> losses;                  // per step, including step 0
    std::vector<long> record_steps;              // steps with kernel snapshots
    std::vector<Eigen::MatrixXd> kernels;        // normalized under standard param
    std::vector<double> kernel_velocity;         // rho between consecutive records
    std::optional<long> diverged_at;             // step index if training blew up
    Eigen::VectorXd final_predictions;
};

/// Full-batch gradient descent on the given net (which owns its weights for
/// the duration of the run). Records the empirical NTK every
/// record_kernel_every steps; under standard parameterization the recorded
/// kernel is Theta-hat / n with n the first hidden width, which keeps it O(1)
/// in width (the velocity itself is scale-invariant).
TrainTrajectory gradient_flow_train(FiniteNet& net, const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& y, const TrainOptions& options);

struct PiecewiseOptions {
    double eta = 1e-2;
    double horizon = 1.0;
    std::vector<double> refresh_times; // strictly inside (0, horizon)
    double ridge = 0.0;                // fallback shift when H is singular
};

struct PiecewiseTrajectory {
    std::vector<double> segment_times;          // boundaries: 0, refreshes..., horizon
    std::vector<Eigen::VectorXd> weights;       // parameters at each boundary
    Eigen::VectorXd final_train_predictions;
};

/// Integrates the linearized weight dynamics
/// theta <- theta + Z H^{-1} (I - e^{-eta dt H}) (y - u) per segment,
/// recomputing Z, H, u at every refresh time.
PiecewiseTrajectory piecewise_linearized_train(FiniteNet& net, const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y,
                                               const PiecewiseOptions& options);

} // namespace ntk
