#include "ntk/training.hpp"

#include <cmath>

#include "ntk/empirical.hpp"
#include "ntk/errors.hpp"
#include "ntk/spectral_decomp.hpp"

namespace ntk {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double loss_value(TrainLoss loss, double y, double f) {
    if (loss == TrainLoss::Square) return 0.5 * (y - f) * (y - f);
    // Sigmoid cross-entropy on logits, y in {0,1}; the stable form.
    return std::max(f, 0.0) - f * y + std::log1p(std::exp(-std::abs(f)));
}

// Negative loss derivative in the logit: the gradient-flow drive term.
double loss_drive(TrainLoss loss, double y, double f) {
    if (loss == TrainLoss::Square) return y - f;
    return y - sigmoid(f);
}

} // namespace

TrainTrajectory gradient_flow_train(FiniteNet& net, const Eigen::MatrixXd& x,
                                    const Eigen::VectorXd& y, const TrainOptions& options) {
    if (x.rows() != y.size()) throw ConfigError("inputs and labels disagree on sample count");
    if (options.eta <= 0.0) throw ConfigError("eta must be positive");
    const int m = static_cast<int>(x.rows());
    const double norm =
        net.parameterization() == Parameterization::Standard && net.depth() > 1
            ? static_cast<double>(net.width(1))
            : 1.0;

    TrainTrajectory traj;
    auto record_kernel = [&](long step) {
        if (options.record_kernel_every <= 0) return;
        if (step % options.record_kernel_every != 0) return;
        Eigen::MatrixXd kernel = empirical_ntk_cross(net, x, x) / norm;
        if (!traj.kernels.empty()) {
            traj.kernel_velocity.push_back(kernel_distance(traj.kernels.back(), kernel));
        }
        traj.record_steps.push_back(step);
        traj.kernels.push_back(std::move(kernel));
    };

    Eigen::VectorXd update(net.param_count());
    Eigen::VectorXd preds(m);
    double initial_loss = 0.0;
    for (long step = 0; step <= options.steps; ++step) {
        update.setZero();
        double total_loss = 0.0;
        std::vector<FiniteNet::Trace> traces;
        traces.reserve(m);
        for (int i = 0; i < m; ++i) {
            traces.push_back(net.forward(net.input_from_row(x.row(i).transpose())));
            preds(i) = traces.back().output;
            total_loss += loss_value(options.loss, y(i), preds(i));
        }
        traj.losses.push_back(total_loss);
        if (step == 0) initial_loss = total_loss;
        if (!std::isfinite(total_loss) || total_loss > 1e6 * std::max(initial_loss, 1.0)) {
            traj.diverged_at = step;
            break;
        }
        record_kernel(step);
        if (step == options.steps) break;
        for (int i = 0; i < m; ++i) {
            const FiniteNet::Signals sig = net.backward(traces[i]);
            net.accumulate_gradient(traces[i], sig, loss_drive(options.loss, y(i), preds(i)),
                                    update);
        }
        net.add_scaled(update, options.eta);
    }
    traj.final_predictions = preds;
    return traj;
}

PiecewiseTrajectory piecewise_linearized_train(FiniteNet& net, const Eigen::MatrixXd& x,
                                               const Eigen::VectorXd& y,
                                               const PiecewiseOptions& options) {
    if (x.rows() != y.size()) throw ConfigError("inputs and labels disagree on sample count");
    if (options.eta <= 0.0 || options.horizon <= 0.0) {
        throw ConfigError("eta and horizon must be positive");
    }
    const int m = static_cast<int>(x.rows());

    std::vector<double> boundaries = {0.0};
    for (double t : options.refresh_times) {
        if (t <= 0.0 || t >= options.horizon) throw ConfigError("refresh times must be in (0, T)");
        boundaries.push_back(t);
    }
    boundaries.push_back(options.horizon);
    for (std::size_t i = 1; i < boundaries.size(); ++i) {
        if (boundaries[i] <= boundaries[i - 1]) throw ConfigError("refresh times must increase");
    }

    PiecewiseTrajectory traj;
    traj.segment_times = boundaries;
    traj.weights.push_back(net.params());

    for (std::size_t seg = 0; seg + 1 < boundaries.size(); ++seg) {
        const double dt = boundaries[seg + 1] - boundaries[seg];
        // Z: N x m jacobian at the current weights; H = Z^T Z.
        Eigen::MatrixXd z(net.param_count(), m);
        Eigen::VectorXd u(m);
        for (int i = 0; i < m; ++i) {
            const Eigen::MatrixXd xi = net.input_from_row(x.row(i).transpose());
            const FiniteNet::Trace trace = net.forward(xi);
            const FiniteNet::Signals sig = net.backward(trace);
            u(i) = trace.output;
            Eigen::VectorXd col = Eigen::VectorXd::Zero(net.param_count());
            net.accumulate_gradient(trace, sig, 1.0, col);
            z.col(i) = col;
        }
        Eigen::MatrixXd h = z.transpose() * z;
        SpectralDecomposition decomp = decompose(h);
        const double eps_inv = 1e-10 * std::max(decomp.lambdas(0), 0.0);
        if (decomp.lambdas(m - 1) <= eps_inv) {
            if (options.ridge <= 0.0) {
                throw NumericError("piecewise train: singular kernel and no ridge configured");
            }
            h.diagonal().array() += options.ridge;
            decomp = decompose(h);
        }
        const Eigen::VectorXd gain = decomp.apply_function(
            y - u, [&](double lam) { return (1.0 - std::exp(-options.eta * dt * lam)) / lam; });
        const Eigen::VectorXd theta_update = z * gain;
        net.add_scaled(theta_update, 1.0);
        traj.weights.push_back(net.params());
    }

    Eigen::VectorXd preds(m);
    for (int i = 0; i < m; ++i) {
        preds(i) = net.value(net.input_from_row(x.row(i).transpose()));
    }
    traj.final_train_predictions = preds;
    return traj;
}

} // namespace ntk
