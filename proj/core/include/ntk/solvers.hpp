#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ntk/gram.hpp"

namespace ntk {

/// Representer-form solution f(x) = sum_j alpha_j K(x, anchor_j).
struct RidgeSolution {
    Eigen::VectorXd alpha;
    double lambda = 0.0;
    std::vector<int> anchors; // empty means "all training points"

    Eigen::VectorXd predict(const Eigen::MatrixXd& kernel_to_anchors) const;
};

/// Solves (G + lambda I) alpha = y by a symmetric factorization. lambda = 0
/// requires an invertible Gram.
RidgeSolution ridge_solve_direct(const Eigen::MatrixXd& gram, const Eigen::VectorXd& y,
                                 double lambda);

using KernelFn = std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

struct NystromOptions {
    int anchors = 0;      // m'; 0 means ceil(sqrt(m))
    double lambda = 0.0;
    int max_iters = 0;    // 0 means ceil(10 log m)
    double tol = 1e-8;    // relative residual
    std::uint64_t seed = 0;
};

struct NystromSolution {
    RidgeSolution solution;
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    std::vector<double> residual_history;
};

/// Nystrom-restricted kernel ridge via conjugate gradients on
/// (K_am K_am^T + lambda K_aa) alpha = K_am y. Anchor rows are sampled
/// uniformly without replacement. Matrix-vector products use two rectangular
/// products; the kernel-kernel product is never formed. Iterates carry
/// minimal-residual smoothing so the reported residual norms never increase.
NystromSolution nystrom_cg_solve(const KernelFn& kernel, const Eigen::MatrixXd& x,
                                 const Eigen::VectorXd& y, const NystromOptions& options);

/// k independent ridge solves sharing one factorization; the class-blocked
/// Gram is Theta (x) I so columns of Y decouple.
Eigen::MatrixXd multiclass_block_solve(const Eigen::MatrixXd& gram_scalar,
                                       const Eigen::MatrixXd& y, double lambda);

enum class DynLoss : std::uint8_t { Square = 0, Bce = 1, SoftmaxXent = 2 };

struct NumericDynamicsResult {
    Eigen::MatrixXd predictions;          // m x k logits after T steps
    std::vector<double> losses;           // per recorded step
    std::optional<long> diverged_at;
};

/// Explicit integration of df = eta G dl(y, f) for square/BCE/softmax losses.
/// y is m x k (k = 1 for the scalar losses; any real targets for square,
/// {0,1} for bce, one-hot rows for xent).
NumericDynamicsResult numeric_dynamics(const Eigen::MatrixXd& gram, const Eigen::MatrixXd& y,
                                       DynLoss loss, double eta, long steps,
                                       const Eigen::MatrixXd* f0 = nullptr);

/// Kernel matrix completion with the row-orthogonal column kernel: one
/// independent ridge solve per row over its observed columns, sharing a
/// single column Gram. Rows without observations predict 0.
struct Observation {
    int row;
    int col;
    double value;
};

Eigen::MatrixXd matrix_completion_fit(const Eigen::MatrixXd& z_prior, int rows,
                                      const std::vector<Observation>& observed, int depth,
                                      double lambda);

// "NTKS" solution files: magic, u32 version, f64 lambda, u64 anchor count,
// anchor indices, alpha values.
void save_solution(const RidgeSolution& solution, const std::string& path);
RidgeSolution load_solution(const std::string& path);

} // namespace ntk
