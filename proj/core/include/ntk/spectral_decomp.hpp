#pragma once

#include <Eigen/Core>

namespace ntk {

/// Eigendecomposition of a symmetric PSD Gram matrix with eigenvalues in
/// descending order. Shared immutably by dynamics, solvers, and corrections.
struct SpectralDecomposition {
    Eigen::VectorXd lambdas; // lambda_1 >= ... >= lambda_m
    Eigen::MatrixXd vectors; // columns are the matching orthonormal basis

    int size() const { return static_cast<int>(lambdas.size()); }

    /// Threshold below which a mode counts as null: 1e-12 * lambda_1.
    double null_threshold() const;
    bool is_null_mode(int k) const { return lambdas(k) <= null_threshold(); }

    Eigen::MatrixXd reconstruct() const;

    /// Applies sum_k g(lambda_k) v_k v_k^T to a vector.
    Eigen::VectorXd apply_function(const Eigen::VectorXd& rhs,
                                   const std::function<double(double)>& g) const;
};

SpectralDecomposition decompose(const Eigen::MatrixXd& symmetric);

} // namespace ntk
